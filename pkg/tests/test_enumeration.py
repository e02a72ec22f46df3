import random
from itertools import combinations, product

import pytest

from bubbleparse.bubbles import Arc, Bubble, BubbleTree, Sentence, canonical_form
from bubbleparse.enumeration import count_projective_trees, enumerate_projective_trees, sample_projective_tree
from bubbleparse.errors import PreconditionError, ResourceGuardError
from bubbleparse.oracle import check_supported
from bubbleparse.transitions import apply, initial_config, is_terminal, extract_tree, valid_transitions
from bubbleparse.validation import is_projective, validate_projective

UNLABELED = [1, 4, 25, 191, 1627, 14827]
TWO_LABELS = [2, 16, 200, 3056, 52064, 948928]


def _acyclic(parent):
    for start in parent:
        seen, v = set(), start
        while v in parent:
            if v in seen:
                return False
            seen.add(v)
            v = parent[v]
    return True


def brute_force_counts(n, n_labels, n_internal):
    """(structures, labeled trees) by generate-and-filter over all parent maps.

    Composite contents are restricted to token intervals, since any other
    content already breaks continuous coverage.
    """
    sent = Sentence.from_forms([f"w{i}" for i in range(1, n + 1)])
    intervals = [frozenset(range(i, j + 1)) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    structures = labeled = 0
    for k in range(len(intervals) + 1):
        for comps in combinations(intervals, k):
            ids = list(range(1, n + 1)) + [f"c{i}" for i in range(k)]
            bubbles = [Bubble(v, {v}) for v in range(n + 1)] + [Bubble(f"c{i}", c) for i, c in enumerate(comps)]
            for heads in product([0] + ids, repeat=len(ids)):
                parent = dict(zip(ids, heads))
                if any(d == h for d, h in parent.items()) or not _acyclic(parent):
                    continue
                tree = BubbleTree(sent, bubbles, [Arc(h, "x", d) for d, h in parent.items()])
                if not is_projective(tree):
                    continue
                internal = sum(len(tree.internal_children(c)) for c in tree.composite_ids())
                if any(len(tree.internal_children(c)) < 2 for c in tree.composite_ids()):
                    continue
                structures += 1
                external = len(ids) - internal
                labeled += n_labels**external * n_internal ** (internal - k)
    return structures, labeled


@pytest.mark.parametrize("n", [1, 2, 3])
def test_counts_match_brute_force(n):
    structures, labeled = brute_force_counts(n, 2, 2)
    assert structures == UNLABELED[n - 1] == count_projective_trees(n, ["dep"])
    assert labeled == TWO_LABELS[n - 1] == count_projective_trees(n, ["a", "b"], ["conj", "cc"])


def test_count_sequences():
    assert [count_projective_trees(n, ["dep"]) for n in range(1, 7)] == UNLABELED
    assert [count_projective_trees(n, ["a", "b"], ["conj", "cc"]) for n in range(1, 7)] == TWO_LABELS


@pytest.mark.parametrize("n", [1, 2, 3])
def test_enumeration_distinct_valid_and_counted(n):
    trees = list(enumerate_projective_trees(n, ["a", "b"], ["conj", "cc"]))
    assert len(trees) == count_projective_trees(n, ["a", "b"], ["conj", "cc"])
    assert len({canonical_form(t) for t in trees}) == len(trees)
    for t in trees:
        assert validate_projective(t).ok
        check_supported(t)


def _reachable(n, labels):
    """Canonical forms of every terminal tree reachable by exhaustive search."""
    sent = Sentence.from_forms([f"w{i}" for i in range(1, n + 1)])
    out, todo, seen = set(), [initial_config(sent)], set()
    while todo:
        c = todo.pop()
        key = (c.stack, c.buffer, c.contents, frozenset(c.arcs), c.open)
        if key in seen:
            continue
        seen.add(key)
        if is_terminal(c):
            out.add(canonical_form(extract_tree(c)))
            continue
        todo.extend(apply(c, t) for t in valid_transitions(c, labels))
    return out


@pytest.mark.parametrize("n", [1, 2, 3])
def test_reachable_set_equals_enumeration(n):
    # with a single label set the transition system can use any label anywhere
    labels = ["conj", "x"]
    reached = _reachable(n, labels)
    enumerated = {canonical_form(t) for t in enumerate_projective_trees(n, ["conj", "x"], ["conj", "x"])}
    assert reached == enumerated


def test_sampling_is_roughly_uniform():
    rng = random.Random(0)
    counts: dict = {}
    draws = 4000
    for _ in range(draws):
        t = sample_projective_tree(2, ["a"], ["conj"], rng=rng)
        counts[canonical_form(t)] = counts.get(canonical_form(t), 0) + 1
    assert len(counts) == 4
    for c in counts.values():
        assert abs(c / draws - 0.25) < 0.03


def test_guards():
    with pytest.raises(ResourceGuardError):
        list(enumerate_projective_trees(6, ["a"]))
    with pytest.raises(PreconditionError):
        list(enumerate_projective_trees(0, ["a"]))
    with pytest.raises(PreconditionError):
        list(enumerate_projective_trees(2, []))
    with pytest.raises(PreconditionError):
        sample_projective_tree(0, ["a"])
