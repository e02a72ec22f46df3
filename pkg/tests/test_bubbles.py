import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bubbleparse.bubbles import (
    Arc,
    Bubble,
    BubbleTree,
    DependencyTree,
    Sentence,
    build_tree,
    canonical_form,
    dependency_to_bubbles,
    lexical_head,
    to_dependency_tree,
    trees_equal,
)
from bubbleparse.errors import (
    ComparisonError,
    InputError,
    PreconditionError,
    StructureError,
    UnknownBubbleError,
)
from bubbleparse.validation import (
    CONTAINED_PROJECTIONS,
    CONTAINMENT,
    CONTINUOUS_COVERAGE,
    CONTINUOUS_PROJECTIONS,
    LEXICAL_COVERAGE,
    NO_PARTIAL_OVERLAP,
    NON_DUPLICATION,
    ROOTHOOD,
    first_violation,
    is_projective,
    validate_projective,
    validate_wellformed,
)

from conftest import FIG1_HEADS, FIG1_LABELS, fig1_sentence


# -- a literal, unoptimized reading of the conditions --------------------------

def _reach(tree, a, b):
    """a ->* b by breadth-first search over arcs."""
    frontier, seen = {a}, {a}
    while frontier:
        if b in frontier:
            return True
        nxt = {arc.dependent for arc in tree.arcs if arc.head in frontier} - seen
        seen |= nxt
        frontier = nxt
    return False


def _psi(tree, a):
    return frozenset().union(*(tree.by_id[b].content for b in tree.by_id if _reach(tree, a, b)))


def naive_wellformed(tree):
    B = tree.bubbles
    n = len(tree.sentence)
    phi = {b.id: b.content for b in B}
    for x in B:
        for y in B:
            if x.id != y.id:
                cx, cy = phi[x.id], phi[y.id]
                if cx & cy and not (cx <= cy or cy <= cx):
                    return False
                if cx == cy:
                    return False
    for v in range(n + 1):
        if not any(phi[b.id] == {v} for b in B):
            return False
    holders = [b for b in B if 0 in phi[b.id]]
    if len(holders) != 1 or len(phi[holders[0].id]) != 1:
        return False
    if any(a.dependent == holders[0].id for a in tree.arcs):
        return False
    for x in B:
        for y in B:
            if phi[y.id] < phi[x.id] and not _reach(tree, x.id, y.id):
                return False
    return True


def _continuous(nodes):
    words = [w for w in nodes if w != 0]
    return all(k in nodes for i in words for j in words for k in range(i + 1, j))


def naive_projective(tree):
    for b in tree.bubbles:
        if not _continuous(b.content) or not _continuous(_psi(tree, b.id)):
            return False
    for x in tree.bubbles:
        for y in tree.bubbles:
            if x.id != y.id and _reach(tree, x.id, y.id):
                p = _psi(tree, y.id)
                if not (p <= x.content or not (p & x.content)):
                    return False
    return True


def random_structure(rng, n_max=4):
    """Any bubble set plus an arc set that forms a tree; often ill-formed."""
    n = rng.randint(1, n_max)
    nodes = list(range(n + 1))
    bubbles = [Bubble(v, {v}) for v in nodes if v == 0 or rng.random() > 0.08]
    for k in range(rng.randint(0, 3)):
        pool = nodes if rng.random() < 0.1 else nodes[1:]
        if len(pool) >= 2:
            bubbles.append(Bubble(f"b{k}", set(rng.sample(pool, rng.randint(2, len(pool))))))
    order = [b.id for b in bubbles]
    rng.shuffle(order)
    if 0 in order and rng.random() < 0.9:
        order.remove(0)
        order.insert(0, 0)
    arcs = [Arc(rng.choice(order[:i]), "x", d) for i, d in enumerate(order) if i > 0]
    return BubbleTree(Sentence.from_forms([f"w{i}" for i in range(1, n + 1)]), bubbles, arcs)


@settings(max_examples=400, deadline=None)
@given(st.integers(0, 2**32))
def test_validators_agree_with_literal_reading(seed):
    tree = random_structure(random.Random(seed))
    wf = validate_wellformed(tree).ok
    assert wf == naive_wellformed(tree)
    if wf:
        assert validate_projective(tree).ok == naive_projective(tree)
    else:
        with pytest.raises(PreconditionError):
            validate_projective(tree)


# -- figure 1 ------------------------------------------------------------------

def test_fig1_is_wellformed_and_projective(fig1):
    assert validate_wellformed(fig1).ok
    assert validate_projective(fig1).ok
    assert first_violation(fig1) is None


def test_projection_and_content(fig1):
    assert fig1.content(10) == frozenset(range(3, 10))
    assert fig1.projection(11) == frozenset(range(3, 7))
    assert fig1.projection(2) == frozenset(range(1, 10))
    assert [a.dependent for a in fig1.internal_children(10)] == [11, 7, 9]
    assert [a.dependent for a in fig1.external_children(11)] == [3]
    assert [a.dependent for a in fig1.conjuncts(10)] == [11, 9]
    assert fig1.composite_ids() == [10, 11]


def test_unknown_bubble(fig1):
    with pytest.raises(UnknownBubbleError):
        fig1.content(99)


def test_to_dependency_tree(fig1):
    dep = to_dependency_tree(fig1)
    assert dep.heads == FIG1_HEADS
    assert dep.labels == FIG1_LABELS
    assert lexical_head(fig1, 10) == 4


def test_trees_equal_ignores_ids(fig1):
    renamed = {10: "outer", 11: "inner"}
    arcs = [Arc(renamed.get(a.head, a.head), a.label, renamed.get(a.dependent, a.dependent)) for a in fig1.arcs]
    bubbles = [Bubble(renamed.get(b.id, b.id), b.content) for b in fig1.bubbles]
    other = BubbleTree(fig1.sentence, bubbles, arcs)
    assert trees_equal(fig1, other)
    assert canonical_form(fig1) == canonical_form(other)


def test_trees_equal_label_sensitive(fig1):
    arcs = [Arc(a.head, "dep" if a.label == "det" else a.label, a.dependent) for a in fig1.arcs]
    assert not trees_equal(fig1, BubbleTree(fig1.sentence, fig1.bubbles, arcs))


def test_trees_equal_length_mismatch(fig1):
    short = build_tree(Sentence.from_forms(["a"]), [(0, "root", 1)])
    with pytest.raises(ComparisonError):
        trees_equal(fig1, short)


def test_dependency_roundtrip_without_bubbles():
    dep = DependencyTree(Sentence.from_forms("a b c".split()), (2, 0, 2), ("x", "root", "y"))
    tree = dependency_to_bubbles(dep)
    assert validate_projective(tree).ok
    assert to_dependency_tree(tree) == dep


# -- individual condition failures ------------------------------------------------

def _three():
    return Sentence.from_forms(["a", "b", "c"])


def test_partial_overlap_detected():
    t = build_tree(
        _three(),
        [(0, "r", "A"), ("A", "conj", 1), ("A", "conj", "B"), ("B", "conj", 2), ("B", "conj", 3)],
        {"A": {1, 2}, "B": {2, 3}},
    )
    assert NO_PARTIAL_OVERLAP in validate_wellformed(t).conditions


def test_duplication_detected():
    t = build_tree(
        _three(),
        [(0, "r", "A"), ("A", "conj", "B"), ("B", "conj", 1), ("B", "conj", 2), (2, "x", 3)],
        {"A": {1, 2}, "B": {1, 2}},
    )
    assert NON_DUPLICATION in validate_wellformed(t).conditions


def test_missing_singleton_detected():
    sent = _three()
    bubbles = [Bubble(i, {i}) for i in (0, 1, 2)]
    t = BubbleTree(sent, bubbles, [Arc(0, "r", 1), Arc(1, "x", 2)])
    assert validate_wellformed(t).first_condition == LEXICAL_COVERAGE


def test_root_in_composite_detected():
    t = build_tree(_three(), [(0, "r", 1), (1, "x", 2), (2, "x", 3), (1, "x", "A")], {"A": {0, 3}})
    assert ROOTHOOD in validate_wellformed(t).conditions


def test_containment_detected():
    t = build_tree(
        _three(),
        [(0, "r", 3), (3, "x", "A"), (3, "x", 1), ("A", "conj", 2)],
        {"A": {1, 2}},
    )
    assert CONTAINMENT in validate_wellformed(t).conditions


def test_continuous_coverage_detected():
    t = build_tree(_three(), [(0, "r", 2), (2, "x", "A"), ("A", "conj", 1), ("A", "conj", 3)], {"A": {1, 3}})
    assert validate_wellformed(t).ok
    assert validate_projective(t).first_condition == CONTINUOUS_COVERAGE


def test_continuous_projection_detected():
    t = build_tree(_three(), [(0, "r", 2), (2, "x", 1), (1, "x", 3)])
    assert validate_projective(t).first_condition == CONTINUOUS_PROJECTIONS
    assert not is_projective(t)


def test_contained_projection_detected():
    sent = Sentence.from_forms("a b c d".split())
    t = build_tree(
        sent,
        [(0, "r", "A"), ("A", "conj", 1), ("A", "conj", 2), (2, "x", 3), (3, "x", 4)],
        {"A": {1, 2, 3}},
    )
    assert validate_wellformed(t).ok
    conds = validate_projective(t).conditions
    assert CONTAINED_PROJECTIONS in conds


# -- construction guards ---------------------------------------------------------

def test_bad_inputs():
    with pytest.raises(StructureError):
        Bubble("x", set())
    with pytest.raises(StructureError):
        Arc(1, "x", 1)
    with pytest.raises(InputError):
        Sentence((fig1_sentence().tokens[1],))
    with pytest.raises(StructureError):
        DependencyTree(_three(), (2, 3, 1), ("x", "x", "x"))
    with pytest.raises(StructureError):
        DependencyTree(_three(), (0, 1), ("x", "x"))


@pytest.mark.parametrize("bad", [(1, 0, 2), (0, 0, 5)])
def test_bad_heads(bad):
    with pytest.raises(StructureError):
        DependencyTree(_three(), bad, ("x", "x", "x"))


def test_lexical_head_requires_conjunct():
    t = build_tree(_three(), [(0, "r", "A"), ("A", "cc", 1), ("A", "cc", 2), (2, "x", 3)], {"A": {1, 2}})
    with pytest.raises(StructureError):
        lexical_head(t, "A")

