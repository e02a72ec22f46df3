"""Exhaustive enumeration and uniform sampling of small projective bubble trees.

Trees are generated from a span grammar: a subtree covering tokens
``[i, j]`` is headed either by a token ``h`` or by a bubble whose content is
some ``[a, b]``.  The head's external dependents tile ``[i, h-1]`` (or
``[i, a-1]``) and the right-hand remainder; a bubble's internal children tile
``[a, b]`` with at least two blocks, the first of which carries ``conj``.
Every derivation yields a distinct tree, so no deduplication pass is needed.
"""
from __future__ import annotations

import random
from functools import lru_cache
from typing import Iterator, Sequence

from .bubbles import Arc, Bubble, BubbleTree, Sentence
from .errors import PreconditionError, ResourceGuardError

DEFAULT_CAP = 5
FIRST_CONJUNCT = "conj"

# Derivations are nested tuples:
#   ("tok", h, left_deps, right_deps)
#   ("bub", a, b, internal, left_deps, right_deps)
# where each *_deps / internal is a tuple of (label, derivation).


class _Grammar:
    def __init__(self, n: int, labels: Sequence[str], internal_labels: Sequence[str]):
        self.n = n
        self.labels = tuple(labels)
        self.internal = tuple(internal_labels)
        self.sub_count = lru_cache(maxsize=None)(self._sub_count)
        self.seq_count = lru_cache(maxsize=None)(self._seq_count)
        self.int_count = lru_cache(maxsize=None)(self._int_count)

    # counting -----------------------------------------------------------
    def _seq_count(self, i: int, j: int, internal: bool) -> int:
        """Label-tiled block sequences covering [i, j]; empty span counts once."""
        if i > j:
            return 1
        k_labels = len(self.internal if internal else self.labels)
        return sum(
            self.sub_count(i, k) * k_labels * self.seq_count(k + 1, j, internal)
            for k in range(i, j + 1)
        )

    def _int_count(self, a: int, b: int) -> int:
        """Internal tilings of [a, b]: >= 2 blocks, first labeled conj."""
        total = 0
        for k in range(a, b):
            rest = sum(
                self.sub_count(k + 1, m) * len(self.internal) * self.seq_count(m + 1, b, True)
                for m in range(k + 1, b + 1)
            )
            total += self.sub_count(a, k) * rest
        return total

    def _sub_count(self, i: int, j: int) -> int:
        total = 0
        for h in range(i, j + 1):
            total += self.seq_count(i, h - 1, False) * self.seq_count(h + 1, j, False)
        for a in range(i, j + 1):
            for b in range(a + 1, j + 1):
                total += (
                    self.seq_count(i, a - 1, False)
                    * self.int_count(a, b)
                    * self.seq_count(b + 1, j, False)
                )
        return total

    def total(self) -> int:
        return self.seq_count(1, self.n, False)

    # enumeration --------------------------------------------------------
    def seqs(self, i: int, j: int, internal: bool) -> Iterator[tuple]:
        if i > j:
            yield ()
            return
        labels = self.internal if internal else self.labels
        for k in range(i, j + 1):
            for first in self.subs(i, k):
                for lbl in labels:
                    for rest in self.seqs(k + 1, j, internal):
                        yield ((lbl, first),) + rest

    def internals(self, a: int, b: int) -> Iterator[tuple]:
        for k in range(a, b):
            for first in self.subs(a, k):
                for m in range(k + 1, b + 1):
                    for second in self.subs(k + 1, m):
                        for lbl in self.internal:
                            for rest in self.seqs(m + 1, b, True):
                                yield ((FIRST_CONJUNCT, first), (lbl, second)) + rest

    def subs(self, i: int, j: int) -> Iterator[tuple]:
        for h in range(i, j + 1):
            for left in self.seqs(i, h - 1, False):
                for right in self.seqs(h + 1, j, False):
                    yield ("tok", h, left, right)
        for a in range(i, j + 1):
            for b in range(a + 1, j + 1):
                for left in self.seqs(i, a - 1, False):
                    for inner in self.internals(a, b):
                        for right in self.seqs(b + 1, j, False):
                            yield ("bub", a, b, inner, left, right)

    # uniform sampling ---------------------------------------------------
    def _pick(self, rng: random.Random, weighted):
        """Choose one (weight, payload) item with probability proportional to weight."""
        total = sum(w for w, _ in weighted)
        r = rng.randrange(total)
        for w, payload in weighted:
            if r < w:
                return payload
            r -= w
        raise AssertionError("unreachable")

    def sample_seq(self, rng, i: int, j: int, internal: bool) -> tuple:
        if i > j:
            return ()
        labels = self.internal if internal else self.labels
        k = self._pick(
            rng,
            [
                (self.sub_count(i, k) * self.seq_count(k + 1, j, internal), k)
                for k in range(i, j + 1)
            ],
        )
        return ((rng.choice(labels), self.sample_sub(rng, i, k)),) + self.sample_seq(
            rng, k + 1, j, internal
        )

    def sample_internal(self, rng, a: int, b: int) -> tuple:
        choices = []
        for k in range(a, b):
            for m in range(k + 1, b + 1):
                w = self.sub_count(a, k) * self.sub_count(k + 1, m) * self.seq_count(m + 1, b, True)
                choices.append((w, (k, m)))
        k, m = self._pick(rng, choices)
        first = self.sample_sub(rng, a, k)
        second = self.sample_sub(rng, k + 1, m)
        rest = self.sample_seq(rng, m + 1, b, True)
        return ((FIRST_CONJUNCT, first), (rng.choice(self.internal), second)) + rest

    def sample_sub(self, rng, i: int, j: int) -> tuple:
        choices = []
        for h in range(i, j + 1):
            choices.append((self.seq_count(i, h - 1, False) * self.seq_count(h + 1, j, False), ("tok", h)))
        for a in range(i, j + 1):
            for b in range(a + 1, j + 1):
                w = self.seq_count(i, a - 1, False) * self.int_count(a, b) * self.seq_count(b + 1, j, False)
                choices.append((w, ("bub", a, b)))
        kind = self._pick(rng, choices)
        if kind[0] == "tok":
            h = kind[1]
            return ("tok", h, self.sample_seq(rng, i, h - 1, False), self.sample_seq(rng, h + 1, j, False))
        _, a, b = kind
        left = self.sample_seq(rng, i, a - 1, False)
        inner = self.sample_internal(rng, a, b)
        right = self.sample_seq(rng, b + 1, j, False)
        return ("bub", a, b, inner, left, right)


def _materialize(sentence: Sentence, root_deps: tuple) -> BubbleTree:
    n = len(sentence)
    bubbles = [Bubble(i, frozenset([i])) for i in range(n + 1)]
    arcs: list[Arc] = []
    next_id = [n + 1]

    def visit(node) -> int:
        if node[0] == "tok":
            _, h, left, right = node
            me = h
        else:
            _, a, b, inner, left, right = node
            me = next_id[0]
            next_id[0] += 1
            bubbles.append(Bubble(me, frozenset(range(a, b + 1))))
            for lbl, child in inner:
                arcs.append(Arc(me, lbl, visit(child)))
        for lbl, child in left + right:
            arcs.append(Arc(me, lbl, visit(child)))
        return me

    for lbl, child in root_deps:
        arcs.append(Arc(0, lbl, visit(child)))
    return BubbleTree(sentence, tuple(bubbles), tuple(arcs))


def _check(n: int, cap: int, labels, internal_labels) -> None:
    if n < 1:
        raise PreconditionError(f"sentence length must be >= 1, got {n}")
    if n > cap:
        raise ResourceGuardError(f"refusing to enumerate trees over {n} tokens (cap {cap})")
    if not labels or not internal_labels:
        raise PreconditionError("label sets must be non-empty")


def _placeholder(n: int) -> Sentence:
    return Sentence.from_forms([f"w{i}" for i in range(1, n + 1)])


def count_projective_trees(
    n: int, labels: Sequence[str], internal_labels: Sequence[str] = (FIRST_CONJUNCT,)
) -> int:
    """Number of trees :func:`enumerate_projective_trees` would yield (no cap)."""
    if n < 1:
        raise PreconditionError(f"sentence length must be >= 1, got {n}")
    return _Grammar(n, labels, internal_labels).total()


def enumerate_projective_trees(
    n: int,
    labels: Sequence[str],
    internal_labels: Sequence[str] = (FIRST_CONJUNCT,),
    cap: int = DEFAULT_CAP,
    sentence: Sentence | None = None,
) -> Iterator[BubbleTree]:
    """Yield every projective bubble tree over ``n`` tokens.

    External arcs (including those from the root) take labels from
    ``labels``.  Internal arcs take labels from ``internal_labels`` except
    the leftmost internal child of each bubble, which is always ``conj``;
    this is exactly the class the transition system can build.
    """
    _check(n, cap, labels, internal_labels)
    sentence = sentence or _placeholder(n)
    g = _Grammar(n, sorted(set(labels)), sorted(set(internal_labels)))
    for deps in g.seqs(1, n, False):
        yield _materialize(sentence, deps)


def sample_projective_tree(
    n: int,
    labels: Sequence[str],
    internal_labels: Sequence[str] = (FIRST_CONJUNCT,),
    rng: random.Random | None = None,
    sentence: Sentence | None = None,
) -> BubbleTree:
    """Draw one tree uniformly from the class enumerated above (any ``n``)."""
    if n < 1:
        raise PreconditionError(f"sentence length must be >= 1, got {n}")
    rng = rng or random.Random(0)
    sentence = sentence or _placeholder(n)
    g = _Grammar(n, sorted(set(labels)), sorted(set(internal_labels)))
    return _materialize(sentence, g.sample_seq(rng, 1, n, False))
