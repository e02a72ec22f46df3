"""Bubble trees: dependency trees whose nodes may be coordination bubbles.

A bubble tree over a sentence ``w_1 .. w_n`` is a set of bubbles, each with a
non-empty *content* (a set of node indices, ``0`` being the dummy root RT),
plus a set of labeled arcs that forms a tree over the bubbles.  Token ``i``
always has a singleton bubble whose content is ``{i}``.

All values here are immutable; helpers that need traversal state are cached
on the instance.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import (
    ComparisonError,
    InputError,
    StructureError,
    UnknownBubbleError,
)

ROOT = 0
UNDERSCORE = "_"


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    lemma: str = UNDERSCORE
    upos: str = UNDERSCORE
    xpos: str = UNDERSCORE
    feats: str = UNDERSCORE
    deps: str = UNDERSCORE
    misc: str = UNDERSCORE

    def __post_init__(self):
        if self.index < 1:
            raise InputError(f"token index must be >= 1, got {self.index}")


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    sent_id: str = ""
    comments: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "comments", tuple(self.comments))
        for k, tok in enumerate(self.tokens, start=1):
            if tok.index != k:
                raise InputError(
                    f"sentence {self.sent_id!r}: token indices must be 1..n in order, "
                    f"found {tok.index} at position {k}"
                )

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    @classmethod
    def from_forms(
        cls,
        forms: Sequence[str],
        upos: Sequence[str] | None = None,
        sent_id: str = "",
    ) -> "Sentence":
        tags = list(upos) if upos is not None else [UNDERSCORE] * len(forms)
        toks = tuple(
            Token(i, f, upos=p) for i, (f, p) in enumerate(zip(forms, tags), start=1)
        )
        return cls(toks, sent_id=sent_id)


@dataclass(frozen=True)
class Bubble:
    id: Hashable
    content: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "content", frozenset(self.content))
        if not self.content:
            raise StructureError(f"bubble {self.id!r} has empty content")

    @property
    def is_singleton(self) -> bool:
        return len(self.content) == 1

    @property
    def span(self) -> tuple[int, int]:
        """(first, last) node of the content; only an interval for projective trees."""
        return min(self.content), max(self.content)


@dataclass(frozen=True)
class Arc:
    head: Hashable
    label: str
    dependent: Hashable

    def __post_init__(self):
        if self.head == self.dependent:
            raise StructureError(f"arc from bubble {self.head!r} to itself")


@dataclass(frozen=True)
class DependencyTree:
    """Plain dependency tree; ``heads[i-1]`` is the head of token ``i`` (0 = root)."""

    sentence: Sentence
    heads: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "heads", tuple(self.heads))
        object.__setattr__(self, "labels", tuple(self.labels))
        n = len(self.sentence)
        if len(self.heads) != n or len(self.labels) != n:
            raise StructureError(
                f"sentence {self.sentence.sent_id!r}: expected {n} heads and labels, "
                f"got {len(self.heads)} and {len(self.labels)}"
            )
        for i, h in enumerate(self.heads, start=1):
            if not 0 <= h <= n or h == i:
                raise StructureError(
                    f"sentence {self.sentence.sent_id!r}: token {i} has invalid head {h}"
                )
        state = [0] * (n + 1)  # 0 unseen, 1 on current path, 2 known to reach root
        state[0] = 2
        for start in range(1, n + 1):
            path = []
            v = start
            while state[v] == 0:
                state[v] = 1
                path.append(v)
                v = self.heads[v - 1]
            if state[v] == 1:
                raise StructureError(
                    f"sentence {self.sentence.sent_id!r}: cyclic heads through token {v}"
                )
            for u in path:
                state[u] = 2

    def dependents(self, head: int) -> list[int]:
        return [i for i, h in enumerate(self.heads, start=1) if h == head]


@dataclass(frozen=True)
class BubbleTree:
    sentence: Sentence
    bubbles: tuple[Bubble, ...]
    arcs: tuple[Arc, ...]

    def __post_init__(self):
        object.__setattr__(self, "bubbles", tuple(self.bubbles))
        object.__setattr__(self, "arcs", tuple(self.arcs))

    def __len__(self) -> int:
        return len(self.sentence)

    @cached_property
    def by_id(self) -> dict[Hashable, Bubble]:
        return {b.id: b for b in self.bubbles}

    @cached_property
    def head_arc(self) -> dict[Hashable, Arc]:
        return {a.dependent: a for a in self.arcs}

    @cached_property
    def children(self) -> dict[Hashable, list[Arc]]:
        out: dict[Hashable, list[Arc]] = {b.id: [] for b in self.bubbles}
        for a in self.arcs:
            out.setdefault(a.head, []).append(a)
        return out

    @cached_property
    def singleton_ids(self) -> dict[int, Hashable]:
        """Node index -> id of its singleton bubble."""
        return {next(iter(b.content)): b.id for b in self.bubbles if b.is_singleton}

    @cached_property
    def root_id(self) -> Hashable:
        try:
            return self.singleton_ids[ROOT]
        except KeyError:
            raise StructureError("tree has no singleton bubble for the root") from None

    @cached_property
    def _projections(self) -> dict[Hashable, frozenset[int]]:
        return {}

    def content(self, bubble_id: Hashable) -> frozenset[int]:
        try:
            return self.by_id[bubble_id].content
        except KeyError:
            raise UnknownBubbleError(f"no bubble with id {bubble_id!r}") from None

    def projection(self, bubble_id: Hashable) -> frozenset[int]:
        memo = self._projections
        if bubble_id in memo:
            return memo[bubble_id]
        self.content(bubble_id)  # raises on unknown id
        nodes: set[int] = set()
        seen = {bubble_id}
        todo = [bubble_id]
        while todo:
            b = todo.pop()
            nodes |= self.by_id[b].content if b in self.by_id else frozenset()
            for arc in self.children.get(b, ()):
                if arc.dependent not in seen:
                    seen.add(arc.dependent)
                    todo.append(arc.dependent)
        result = frozenset(nodes)
        memo[bubble_id] = result
        return result

    def is_internal(self, arc: Arc) -> bool:
        """Whether ``arc.dependent`` sits inside the content of ``arc.head``."""
        return self.projection(arc.dependent) <= self.content(arc.head)

    def internal_children(self, bubble_id: Hashable) -> list[Arc]:
        arcs = [a for a in self.children.get(bubble_id, ()) if self.is_internal(a)]
        return sorted(arcs, key=lambda a: min(self.projection(a.dependent)))

    def external_children(self, bubble_id: Hashable) -> list[Arc]:
        arcs = [a for a in self.children.get(bubble_id, ()) if not self.is_internal(a)]
        return sorted(arcs, key=lambda a: min(self.projection(a.dependent)))

    def conjuncts(self, bubble_id: Hashable) -> list[Arc]:
        return [a for a in self.internal_children(bubble_id) if a.label == "conj"]

    def composite_ids(self) -> list[Hashable]:
        """Ids of non-singleton bubbles, ordered by (first node, size)."""
        comp = [b for b in self.bubbles if not b.is_singleton]
        comp.sort(key=lambda b: (min(b.content), len(b.content), sorted(b.content)))
        return [b.id for b in comp]

    def is_ancestor(self, anc: Hashable, desc: Hashable) -> bool:
        """Reflexive-transitive reachability ``anc ->* desc`` along arcs."""
        seen = set()
        v = desc
        while v not in seen:
            if v == anc:
                return True
            seen.add(v)
            arc = self.head_arc.get(v)
            if arc is None:
                return False
            v = arc.head
        return False


def build_tree(
    sentence: Sentence,
    arcs: Iterable[tuple[Hashable, str, Hashable]],
    composites: Mapping[Hashable, Iterable[int]] | None = None,
) -> BubbleTree:
    """Build a tree whose singleton bubbles use node indices as ids.

    ``composites`` maps extra bubble ids to their contents; ``arcs`` are
    ``(head, label, dependent)`` triples over those ids.
    """
    bubbles = [Bubble(i, frozenset([i])) for i in range(len(sentence) + 1)]
    for bid, content in (composites or {}).items():
        bubbles.append(Bubble(bid, frozenset(content)))
    return BubbleTree(sentence, tuple(bubbles), tuple(Arc(h, l, d) for h, l, d in arcs))


def projection(tree: BubbleTree, bubble: Hashable) -> frozenset[int]:
    """All nodes covered by ``bubble`` and its arc descendants."""
    return tree.projection(bubble)


def canonical_form(tree: BubbleTree) -> tuple:
    """Id-free serialization; equal for trees that differ only in bubble ids."""
    key = {b.id: tuple(sorted(b.content)) for b in tree.bubbles}
    order = lambda c: (c[0], len(c), c)  # noqa: E731
    bubbles = tuple(sorted(key.values(), key=order))
    arcs = tuple(
        sorted(
            ((key[a.head], a.label, key[a.dependent]) for a in tree.arcs),
            key=lambda t: (order(t[2]), t[1], order(t[0])),
        )
    )
    return len(tree.sentence), bubbles, arcs


def trees_equal(a: BubbleTree, b: BubbleTree) -> bool:
    if len(a.sentence) != len(b.sentence):
        raise ComparisonError(
            f"cannot compare trees over {len(a.sentence)} and {len(b.sentence)} tokens"
        )
    return canonical_form(a) == canonical_form(b)


def lexical_head(tree: BubbleTree, bubble_id: Hashable) -> int:
    """Token a bubble collapses onto: itself if singleton, else its first conjunct's."""
    seen = set()
    b = bubble_id
    while True:
        content = tree.content(b)
        if len(content) == 1:
            return next(iter(content))
        if b in seen:
            raise StructureError(f"cyclic conjunct chain at bubble {b!r}")
        seen.add(b)
        conj = tree.conjuncts(b)
        if not conj:
            raise StructureError(f"bubble {b!r} has no conj-labeled internal child")
        b = conj[0].dependent


def to_dependency_tree(tree: BubbleTree) -> DependencyTree:
    """Collapse every bubble onto its first conjunct (UD-style coordination).

    Later conjuncts attach to the first one with ``conj``; every other
    internal child (``cc``, ``punct``, ...) attaches to the nearest conjunct
    on its right, or to the last conjunct when none follows.
    """
    n = len(tree.sentence)
    heads = [-1] * n
    labels = [""] * n
    for arc in tree.arcs:
        dep_tok = lexical_head(tree, arc.dependent)
        head_content = tree.content(arc.head)
        if len(head_content) > 1 and tree.is_internal(arc):
            conj = tree.conjuncts(arc.head)
            if not conj:
                raise StructureError(f"bubble {arc.head!r} has no conj-labeled internal child")
            if arc.dependent == conj[0].dependent:
                continue
            if arc.label == "conj":
                head_tok = lexical_head(tree, conj[0].dependent)
            else:
                pos = min(tree.projection(arc.dependent))
                following = [c for c in conj if min(tree.projection(c.dependent)) > pos]
                host = following[0] if following else conj[-1]
                head_tok = lexical_head(tree, host.dependent)
        else:
            head_tok = lexical_head(tree, arc.head)
        if dep_tok == ROOT:
            raise StructureError("the root bubble cannot be a dependent")
        heads[dep_tok - 1] = head_tok
        labels[dep_tok - 1] = arc.label
    missing = [i + 1 for i, h in enumerate(heads) if h < 0]
    if missing:
        raise StructureError(f"tokens without a head after collapsing: {missing}")
    return DependencyTree(tree.sentence, tuple(heads), tuple(labels))


def dependency_to_bubbles(dep: DependencyTree) -> BubbleTree:
    """The trivial bubble tree with only singleton bubbles."""
    arcs = [(h, l, i) for i, (h, l) in enumerate(zip(dep.heads, dep.labels), start=1)]
    return build_tree(dep.sentence, arcs)
