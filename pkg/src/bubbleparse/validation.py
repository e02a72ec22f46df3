"""Well-formedness and projectivity checks for bubble trees."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable

from .bubbles import ROOT, BubbleTree
from .errors import PreconditionError

TREE = "tree"
NO_PARTIAL_OVERLAP = "no partial overlap"
NON_DUPLICATION = "non-duplication"
LEXICAL_COVERAGE = "lexical coverage"
ROOTHOOD = "roothood"
CONTAINMENT = "containment"
CONTINUOUS_COVERAGE = "continuous coverage"
CONTINUOUS_PROJECTIONS = "continuous projections"
CONTAINED_PROJECTIONS = "contained projections"

WELLFORMED_CONDITIONS = (
    TREE,
    NO_PARTIAL_OVERLAP,
    NON_DUPLICATION,
    LEXICAL_COVERAGE,
    ROOTHOOD,
    CONTAINMENT,
)
PROJECTIVE_CONDITIONS = (CONTINUOUS_COVERAGE, CONTINUOUS_PROJECTIONS, CONTAINED_PROJECTIONS)


@dataclass(frozen=True)
class Violation:
    condition: str
    detail: str
    ids: tuple = ()


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def conditions(self) -> list[str]:
        seen: list[str] = []
        for v in self.violations:
            if v.condition not in seen:
                seen.append(v.condition)
        return seen

    @property
    def first_condition(self) -> str | None:
        return self.violations[0].condition if self.violations else None

    def __bool__(self) -> bool:
        return self.ok


def _is_interval(nodes) -> bool:
    toks = [v for v in nodes if v != ROOT]
    return not toks or max(toks) - min(toks) + 1 == len(toks)


def _tree_violations(tree: BubbleTree) -> list[Violation]:
    out = []
    n = len(tree.sentence)
    counts = Counter(b.id for b in tree.bubbles)
    for bid, c in counts.items():
        if c > 1:
            out.append(Violation(TREE, f"bubble id {bid!r} used {c} times", (bid,)))
    for b in tree.bubbles:
        bad = sorted(v for v in b.content if not (isinstance(v, int) and 0 <= v <= n))
        if bad:
            out.append(Violation(TREE, f"bubble {b.id!r} contains unknown nodes {bad}", (b.id,)))
    ids = set(counts)
    incoming: Counter = Counter()
    for a in tree.arcs:
        for end in (a.head, a.dependent):
            if end not in ids:
                out.append(Violation(TREE, f"arc {a} references unknown bubble {end!r}", (end,)))
        incoming[a.dependent] += 1
    for bid, c in incoming.items():
        if c > 1:
            out.append(Violation(TREE, f"bubble {bid!r} has {c} incoming arcs", (bid,)))
    roots = [bid for bid in counts if incoming[bid] == 0]
    if len(roots) != 1:
        out.append(Violation(TREE, f"arcs must have exactly one root, found {len(roots)}", tuple(roots)))
    for bid in counts:
        seen = set()
        v = bid
        while v in tree.head_arc and v not in seen:
            seen.add(v)
            v = tree.head_arc[v].head
        if v in seen:
            out.append(Violation(TREE, f"bubble {bid!r} lies on a cycle", (bid,)))
            break
    return out


def validate_wellformed(tree: BubbleTree) -> ValidationReport:
    """Check the tree conditions plus the five well-formedness conditions."""
    out = _tree_violations(tree)
    structural_ok = not out
    n = len(tree.sentence)
    bubbles = tree.bubbles

    for a, b in combinations(bubbles, 2):
        ca, cb = a.content, b.content
        if ca & cb and not (ca <= cb or cb <= ca):
            out.append(
                Violation(NO_PARTIAL_OVERLAP, f"bubbles {a.id!r} and {b.id!r} partially overlap", (a.id, b.id))
            )
        if ca == cb:
            out.append(
                Violation(NON_DUPLICATION, f"bubbles {a.id!r} and {b.id!r} have equal content", (a.id, b.id))
            )

    singles = {next(iter(b.content)) for b in bubbles if b.is_singleton}
    for v in range(n + 1):
        if v not in singles:
            out.append(Violation(LEXICAL_COVERAGE, f"no singleton bubble for node {v}"))

    with_root = [b for b in bubbles if ROOT in b.content]
    if len(with_root) != 1:
        out.append(
            Violation(ROOTHOOD, f"root appears in {len(with_root)} bubbles", tuple(b.id for b in with_root))
        )
    for b in with_root:
        if not b.is_singleton:
            out.append(Violation(ROOTHOOD, f"bubble {b.id!r} holding the root is not a singleton", (b.id,)))
        elif b.id in tree.head_arc:
            out.append(Violation(ROOTHOOD, f"root bubble {b.id!r} has a head", (b.id,)))

    if structural_ok:
        for a, b in combinations(bubbles, 2):
            for big, small in ((a, b), (b, a)):
                if small.content < big.content and not tree.is_ancestor(big.id, small.id):
                    out.append(
                        Violation(
                            CONTAINMENT,
                            f"bubble {big.id!r} contains {small.id!r} but does not dominate it",
                            (big.id, small.id),
                        )
                    )
    return ValidationReport(tuple(out))


def _descendants(tree: BubbleTree, bid: Hashable) -> list[Hashable]:
    out = []
    todo = [a.dependent for a in tree.children.get(bid, ())]
    while todo:
        d = todo.pop()
        out.append(d)
        todo.extend(a.dependent for a in tree.children.get(d, ()))
    return out


def validate_projective(tree: BubbleTree) -> ValidationReport:
    """Check the three projectivity conditions of a well-formed tree.

    Raises PreconditionError naming the first failed well-formedness
    condition when the tree is not well-formed.
    """
    wf = validate_wellformed(tree)
    if not wf.ok:
        v = wf.violations[0]
        raise PreconditionError(f"tree is not well-formed: {v.condition}: {v.detail}", v.condition)
    out = []
    for b in tree.bubbles:
        if not _is_interval(b.content):
            out.append(Violation(CONTINUOUS_COVERAGE, f"content of bubble {b.id!r} has a gap", (b.id,)))
    for b in tree.bubbles:
        if not _is_interval(tree.projection(b.id)):
            out.append(Violation(CONTINUOUS_PROJECTIONS, f"projection of bubble {b.id!r} has a gap", (b.id,)))
    for b in tree.bubbles:
        if b.is_singleton:
            # descendants of a singleton never fall inside its one-node content
            continue
        for d in _descendants(tree, b.id):
            psi = tree.projection(d)
            if not (psi <= b.content or not (psi & b.content)):
                out.append(
                    Violation(
                        CONTAINED_PROJECTIONS,
                        f"projection of {d!r} straddles the content of its ancestor {b.id!r}",
                        (b.id, d),
                    )
                )
    return ValidationReport(tuple(out))


def is_projective(tree: BubbleTree) -> bool:
    try:
        return validate_projective(tree).ok
    except PreconditionError:
        return False


def first_violation(tree: BubbleTree) -> str | None:
    """Name of the first failed condition, well-formedness checked first."""
    wf = validate_wellformed(tree)
    if not wf.ok:
        return wf.first_condition
    return validate_projective(tree).first_condition
