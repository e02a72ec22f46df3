"""Static oracle: the canonical transition sequence that builds a gold tree.

Every head is handled the same way.  Its left dependents are built first
and left on the stack; a non-singleton head is then assembled from its
internal children (BubbleOpen after the first two, BubbleAttach after each
later one, then BubbleClose, which parks it on the buffer); LeftArcs attach
the waiting left dependents, Shift moves the head onto the stack, and each
right dependent is built and immediately attached with RightArc.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

from .bubbles import BubbleTree, Sentence
from .errors import IncompleteSequenceError, PreconditionError, UnsupportedStructureError
from .transitions import (
    FIRST_CONJUNCT,
    Configuration,
    Transition,
    apply,
    bubble_attach,
    bubble_close,
    bubble_open,
    extract_tree,
    initial_config,
    is_terminal,
    left_arc,
    right_arc,
    shift,
)
from .validation import validate_projective


@dataclass(frozen=True)
class OracleResult:
    transitions: tuple[Transition, ...]
    per_step_configs: tuple[Configuration, ...] | None = None

    def __len__(self) -> int:
        return len(self.transitions)


def check_supported(tree: BubbleTree) -> None:
    """Raise unless every bubble has >= 2 internal children, the first one conj."""
    for bid in tree.composite_ids():
        internal = tree.internal_children(bid)
        if len(internal) < 2:
            raise UnsupportedStructureError(
                f"bubble {bid!r} has {len(internal)} internal children; at least 2 are required"
            )
        if internal[0].label != FIRST_CONJUNCT:
            raise UnsupportedStructureError(
                f"first internal child of bubble {bid!r} is labeled {internal[0].label!r}, not 'conj'"
            )


def _build(tree: BubbleTree, bid: Hashable, out: list[Transition]) -> None:
    content = tree.content(bid)
    lo = min(content)
    left, right = [], []
    for arc in tree.external_children(bid):
        (left if max(tree.projection(arc.dependent)) < lo else right).append(arc)
    for arc in left:
        _build(tree, arc.dependent, out)
    if len(content) > 1:
        internal = tree.internal_children(bid)
        _build(tree, internal[0].dependent, out)
        _build(tree, internal[1].dependent, out)
        out.append(bubble_open(internal[1].label))
        for arc in internal[2:]:
            _build(tree, arc.dependent, out)
            out.append(bubble_attach(arc.label))
        out.append(bubble_close())
    for arc in reversed(left):
        out.append(left_arc(arc.label))
    out.append(shift())
    for arc in right:
        _build(tree, arc.dependent, out)
        out.append(right_arc(arc.label))


def derive_oracle(tree: BubbleTree, keep_configs: bool = False) -> OracleResult:
    report = validate_projective(tree)
    if not report.ok:
        v = report.violations[0]
        raise PreconditionError(f"tree is not projective: {v.condition}: {v.detail}", v.condition)
    check_supported(tree)
    out: list[Transition] = []
    for arc in tree.external_children(tree.root_id):
        _build(tree, arc.dependent, out)
        out.append(right_arc(arc.label))
    configs = None
    if keep_configs:
        c = initial_config(tree.sentence)
        configs = [c]
        for t in out:
            c = apply(c, t)
            configs.append(c)
        configs = tuple(configs)
    return OracleResult(tuple(out), configs)


def verify_sequence(sentence: Sentence, transitions: Sequence[Transition]) -> BubbleTree:
    """Replay ``transitions`` and return the finished tree.

    RejectedTransition carries the 0-based index of the failing step.
    """
    c = initial_config(sentence)
    for step, t in enumerate(transitions):
        c = apply(c, t, step)
    if not is_terminal(c):
        raise IncompleteSequenceError(
            f"sequence of {len(transitions)} transitions ends in a non-terminal configuration "
            f"(stack size {len(c.stack)}, buffer size {len(c.buffer)})"
        )
    return extract_tree(c)
