"""The Bubble-Hybrid transition system.

Arc-Hybrid's Shift/LeftArc/RightArc plus three bubble transitions:
BubbleOpen groups the top two stack items into a new open bubble (the lower
one becomes its first conjunct), BubbleAttach absorbs the stack top into the
open bubble below it, and BubbleClose moves a finished open bubble back to
the front of the buffer so it can collect left dependents.

Bubble ids are integers: ``0`` is the root singleton, ``1..n`` the token
singletons, and new bubbles are numbered from ``n + 1`` in creation order.
Configurations are immutable; :func:`apply` returns a new one.
"""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .bubbles import ROOT, Arc, Bubble, BubbleTree, Sentence
from .errors import InputError, RejectedTransition, StateError, WalkTimeout


class Kind(enum.IntEnum):
    SHIFT = 0
    LEFT_ARC = 1
    RIGHT_ARC = 2
    BUBBLE_OPEN = 3
    BUBBLE_ATTACH = 4
    BUBBLE_CLOSE = 5


KIND_NAMES = {
    Kind.SHIFT: "Shift",
    Kind.LEFT_ARC: "LeftArc",
    Kind.RIGHT_ARC: "RightArc",
    Kind.BUBBLE_OPEN: "BubbleOpen",
    Kind.BUBBLE_ATTACH: "BubbleAttach",
    Kind.BUBBLE_CLOSE: "BubbleClose",
}
_BY_NAME = {v: k for k, v in KIND_NAMES.items()}
LABELED = frozenset({Kind.LEFT_ARC, Kind.RIGHT_ARC, Kind.BUBBLE_OPEN, Kind.BUBBLE_ATTACH})
FIRST_CONJUNCT = "conj"


@dataclass(frozen=True)
class Transition:
    kind: Kind
    label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if (self.kind in LABELED) != (self.label is not None):
            raise ValueError(f"{KIND_NAMES[self.kind]} {'needs' if self.kind in LABELED else 'takes no'} label")

    def __str__(self) -> str:
        name = KIND_NAMES[self.kind]
        return f"{name}_{self.label}" if self.label is not None else name

    @classmethod
    def parse(cls, text: str) -> "Transition":
        name, _, label = text.strip().partition("_")
        try:
            kind = _BY_NAME[name]
        except KeyError:
            raise ValueError(f"unknown transition {text!r}") from None
        return cls(kind, label if kind in LABELED else None)


def shift() -> Transition:
    return Transition(Kind.SHIFT)


def left_arc(label: str) -> Transition:
    return Transition(Kind.LEFT_ARC, label)


def right_arc(label: str) -> Transition:
    return Transition(Kind.RIGHT_ARC, label)


def bubble_open(label: str) -> Transition:
    return Transition(Kind.BUBBLE_OPEN, label)


def bubble_attach(label: str) -> Transition:
    return Transition(Kind.BUBBLE_ATTACH, label)


def bubble_close() -> Transition:
    return Transition(Kind.BUBBLE_CLOSE)


@dataclass(frozen=True)
class Configuration:
    sentence: Sentence
    stack: tuple[int, ...]
    buffer: tuple[int, ...]
    contents: tuple[frozenset, ...]
    projections: tuple[frozenset, ...]
    arcs: tuple[Arc, ...]
    open: frozenset

    @property
    def s1(self) -> int | None:
        return self.stack[-1] if self.stack else None

    @property
    def b1(self) -> int | None:
        return self.buffer[0] if self.buffer else None

    @property
    def partial(self) -> BubbleTree:
        bubbles = tuple(Bubble(i, c) for i, c in enumerate(self.contents))
        return BubbleTree(self.sentence, bubbles, self.arcs)

    def is_singleton(self, bid: int) -> bool:
        return len(self.contents[bid]) == 1


def initial_config(sentence: Sentence) -> Configuration:
    n = len(sentence)
    if n < 1:
        raise InputError("cannot parse an empty sentence")
    nodes = tuple(frozenset([i]) for i in range(n + 1))
    return Configuration(
        sentence=sentence,
        stack=(ROOT,),
        buffer=tuple(range(1, n + 1)),
        contents=nodes,
        projections=nodes,
        arcs=(),
        open=frozenset(),
    )


def failed_clause(c: Configuration, kind: Kind) -> str | None:
    """The first pre-condition clause of ``kind`` that fails in ``c``, or None."""
    st, buf, op = c.stack, c.buffer, c.open
    if kind == Kind.SHIFT:
        if len(buf) < 1:
            return "|buffer| >= 1"
    elif kind == Kind.LEFT_ARC:
        if len(st) < 1:
            return "|stack| >= 1"
        if len(buf) < 1:
            return "|buffer| >= 1"
        if st[-1] in op:
            return "s1 not open"
        if buf[0] in op:
            return "b1 not open"
        if c.contents[st[-1]] == {ROOT}:
            return "s1 is not the root"
    elif kind == Kind.RIGHT_ARC:
        if len(st) < 2:
            return "|stack| >= 2"
        if st[-1] in op:
            return "s1 not open"
        if st[-2] in op:
            return "s2 not open"
    elif kind == Kind.BUBBLE_OPEN:
        if len(st) < 2:
            return "|stack| >= 2"
        if st[-1] in op:
            return "s1 not open"
        if st[-2] in op:
            return "s2 not open"
        if c.contents[st[-2]] == {ROOT}:
            return "s2 is not the root"
    elif kind == Kind.BUBBLE_ATTACH:
        if len(st) < 2:
            return "|stack| >= 2"
        if st[-1] in op:
            return "s1 not open"
        if st[-2] not in op:
            return "s2 open"
    elif kind == Kind.BUBBLE_CLOSE:
        if len(st) < 1:
            return "|stack| >= 1"
        if st[-1] not in op:
            return "s1 open"
    return None


def valid_kinds(c: Configuration) -> list[Kind]:
    return [k for k in Kind if failed_clause(c, k) is None]


def valid_transitions(c: Configuration, labels: Iterable[str]) -> set[Transition]:
    labels = tuple(labels)
    out = set()
    for k in valid_kinds(c):
        if k in LABELED:
            out.update(Transition(k, lbl) for lbl in labels)
        else:
            out.add(Transition(k))
    return out


def _grow(seq: tuple[frozenset, ...], idx: int, extra: frozenset) -> tuple[frozenset, ...]:
    return seq[:idx] + (seq[idx] | extra,) + seq[idx + 1 :]


def apply(c: Configuration, t: Transition, step: int | None = None) -> Configuration:
    clause = failed_clause(c, t.kind)
    if clause is not None:
        raise RejectedTransition(t, clause, step)
    st, buf = c.stack, c.buffer
    kind = t.kind
    if kind == Kind.SHIFT:
        return Configuration(c.sentence, st + (buf[0],), buf[1:], c.contents, c.projections, c.arcs, c.open)
    if kind == Kind.LEFT_ARC:
        s1, b1 = st[-1], buf[0]
        return Configuration(
            c.sentence,
            st[:-1],
            buf,
            c.contents,
            _grow(c.projections, b1, c.projections[s1]),
            c.arcs + (Arc(b1, t.label, s1),),
            c.open,
        )
    if kind == Kind.RIGHT_ARC:
        s2, s1 = st[-2], st[-1]
        return Configuration(
            c.sentence,
            st[:-1],
            buf,
            c.contents,
            _grow(c.projections, s2, c.projections[s1]),
            c.arcs + (Arc(s2, t.label, s1),),
            c.open,
        )
    if kind == Kind.BUBBLE_OPEN:
        s2, s1 = st[-2], st[-1]
        alpha = len(c.contents)
        content = c.projections[s2] | c.projections[s1]
        return Configuration(
            c.sentence,
            st[:-2] + (alpha,),
            buf,
            c.contents + (content,),
            c.projections + (content,),
            c.arcs + (Arc(alpha, FIRST_CONJUNCT, s2), Arc(alpha, t.label, s1)),
            c.open | {alpha},
        )
    if kind == Kind.BUBBLE_ATTACH:
        s2, s1 = st[-2], st[-1]
        extra = c.projections[s1]
        return Configuration(
            c.sentence,
            st[:-1],
            buf,
            _grow(c.contents, s2, extra),
            _grow(c.projections, s2, extra),
            c.arcs + (Arc(s2, t.label, s1),),
            c.open,
        )
    # BubbleClose
    s1 = st[-1]
    return Configuration(c.sentence, st[:-1], (s1,) + buf, c.contents, c.projections, c.arcs, c.open - {s1})


def is_terminal(c: Configuration) -> bool:
    return c.stack == (ROOT,) and not c.buffer


def extract_tree(c: Configuration) -> BubbleTree:
    if not is_terminal(c):
        raise StateError(
            f"configuration is not terminal (stack size {len(c.stack)}, buffer size {len(c.buffer)})"
        )
    return c.partial


def run(sentence: Sentence, transitions: Sequence[Transition]) -> list[Configuration]:
    """All configurations visited by applying ``transitions`` from the start."""
    configs = [initial_config(sentence)]
    for step, t in enumerate(transitions):
        configs.append(apply(configs[-1], t, step))
    return configs


def random_walk(
    sentence: Sentence,
    seed: int,
    max_steps: int | None = None,
    labels: Sequence[str] = ("dep",),
) -> list[Transition]:
    """Sample uniformly among valid transitions until a terminal configuration.

    Raises WalkTimeout after ``max_steps`` (default ``50 * n``) transitions.
    """
    if max_steps is None:
        max_steps = 50 * len(sentence)
    if max_steps < 1:
        raise InputError("max_steps must be >= 1")
    rng = random.Random(seed)
    c = initial_config(sentence)
    seq: list[Transition] = []
    labels = sorted(labels)
    while not is_terminal(c):
        if len(seq) >= max_steps:
            raise WalkTimeout(f"no terminal configuration after {max_steps} steps (seed {seed})")
        options = sorted(valid_transitions(c, labels), key=lambda t: (t.kind, t.label or ""))
        t = rng.choice(options)
        c = apply(c, t)
        seq.append(t)
    return seq
