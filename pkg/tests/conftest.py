from __future__ import annotations

import random
from pathlib import Path

import pytest

from bubbleparse.bubbles import DependencyTree, Sentence, build_tree
from bubbleparse.enumeration import sample_projective_tree
from bubbleparse.transitions import Transition

DATA = Path(__file__).parent / "data"

FIG1_FORMS = "I prefer hot coffee or tea and a bun".split()
FIG1_TAGS = ["PRON", "VERB", "ADJ", "NOUN", "CCONJ", "NOUN", "CCONJ", "DET", "NOUN"]
FIG1_HEADS = (2, 0, 4, 2, 6, 4, 9, 9, 4)
FIG1_LABELS = ("nsubj", "root", "amod", "obj", "cc", "conj", "cc", "det", "conj")
FIG2 = (
    "Shift LeftArc_nsubj Shift Shift Shift Shift BubbleOpen_cc Shift BubbleAttach_conj BubbleClose "
    "LeftArc_amod Shift Shift BubbleOpen_cc Shift LeftArc_det Shift BubbleAttach_conj BubbleClose "
    "Shift RightArc_obj RightArc_root"
).split()

_RESULTS: dict[int, tuple[bool, str]] = {}


def fig1_sentence() -> Sentence:
    return Sentence.from_forms(FIG1_FORMS, FIG1_TAGS, sent_id="s1")


def fig1_tree():
    # 10 = outer bubble (hot coffee or tea and a bun), 11 = inner (coffee or tea)
    arcs = [
        (0, "root", 2), (2, "nsubj", 1), (2, "obj", 10),
        (10, "conj", 11), (10, "cc", 7), (10, "conj", 9), (9, "det", 8),
        (11, "amod", 3), (11, "conj", 4), (11, "cc", 5), (11, "conj", 6),
    ]
    return build_tree(fig1_sentence(), arcs, {10: range(3, 10), 11: range(4, 7)})


def fig1_dependency() -> DependencyTree:
    return DependencyTree(fig1_sentence(), FIG1_HEADS, FIG1_LABELS)


def fig2_sequence() -> list[Transition]:
    return [Transition.parse(t) for t in FIG2]


def random_tree(rng: random.Random, n_max: int = 6, labels=("a", "b"), internal=("conj", "cc")):
    n = rng.randint(1, n_max)
    return sample_projective_tree(n, labels, internal, rng=rng)


@pytest.fixture
def fig1():
    return fig1_tree()


@pytest.fixture
def criterion():
    """Record a pass/fail line for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> None:
        _RESULTS[number] = (ok, detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        ok, detail = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
