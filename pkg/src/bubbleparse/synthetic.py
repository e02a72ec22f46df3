"""Toy English-like sentences with coordination, for tests and demos.

Sentences are generated as UD-style dependency trees together with
coordination annotations and then merged into bubble trees, so they carry
nested coordinations, three-way coordinations, shared modifiers on both
sides, and coordinated verb phrases.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .bubbles import BubbleTree, DependencyTree, Sentence, Token
from .treebank import CoordAnnotation, Treebank, merge

NOUNS = ["dog", "cat", "bird", "fish", "cow", "tea", "bun", "apple", "pear", "book", "pen", "car"]
ADJS = ["old", "big", "red", "hot", "small", "new"]
DETS = ["the", "a", "some"]
VERBS = ["saw", "liked", "owned", "bought", "sold", "found"]
SUBJ = ["I", "we", "they", "she"]
ADVS = ["today", "Friday", "again"]
CCS = ["and", "or"]


@dataclass
class _Builder:
    rng: random.Random
    forms: list[str] = field(default_factory=list)
    tags: list[str] = field(default_factory=list)
    heads: list[int] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    coords: list[tuple] = field(default_factory=list)

    def add(self, form: str, tag: str) -> int:
        self.forms.append(form)
        self.tags.append(tag)
        self.heads.append(-1)
        self.labels.append("_")
        return len(self.forms)

    def attach(self, dep: int, head: int, label: str) -> None:
        self.heads[dep - 1] = head
        self.labels[dep - 1] = label

    @property
    def pos(self) -> int:
        return len(self.forms)

    # phrases return (head position, span start, span end)
    def simple_np(self) -> tuple[int, int, int]:
        start = self.pos + 1
        det = self.add(self.rng.choice(DETS), "DET") if self.rng.random() < 0.6 else None
        adj = self.add(self.rng.choice(ADJS), "ADJ") if self.rng.random() < 0.4 else None
        noun = self.add(self.rng.choice(NOUNS), "NOUN")
        if det:
            self.attach(det, noun, "det")
        if adj:
            self.attach(adj, noun, "amod")
        return noun, start, noun

    def coordination(self, make_conjunct, k: int) -> tuple[int, int, int]:
        """``k`` conjuncts separated by commas, with a coordinator before the last."""
        heads, spans, ccs, puncts = [], [], [], []
        for i in range(k):
            if i > 0:
                if i == k - 1:
                    sep = self.add(self.rng.choice(CCS), "CCONJ")
                    ccs.append(sep)
                else:
                    sep = self.add(",", "PUNCT")
                    puncts.append(sep)
            h, s, e = make_conjunct()
            if i > 0:
                self.attach(sep, h, "cc" if sep in ccs else "punct")
                self.attach(h, heads[0], "conj")
            heads.append(h)
            spans.append((s, e))
        self.coords.append((tuple(ccs), tuple(spans), tuple(puncts)))
        return heads[0], spans[0][0], spans[-1][1]

    def noun_phrase(self, depth: int) -> tuple[int, int, int]:
        r = self.rng.random()
        if depth <= 0 or r < 0.45:
            return self.simple_np()
        start = self.pos + 1
        shared = self.add(self.rng.choice(ADJS), "ADJ") if self.rng.random() < 0.3 else None
        k = 3 if self.rng.random() < 0.3 else 2
        h, _, end = self.coordination(lambda: self.noun_phrase(depth - 1), k)
        if shared:
            self.attach(shared, h, "amod")
        return h, start, end

    def verb_phrase(self) -> tuple[int, int, int]:
        v = self.add(self.rng.choice(VERBS), "VERB")
        o, _, end = self.noun_phrase(2)
        self.attach(o, v, "obj")
        return v, v, end


def synthetic_sentence(rng: random.Random, sent_id: str) -> tuple[DependencyTree, list[CoordAnnotation]]:
    b = _Builder(rng)
    if rng.random() < 0.5:
        subj, _, _ = b.noun_phrase(1)
    else:
        subj = b.add(rng.choice(SUBJ), "PRON")
    if rng.random() < 0.3:
        verb, _, _ = b.coordination(b.verb_phrase, 2)
    else:
        verb, _, _ = b.verb_phrase()
    b.attach(subj, verb, "nsubj")
    if rng.random() < 0.4:
        adv = b.add(rng.choice(ADVS), "ADV")
        b.attach(adv, verb, "advmod")
    stop = b.add(".", "PUNCT")
    b.attach(stop, verb, "punct")
    b.attach(verb, 0, "root")
    tokens = tuple(
        Token(i, f, lemma=f.lower(), upos=t, xpos=t) for i, (f, t) in enumerate(zip(b.forms, b.tags), start=1)
    )
    sent = Sentence(tokens, sent_id, (f"# sent_id = {sent_id}",))
    dep = DependencyTree(sent, tuple(b.heads), tuple(b.labels))
    coords = [
        CoordAnnotation(sent_id, f"c{i}", cc, spans, punct)
        for i, (cc, spans, punct) in enumerate(b.coords, start=1)
    ]
    return dep, coords


def synthetic_corpus(
    size: int, seed: int = 0, min_coords: int = 1, prefix: str = "syn"
) -> tuple[list[DependencyTree], list[CoordAnnotation], Treebank]:
    """``size`` sentences, each with at least ``min_coords`` coordinations."""
    rng = random.Random(seed)
    deps, coords, trees = [], [], []
    while len(trees) < size:
        sid = f"{prefix}{len(trees) + 1}"
        dep, cs = synthetic_sentence(rng, sid)
        if len(cs) < min_coords:
            continue
        deps.append(dep)
        coords.extend(cs)
        trees.append(merge(dep, cs))
    return deps, coords, Treebank(trees)


def synthetic_treebank(size: int, seed: int = 0, min_coords: int = 1) -> list[BubbleTree]:
    return list(synthetic_corpus(size, seed, min_coords)[2])
