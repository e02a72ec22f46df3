"""Coordination metrics (exact / inner / whole), complexity split, UAS/LAS."""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .bubbles import BubbleTree, DependencyTree
from .errors import AlignmentError, InputError, UnsupportedStructureError

METRICS = ("exact", "inner", "whole")
Span = tuple[int, int]


@dataclass(frozen=True)
class Coordination:
    whole_span: Span
    conjunct_spans: tuple[Span, ...]
    cc_positions: tuple[int, ...] = ()
    category: str | None = None

    @property
    def key(self) -> tuple:
        if self.cc_positions:
            return ("cc", min(self.cc_positions))
        return ("span",) + tuple(self.whole_span)

    def inner_pair(self) -> tuple[Span | None, Span | None] | None:
        """Conjunct spans adjacent to the leftmost coordinator (None without one)."""
        if not self.cc_positions:
            return None
        cc = min(self.cc_positions)
        left = [s for s in self.conjunct_spans if s[1] < cc]
        right = [s for s in self.conjunct_spans if s[0] > cc]
        return (left[-1] if left else None, right[0] if right else None)


def _interval(nodes: frozenset, what: str) -> Span:
    lo, hi = min(nodes), max(nodes)
    if hi - lo + 1 != len(nodes):
        raise UnsupportedStructureError(f"{what} is not a contiguous span: {sorted(nodes)}")
    return lo, hi


def extract_coordinations(tree: BubbleTree) -> list[Coordination]:
    """One Coordination per non-singleton bubble, ordered by whole span.

    The whole span runs from the first conjunct to the last; a bubble with
    no conj child falls back to its content.
    """
    out = []
    for bid in tree.composite_ids():
        spans, ccs = [], []
        for arc in tree.internal_children(bid):
            proj = tree.projection(arc.dependent)
            if arc.label == "conj":
                spans.append(_interval(proj, f"conjunct {arc.dependent!r} of bubble {bid!r}"))
            elif arc.label == "cc":
                ccs.extend(sorted(proj))
        spans.sort()
        content = tree.content(bid)
        whole = (spans[0][0], spans[-1][1]) if spans else _interval(content, f"bubble {bid!r}")
        out.append(Coordination(whole, tuple(spans), tuple(sorted(ccs))))
    out.sort(key=lambda c: (c.whole_span[0], -c.whole_span[1]))
    return out


def matches(pred: Coordination, gold: Coordination, metric: str) -> bool:
    if metric == "exact":
        return pred.conjunct_spans == gold.conjunct_spans
    if metric == "whole":
        return pred.whole_span == gold.whole_span
    if metric == "inner":
        gp = gold.inner_pair()
        if gp is None:
            return pred.conjunct_spans == gold.conjunct_spans
        return pred.inner_pair() == gp
    raise InputError(f"unknown metric {metric!r}; expected one of {', '.join(METRICS)}")


def align(pred: Sequence[Coordination], gold: Sequence[Coordination]) -> list[tuple[Coordination, Coordination]]:
    """Pair coordinations that share a key, in left-to-right order within each key."""
    by_key: dict[tuple, list[Coordination]] = defaultdict(list)
    for p in pred:
        by_key[p.key].append(p)
    gold_by_key: dict[tuple, list[Coordination]] = defaultdict(list)
    for g in gold:
        gold_by_key[g.key].append(g)
    pairs = []
    for key, golds in gold_by_key.items():
        pairs.extend(zip(by_key.get(key, []), golds))
    return pairs


@dataclass
class EvalReport:
    metric: str
    matched: int
    predicted_total: int
    gold_total: int
    per_category: dict[str, "EvalReport"] | None = None

    @property
    def precision(self) -> float:
        return self.matched / self.predicted_total if self.predicted_total else 0.0

    @property
    def recall(self) -> float:
        return self.matched / self.gold_total if self.gold_total else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def to_tsv(self) -> str:
        rows = [("all", self)] + sorted((self.per_category or {}).items())
        lines = ["scope\tmetric\tprecision\trecall\tf1\tmatched\tpredicted\tgold"]
        for scope, r in rows:
            lines.append(
                f"{scope}\t{r.metric}\t{r.precision:.4f}\t{r.recall:.4f}\t{r.f1:.4f}\t"
                f"{r.matched}\t{r.predicted_total}\t{r.gold_total}"
            )
        return "\n".join(lines)

    def to_record(self) -> str:
        rec = {
            "metric": self.metric,
            "precision": round(self.precision, 6),
            "recall": round(self.recall, 6),
            "f1": round(self.f1, 6),
            "matched": self.matched,
            "predicted": self.predicted_total,
            "gold": self.gold_total,
        }
        for cat, r in sorted((self.per_category or {}).items()):
            rec[f"{cat}.recall"] = round(r.recall, 6)
            rec[f"{cat}.f1"] = round(r.f1, 6)
        return json.dumps(rec, sort_keys=False)


def _paired_trees(pred: Iterable[BubbleTree], gold: Iterable[BubbleTree]) -> list[tuple[BubbleTree, BubbleTree]]:
    pred_by = {t.sentence.sent_id: t for t in pred}
    gold_list = list(gold)
    gold_ids = [t.sentence.sent_id for t in gold_list]
    if set(pred_by) != set(gold_ids) or len(pred_by) != len(gold_ids):
        missing = sorted(set(gold_ids) ^ set(pred_by))
        raise AlignmentError(f"prediction and gold sentence ids differ: {missing[:5]}")
    out = []
    for g in gold_list:
        p = pred_by[g.sentence.sent_id]
        if len(p.sentence) != len(g.sentence):
            raise AlignmentError(
                f"{g.sentence.sent_id}: {len(p.sentence)} predicted tokens vs {len(g.sentence)} gold tokens"
            )
        out.append((p, g))
    return out


def score_coordinations(
    pred: Iterable[BubbleTree],
    gold: Iterable[BubbleTree],
    metric: str = "exact",
    categories: Mapping[tuple[str, Span], str] | None = None,
) -> EvalReport:
    """Precision/recall/F1 of predicted coordinations against gold.

    ``categories`` optionally maps (sent_id, whole span) of gold
    coordinations to a tag; a per-tag breakdown is then attached.
    """
    if metric not in METRICS:
        raise InputError(f"unknown metric {metric!r}; expected one of {', '.join(METRICS)}")
    matched = n_pred = n_gold = 0
    cat_counts: dict[str, list[int]] = defaultdict(lambda: [0, 0, 0])
    for p_tree, g_tree in _paired_trees(pred, gold):
        sid = g_tree.sentence.sent_id
        pc, gc = extract_coordinations(p_tree), extract_coordinations(g_tree)
        n_pred += len(pc)
        n_gold += len(gc)
        pairs = align(pc, gc)
        matched += sum(matches(p, g, metric) for p, g in pairs)
        if categories:
            for g in gc:
                cat = categories.get((sid, g.whole_span))
                if cat:
                    cat_counts[cat][2] += 1
            for p, g in pairs:
                cat = categories.get((sid, g.whole_span))
                if cat:
                    cat_counts[cat][1] += 1
                    cat_counts[cat][0] += matches(p, g, metric)
    per_cat = None
    if categories:
        per_cat = {c: EvalReport(metric, m, pt, gt) for c, (m, pt, gt) in cat_counts.items()}
    return EvalReport(metric, matched, n_pred, n_gold, per_cat)


def complexity_split(coords: Sequence[Coordination] | BubbleTree) -> str:
    if isinstance(coords, BubbleTree):
        coords = extract_coordinations(coords)
    if not coords:
        return "none"
    if len(coords) == 1 and len(coords[0].conjunct_spans) == 2:
        return "simple"
    return "complex"


def sentence_exact_match(pred: BubbleTree, gold: BubbleTree) -> bool:
    pc, gc = extract_coordinations(pred), extract_coordinations(gold)
    if len(pc) != len(gc):
        return False
    return sum(matches(p, g, "exact") for p, g in align(pc, gc)) == len(gc)


@dataclass
class SplitReport:
    counts: dict[str, int] = field(default_factory=dict)
    correct: dict[str, int] = field(default_factory=dict)

    def rate(self, group: str) -> float:
        n = self.counts.get(group, 0)
        return self.correct.get(group, 0) / n if n else 0.0

    def to_tsv(self) -> str:
        lines = ["group\tsentences\texact_match"]
        for g in ("all", "simple", "complex"):
            lines.append(f"{g}\t{self.counts.get(g, 0)}\t{self.rate(g):.4f}")
        return "\n".join(lines)


def split_by_complexity(pred: Iterable[BubbleTree], gold: Iterable[BubbleTree]) -> SplitReport:
    """Per-sentence exact match over sentences that contain a gold coordination."""
    rep = SplitReport({"all": 0, "simple": 0, "complex": 0}, {"all": 0, "simple": 0, "complex": 0})
    for p, g in _paired_trees(pred, gold):
        group = complexity_split(g)
        if group == "none":
            continue
        ok = sentence_exact_match(p, g)
        for key in ("all", group):
            rep.counts[key] += 1
            rep.correct[key] += ok
    return rep


def attachment_scores(
    pred: Sequence[DependencyTree],
    gold: Sequence[DependencyTree],
    exclude_punct: bool = False,
) -> tuple[float, float]:
    """(UAS, LAS) over all tokens; punctuation counts unless ``exclude_punct``."""
    if len(pred) != len(gold):
        raise AlignmentError(f"{len(pred)} predicted trees vs {len(gold)} gold trees")
    total = uas = las = 0
    for p, g in zip(pred, gold):
        if len(p.heads) != len(g.heads):
            raise AlignmentError(f"{g.sentence.sent_id}: token counts differ")
        for tok, ph, pl, gh, gl in zip(g.sentence.tokens, p.heads, p.labels, g.heads, g.labels):
            if exclude_punct and tok.upos == "PUNCT":
                continue
            total += 1
            if ph == gh:
                uas += 1
                las += pl == gl
    if total == 0:
        return 0.0, 0.0
    return uas / total, las / total
