"""Treebank formats and the dependency-tree + coordination merge.

Three text formats, all UTF-8 with LF line endings:

* CoNLL-U, restricted to plain token lines (no multiword or empty nodes).
* A coordination TSV with header ``sent_id  coord_id  cc  conjuncts  punct``
  and an optional sixth ``category`` column.  ``cc`` and ``punct`` are
  comma-separated token indices, ``conjuncts`` is ``i-j;k-l;...``.
* CoNLL-UB: CoNLL-U token lines whose HEAD may also be ``B<k>``, followed by
  one ``B<k> <span> <HEAD> <DEPREL>`` line per non-singleton bubble.  Bubbles
  are numbered by (first token, width).  A span is ``i-j``; the reader also
  accepts comma-joined ranges such as ``2,4-5`` so that broken, non-contiguous
  trees can be stored for validation.
"""
from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Sequence, Union

from .bubbles import (
    ROOT,
    Arc,
    Bubble,
    BubbleTree,
    DependencyTree,
    Sentence,
    Token,
)
from .errors import (
    AlignmentError,
    AnnotationError,
    FormatError,
    InputError,
    StructureError,
    UnsupportedFeatureError,
    UnsupportedStructureError,
)
from .validation import validate_projective, validate_wellformed

log = logging.getLogger(__name__)

AnyTree = Union[DependencyTree, BubbleTree]
QUOTES = frozenset({"``", "''", '"', "“", "”", "„"})
COORD_HEADER = ("sent_id", "coord_id", "cc", "conjuncts", "punct")


@dataclass
class Treebank:
    trees: list = field(default_factory=list)
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        self.trees = list(self.trees)
        seen = set()
        for t in self.trees:
            sid = t.sentence.sent_id
            if sid in seen:
                raise InputError(f"duplicate sent_id {sid!r}")
            seen.add(sid)

    def __len__(self) -> int:
        return len(self.trees)

    def __iter__(self) -> Iterator:
        return iter(self.trees)

    def __getitem__(self, i):
        return self.trees[i]

    @property
    def sentences(self) -> list[tuple[Sentence, AnyTree]]:
        return [(t.sentence, t) for t in self.trees]

    def by_id(self) -> dict[str, AnyTree]:
        return {t.sentence.sent_id: t for t in self.trees}


# ---------------------------------------------------------------------------
# shared block reader


def _blocks(text: str) -> Iterator[tuple[int, list[tuple[int, str]]]]:
    """Yield (first line number, [(line number, line), ...]) per sentence."""
    block: list[tuple[int, str]] = []
    for no, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if line.strip() == "":
            if block:
                yield block[0][0], block
                block = []
            continue
        block.append((no, line))
    if block:
        yield block[0][0], block


def _sent_id(comments: Sequence[str], ordinal: int) -> str:
    for c in comments:
        m = re.match(r"#\s*sent_id\s*=\s*(.*\S)\s*$", c)
        if m:
            return m.group(1)
    return str(ordinal)


def _comment_lines(sentence: Sentence) -> list[str]:
    lines = list(sentence.comments)
    if sentence.sent_id and not any(re.match(r"#\s*sent_id\s*=", c) for c in lines):
        lines.insert(0, f"# sent_id = {sentence.sent_id}")
    return lines


def _token(cols: list[str], index: int) -> Token:
    return Token(
        index=index,
        form=cols[1],
        lemma=cols[2],
        upos=cols[3],
        xpos=cols[4],
        feats=cols[5],
        deps=cols[8],
        misc=cols[9],
    )


def _token_line(tok: Token, head: str, label: str) -> str:
    return "\t".join(
        [str(tok.index), tok.form, tok.lemma, tok.upos, tok.xpos, tok.feats, head, label, tok.deps, tok.misc]
    )


def _read_text(path) -> str:
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read()


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# CoNLL-U


def parse_conllu(text: str, strict: bool = True, path: str | None = None) -> list[DependencyTree]:
    out = []
    ordinal = 0
    for _, block in _blocks(text):
        ordinal += 1
        try:
            out.append(_parse_conllu_block(block, ordinal, strict, path))
        except (FormatError, StructureError) as exc:
            if strict:
                raise
            log.warning("skipping sentence %d: %s", ordinal, exc)
    return out


def _parse_conllu_block(block, ordinal: int, strict: bool, path) -> DependencyTree:
    comments, tokens, heads, labels = [], [], [], []
    for no, line in block:
        if line.startswith("#"):
            if tokens:
                raise FormatError("comment after token lines", no, path)
            comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise FormatError(f"expected 10 tab-separated columns, found {len(cols)}", no, path)
        if "-" in cols[0] or "." in cols[0]:
            msg = f"multiword token or empty node {cols[0]!r} is not supported"
            if strict:
                raise UnsupportedFeatureError(msg, no, path)
            log.warning("%s:%d: %s; line skipped", path or "<text>", no, msg)
            continue
        try:
            idx = int(cols[0])
            head = int(cols[6])
        except ValueError:
            raise FormatError(f"non-integer ID or HEAD in {line!r}", no, path) from None
        if idx != len(tokens) + 1:
            raise FormatError(f"token ID {idx} out of sequence", no, path)
        tokens.append(_token(cols, idx))
        heads.append(head)
        labels.append(cols[7])
    if not tokens:
        raise FormatError("sentence without token lines", block[0][0], path)
    sent = Sentence(tuple(tokens), _sent_id(comments, ordinal), tuple(comments))
    return DependencyTree(sent, tuple(heads), tuple(labels))


def format_conllu(trees: Iterable[DependencyTree]) -> str:
    parts = []
    for t in trees:
        lines = _comment_lines(t.sentence)
        for tok, h, l in zip(t.sentence.tokens, t.heads, t.labels):
            lines.append(_token_line(tok, str(h), l))
        parts.append("\n".join(lines) + "\n\n")
    return "".join(parts)


def read_conllu(path, strict: bool = True) -> Treebank:
    return Treebank(parse_conllu(_read_text(path), strict, str(path)), (os.fspath(path),))


def write_conllu(treebank: Iterable[DependencyTree], path) -> None:
    _write_text(path, format_conllu(treebank))


# ---------------------------------------------------------------------------
# coordination annotations


@dataclass(frozen=True)
class CoordAnnotation:
    sent_id: str
    coord_id: str
    cc_positions: tuple[int, ...]
    conjunct_spans: tuple[tuple[int, int], ...]
    punct_positions: tuple[int, ...] = ()
    category: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "cc_positions", tuple(self.cc_positions))
        object.__setattr__(self, "conjunct_spans", tuple(tuple(s) for s in self.conjunct_spans))
        object.__setattr__(self, "punct_positions", tuple(self.punct_positions))
        where = f"{self.sent_id}/{self.coord_id}"
        spans = self.conjunct_spans
        if len(spans) < 2:
            raise AnnotationError(f"{where}: a coordination needs at least 2 conjuncts, got {len(spans)}")
        for i, j in spans:
            if i > j or i < 1:
                raise AnnotationError(f"{where}: bad conjunct span {i}-{j}")
        for (_, j1), (i2, _) in zip(spans, spans[1:]):
            if i2 <= j1:
                raise AnnotationError(f"{where}: conjunct spans overlap or are unsorted")
        lo, hi = self.whole_span
        for kind, positions in (("cc", self.cc_positions), ("punct", self.punct_positions)):
            for p in positions:
                if not lo < p < hi:
                    raise AnnotationError(f"{where}: {kind} position {p} outside the phrase {lo}-{hi}")
                if any(i <= p <= j for i, j in spans):
                    raise AnnotationError(f"{where}: {kind} position {p} inside a conjunct")

    @property
    def whole_span(self) -> tuple[int, int]:
        return self.conjunct_spans[0][0], self.conjunct_spans[-1][1]


def _int_list(field_: str, where: str) -> tuple[int, ...]:
    field_ = field_.strip()
    if not field_:
        return ()
    try:
        return tuple(int(x) for x in field_.split(","))
    except ValueError:
        raise AnnotationError(f"{where}: bad integer list {field_!r}") from None


def _spans(field_: str, where: str) -> tuple[tuple[int, int], ...]:
    out = []
    for part in field_.strip().split(";"):
        if not part:
            continue
        m = re.fullmatch(r"(\d+)-(\d+)", part.strip())
        if not m:
            raise AnnotationError(f"{where}: bad conjunct span {part!r}")
        out.append((int(m.group(1)), int(m.group(2))))
    return tuple(out)


def parse_coord_tsv(text: str, path: str | None = None) -> list[CoordAnnotation]:
    out = []
    header_seen = False
    for no, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if not header_seen:
            if tuple(cols[:5]) != COORD_HEADER:
                raise FormatError(f"expected header {' '.join(COORD_HEADER)!r}", no, path)
            header_seen = True
            continue
        if len(cols) not in (5, 6):
            raise FormatError(f"expected 5 or 6 tab-separated fields, found {len(cols)}", no, path)
        where = f"{path or '<text>'}:{no}"
        try:
            out.append(
                CoordAnnotation(
                    sent_id=cols[0],
                    coord_id=cols[1],
                    cc_positions=_int_list(cols[2], where),
                    conjunct_spans=_spans(cols[3], where),
                    punct_positions=_int_list(cols[4], where),
                    category=(cols[5] or None) if len(cols) == 6 else None,
                )
            )
        except AnnotationError as exc:
            raise AnnotationError(f"line {no}: {exc}") from None
    return out


def format_coord_tsv(coords: Iterable[CoordAnnotation]) -> str:
    coords = list(coords)
    with_cat = any(c.category for c in coords)
    header = list(COORD_HEADER) + (["category"] if with_cat else [])
    lines = ["\t".join(header)]
    for c in coords:
        row = [
            c.sent_id,
            c.coord_id,
            ",".join(map(str, c.cc_positions)),
            ";".join(f"{i}-{j}" for i, j in c.conjunct_spans),
            ",".join(map(str, c.punct_positions)),
        ]
        if with_cat:
            row.append(c.category or "")
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


def read_coord_tsv(path) -> list[CoordAnnotation]:
    return parse_coord_tsv(_read_text(path), str(path))


def write_coord_tsv(coords: Iterable[CoordAnnotation], path) -> None:
    _write_text(path, format_coord_tsv(coords))


def strip_quotes(coord: CoordAnnotation, sentence: Sentence) -> CoordAnnotation:
    """Pull quotation-mark tokens off the edges of each conjunct span."""
    forms = {t.index: t.form for t in sentence.tokens}
    spans = []
    for i, j in coord.conjunct_spans:
        while i < j and forms.get(i) in QUOTES:
            i += 1
        while j > i and forms.get(j) in QUOTES:
            j -= 1
        spans.append((i, j))
    lo, hi = spans[0][0], spans[-1][1]
    inside = lambda p: lo < p < hi and not any(a <= p <= b for a, b in spans)  # noqa: E731
    quotes = [p for p in range(lo + 1, hi) if inside(p) and forms.get(p) in QUOTES]
    punct = sorted(set(p for p in coord.punct_positions if inside(p)) | set(quotes) - set(coord.cc_positions))
    return CoordAnnotation(
        coord.sent_id, coord.coord_id, coord.cc_positions, tuple(spans), tuple(punct), coord.category
    )


def group_by_sentence(coords: Iterable[CoordAnnotation]) -> dict[str, list[CoordAnnotation]]:
    out: dict[str, list[CoordAnnotation]] = {}
    for c in coords:
        out.setdefault(c.sent_id, []).append(c)
    return out


def coords_from_tree(tree: BubbleTree) -> list[CoordAnnotation]:
    """Coordination annotations describing the bubbles of a projective tree."""
    out = []
    for k, bid in enumerate(tree.composite_ids(), start=1):
        internal = tree.internal_children(bid)
        spans = []
        cc, punct = [], []
        for arc in internal:
            proj = tree.projection(arc.dependent)
            if arc.label == "conj":
                spans.append((min(proj), max(proj)))
            elif arc.label == "cc":
                cc.append(min(proj))
            elif arc.label == "punct":
                punct.append(min(proj))
        out.append(CoordAnnotation(tree.sentence.sent_id, f"c{k}", tuple(cc), tuple(spans), tuple(punct)))
    return out


# ---------------------------------------------------------------------------
# merge


def _check_nesting(coords: Sequence[CoordAnnotation]) -> None:
    for x in range(len(coords)):
        for y in range(x + 1, len(coords)):
            a, b = coords[x], coords[y]
            (alo, ahi), (blo, bhi) = a.whole_span, b.whole_span
            if ahi < blo or bhi < alo:
                continue
            if (alo, ahi) == (blo, bhi):
                raise UnsupportedStructureError(
                    f"{a.sent_id}: coordinations {a.coord_id} and {b.coord_id} share the span {alo}-{ahi}"
                )
            outer, inner = (a, b) if alo <= blo and bhi <= ahi else (b, a)
            (ilo, ihi) = inner.whole_span
            if not (outer.whole_span[0] <= ilo and ihi <= outer.whole_span[1]) or not any(
                i <= ilo and ihi <= j for i, j in outer.conjunct_spans
            ):
                raise UnsupportedStructureError(
                    f"{a.sent_id}: coordinations {a.coord_id} and {b.coord_id} cross"
                )


def merge(dep: DependencyTree, coords: Sequence[CoordAnnotation]) -> BubbleTree:
    """Turn a dependency tree plus coordination spans into a bubble tree.

    Coordinations are processed innermost first.  Each becomes a bubble over
    its whole phrase; conjunct roots become ``conj`` children, coordinators
    ``cc`` and marked punctuation ``punct``.  Dependents of a conjunct root
    that fall outside the phrase are shared and move up to the bubble, which
    takes over the head and label of the (first suitable) conjunct root.
    Finally any ``conj`` arc left outside a bubble is relabeled ``dep``.
    """
    sent = dep.sentence
    n = len(sent)
    sid = sent.sent_id
    coords = list(coords)
    for c in coords:
        if c.whole_span[1] > n:
            raise AlignmentError(f"{sid}/{c.coord_id}: span {c.whole_span} exceeds {n} tokens")
    _check_nesting(coords)

    head: dict[int, int] = {i: h for i, h in enumerate(dep.heads, start=1)}
    label: dict[int, str] = {i: l for i, l in enumerate(dep.labels, start=1)}
    region: dict[int, frozenset] = {i: frozenset([i]) for i in range(n + 1)}
    internal: set[int] = set()
    bubbles: list[Bubble] = []

    order = sorted(coords, key=lambda c: (c.whole_span[1] - c.whole_span[0], c.whole_span[0]))
    for c in order:
        lo, hi = c.whole_span
        phrase = frozenset(range(lo, hi + 1))
        active = [x for x in head if x not in internal]
        roots = []
        for i, j in c.conjunct_spans:
            span = frozenset(range(i, j + 1))
            found = [x for x in active if region[x] <= span and not region[head[x]] <= span]
            if len(found) != 1:
                raise AlignmentError(
                    f"{sid}/{c.coord_id}: conjunct span {i}-{j} does not match a single subtree "
                    f"(found {len(found)} roots)"
                )
            roots.append(found[0])
        covered = set().union(*(range(i, j + 1) for i, j in c.conjunct_spans))
        gap = [x for x in active if len(region[x]) == 1 and next(iter(region[x])) in phrase - covered]

        def leaves_phrase(node: int) -> bool:
            seen = set()
            v = node
            while v != ROOT and v not in seen:
                if region[v] & phrase:
                    return False
                seen.add(v)
                v = head[v]
            return not (region[v] & phrase)

        governor = next((r for r in roots if leaves_phrase(head[r])), None)
        if governor is None:
            raise AlignmentError(f"{sid}/{c.coord_id}: no conjunct is governed from outside the phrase")

        beta = n + 1 + len(bubbles)
        bubbles.append(Bubble(beta, phrase))
        region[beta] = phrase
        head[beta], label[beta] = head[governor], label[governor]

        root_set = set(roots)
        for x in active:
            if head[x] in root_set and x not in root_set and not (region[x] & phrase):
                head[x] = beta
        gap_set = set(gap)
        for x in gap:
            if x in c.cc_positions:
                head[x], label[x] = beta, "cc"
            elif x in c.punct_positions:
                head[x], label[x] = beta, "punct"
            elif head[x] not in gap_set:
                head[x] = beta
            else:
                continue
            internal.add(x)
        for r in roots:
            head[r], label[r] = beta, "conj"
            internal.add(r)

    for x in head:
        if label[x] == "conj" and x not in internal:
            label[x] = "dep"

    all_bubbles = [Bubble(i, frozenset([i])) for i in range(n + 1)] + bubbles
    arcs = [Arc(head[x], label[x], x) for x in sorted(head)]
    tree = BubbleTree(sent, tuple(all_bubbles), tuple(arcs))
    report = validate_wellformed(tree)
    if not report.ok:
        v = report.violations[0]
        raise AlignmentError(f"{sid}: merged tree is not well-formed ({v.condition}: {v.detail})")
    return tree


def merge_treebank(
    deps: Iterable[DependencyTree],
    coords: Iterable[CoordAnnotation],
    quote_stripping: bool = False,
    strict: bool = True,
) -> tuple[Treebank, list[tuple[str, str]]]:
    """Merge every sentence; returns the treebank and (sent_id, error) pairs."""
    grouped = group_by_sentence(coords)
    trees, errors = [], []
    for dep in deps:
        sid = dep.sentence.sent_id
        mine = grouped.get(sid, [])
        if quote_stripping:
            mine = [strip_quotes(c, dep.sentence) for c in mine]
        try:
            trees.append(merge(dep, mine))
        except (AlignmentError, UnsupportedStructureError, AnnotationError) as exc:
            if strict:
                raise
            errors.append((sid, str(exc)))
    known = {d.sentence.sent_id for d in trees} | {sid for sid, _ in errors}
    for sid in grouped:
        if sid not in known:
            msg = f"coordination annotation for unknown sentence {sid!r}"
            if strict:
                raise AlignmentError(msg)
            errors.append((sid, msg))
    return Treebank(trees), errors


# ---------------------------------------------------------------------------
# CoNLL-UB

_BREF = re.compile(r"B(\d+)$")


def _format_span(content: frozenset) -> str:
    nodes = sorted(content)
    ranges = []
    start = prev = nodes[0]
    for v in nodes[1:]:
        if v != prev + 1:
            ranges.append((start, prev))
            start = v
        prev = v
    ranges.append((start, prev))
    return ",".join(f"{a}-{b}" for a, b in ranges)


def format_bubbles(trees: Iterable[BubbleTree]) -> str:
    parts = []
    for tree in trees:
        comp = tree.composite_ids()
        name: dict[Hashable, str] = {bid: f"B{k}" for k, bid in enumerate(comp, start=1)}
        for node, bid in tree.singleton_ids.items():
            name[bid] = str(node)
        for bid in comp:
            if ROOT in tree.content(bid):
                raise UnsupportedStructureError(f"{tree.sentence.sent_id}: bubble {bid!r} contains the root")
        head = tree.head_arc
        lines = _comment_lines(tree.sentence)
        for tok in tree.sentence.tokens:
            arc = head.get(tree.singleton_ids.get(tok.index))
            if arc is None:
                raise StructureError(f"{tree.sentence.sent_id}: token {tok.index} has no head")
            lines.append(_token_line(tok, name[arc.head], arc.label))
        for bid in comp:
            arc = head.get(bid)
            if arc is None:
                raise StructureError(f"{tree.sentence.sent_id}: bubble {bid!r} has no head")
            lines.append("\t".join([name[bid], _format_span(tree.content(bid)), name[arc.head], arc.label]))
        parts.append("\n".join(lines) + "\n\n")
    return "".join(parts)


def _parse_span(text: str, no: int, path) -> frozenset:
    nodes: set[int] = set()
    for part in text.split(","):
        m = re.fullmatch(r"(\d+)(?:-(\d+))?", part)
        if not m:
            raise FormatError(f"bad bubble span {text!r}", no, path)
        lo = int(m.group(1))
        hi = int(m.group(2) or lo)
        if lo > hi:
            raise FormatError(f"bad bubble span {text!r}", no, path)
        nodes.update(range(lo, hi + 1))
    return frozenset(nodes)


def _parse_bubble_block(block, ordinal: int, path, check_ambiguity: bool) -> BubbleTree:
    comments, tokens = [], []
    raw_arcs: list[tuple[str, str, str, int]] = []  # head ref, label, dependent ref, line
    spans: dict[str, tuple[frozenset, int]] = {}
    for no, line in block:
        if line.startswith("#"):
            if tokens or spans:
                raise FormatError("comment after token lines", no, path)
            comments.append(line)
            continue
        cols = line.split("\t")
        if cols[0].startswith("B"):
            if len(cols) != 4 or not _BREF.match(cols[0]):
                raise FormatError("bubble lines need 4 fields: B<k> span head deprel", no, path)
            if cols[0] in spans:
                raise FormatError(f"bubble {cols[0]} defined twice", no, path)
            spans[cols[0]] = (_parse_span(cols[1], no, path), no)
            raw_arcs.append((cols[2], cols[3], cols[0], no))
            continue
        if spans:
            raise FormatError("token line after bubble lines", no, path)
        if len(cols) != 10:
            raise FormatError(f"expected 10 tab-separated columns, found {len(cols)}", no, path)
        if "-" in cols[0] or "." in cols[0]:
            raise UnsupportedFeatureError(f"multiword token or empty node {cols[0]!r}", no, path)
        try:
            idx = int(cols[0])
        except ValueError:
            raise FormatError(f"bad token ID {cols[0]!r}", no, path) from None
        if idx != len(tokens) + 1:
            raise FormatError(f"token ID {idx} out of sequence", no, path)
        tokens.append(_token(cols, idx))
        raw_arcs.append((cols[6], cols[7], str(idx), no))
    if not tokens:
        raise FormatError("sentence without token lines", block[0][0], path)
    n = len(tokens)
    sent = Sentence(tuple(tokens), _sent_id(comments, ordinal), tuple(comments))

    def ref(text: str, no: int) -> Hashable:
        if _BREF.match(text):
            if text not in spans:
                raise FormatError(f"reference to undefined bubble {text}", no, path)
            return text
        try:
            v = int(text)
        except ValueError:
            raise FormatError(f"bad head reference {text!r}", no, path) from None
        if not 0 <= v <= n:
            raise FormatError(f"head {v} out of range", no, path)
        return v

    bubbles = [Bubble(i, frozenset([i])) for i in range(n + 1)]
    for bname, (content, no) in spans.items():
        if max(content) > n:
            raise FormatError(f"bubble {bname} span exceeds {n} tokens", no, path)
        bubbles.append(Bubble(bname, content))
    arcs = []
    for h, lbl, d, no in raw_arcs:
        head_id = ref(h, no)
        dep_id = ref(d, no)
        if head_id == dep_id:
            raise FormatError(f"{d} is its own head", no, path)
        arcs.append(Arc(head_id, lbl, dep_id))
    tree = BubbleTree(sent, tuple(bubbles), tuple(arcs))
    if check_ambiguity and validate_wellformed(tree).ok:
        for arc in tree.arcs:
            if isinstance(arc.head, str):
                psi, phi = tree.projection(arc.dependent), tree.content(arc.head)
                if psi & phi and not psi <= phi:
                    raise UnsupportedStructureError(
                        f"{sent.sent_id}: dependent {arc.dependent} of {arc.head} is neither inside nor outside it"
                    )
    return tree


def parse_bubbles(text: str, path: str | None = None, check_ambiguity: bool = True) -> list[BubbleTree]:
    out = []
    for ordinal, (_, block) in enumerate(_blocks(text), start=1):
        out.append(_parse_bubble_block(block, ordinal, path, check_ambiguity))
    return out


def read_bubbles(path, check_ambiguity: bool = True) -> Treebank:
    return Treebank(parse_bubbles(_read_text(path), str(path), check_ambiguity), (os.fspath(path),))


def write_bubbles(treebank: Iterable[BubbleTree], path) -> None:
    _write_text(path, format_bubbles(treebank))


# ---------------------------------------------------------------------------
# filtering


def filter_projective(treebank: Iterable[BubbleTree]) -> tuple[Treebank, list[tuple[str, str]]]:
    """Keep projective trees; discarded entries carry their first failed condition."""
    kept, dropped = [], []
    for tree in treebank:
        wf = validate_wellformed(tree)
        if not wf.ok:
            dropped.append((tree.sentence.sent_id, wf.first_condition))
            continue
        pr = validate_projective(tree)
        if pr.ok:
            kept.append(tree)
        else:
            dropped.append((tree.sentence.sent_id, pr.first_condition))
    return Treebank(kept), dropped
