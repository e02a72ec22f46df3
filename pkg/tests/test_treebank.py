import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bubbleparse.bubbles import DependencyTree, Sentence, to_dependency_tree, trees_equal
from bubbleparse.errors import (
    AlignmentError,
    AnnotationError,
    FormatError,
    InputError,
    StructureError,
    UnsupportedFeatureError,
    UnsupportedStructureError,
)
from bubbleparse.synthetic import synthetic_corpus, synthetic_treebank
from bubbleparse.treebank import (
    CoordAnnotation,
    Treebank,
    coords_from_tree,
    filter_projective,
    format_bubbles,
    format_conllu,
    format_coord_tsv,
    merge,
    merge_treebank,
    parse_bubbles,
    parse_conllu,
    parse_coord_tsv,
    read_bubbles,
    read_conllu,
    read_coord_tsv,
    strip_quotes,
    write_bubbles,
)
from bubbleparse.validation import validate_projective

from conftest import DATA, FIG1_HEADS, fig1_dependency, random_tree

TOKEN = "{i}\tw{i}\t_\t_\t_\t_\t{h}\t{l}\t_\t_"


def conllu(rows, comments=("# sent_id = t",)):
    return "\n".join(list(comments) + [TOKEN.format(i=i, h=h, l=l) for i, (h, l) in enumerate(rows, 1)]) + "\n\n"


# -- CoNLL-U -----------------------------------------------------------------------

def test_conllu_byte_roundtrip():
    text = (DATA / "fig1.conllu").read_text(encoding="utf-8")
    trees = parse_conllu(text)
    assert trees[0].heads == FIG1_HEADS
    assert trees[0].sentence.sent_id == "s1"
    assert format_conllu(trees) == text


def test_conllu_read_file(tmp_path):
    tb = read_conllu(DATA / "fig1.conllu")
    assert len(tb) == 1 and tb.by_id()["s1"].labels[3] == "obj"


def test_conllu_missing_sent_id_uses_ordinal():
    trees = parse_conllu(conllu([(0, "root")], comments=()) * 2)
    assert [t.sentence.sent_id for t in trees] == ["1", "2"]


def test_conllu_bad_columns_reports_line():
    text = "# sent_id = a\n1\tx\t_\n"
    with pytest.raises(FormatError) as exc:
        parse_conllu(text, path="f.conllu")
    assert exc.value.line == 2
    assert "f.conllu:2:" in str(exc.value)


def test_conllu_multiword_strict_and_lenient():
    text = "# sent_id = a\n1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n" + conllu([(0, "root"), (1, "x")], comments=())
    with pytest.raises(UnsupportedFeatureError) as exc:
        parse_conllu(text)
    assert exc.value.line == 2
    trees = parse_conllu(text, strict=False)
    assert len(trees) == 1 and len(trees[0].sentence) == 2


def test_conllu_lenient_skips_broken_sentence():
    text = conllu([(0, "root")]) + conllu([(2, "x"), (1, "x")], comments=("# sent_id = cyc",))
    with pytest.raises(StructureError):
        parse_conllu(text)
    assert [t.sentence.sent_id for t in parse_conllu(text, strict=False)] == ["t"]


def test_duplicate_sent_id():
    t = parse_conllu(conllu([(0, "root")]))[0]
    with pytest.raises(InputError):
        Treebank([t, t])


# -- coordination TSV ------------------------------------------------------------------

def test_coord_tsv_roundtrip():
    text = (DATA / "fig1_coord.tsv").read_text(encoding="utf-8")
    coords = parse_coord_tsv(text)
    assert [c.conjunct_spans for c in coords] == [((4, 4), (6, 6)), ((3, 6), (8, 9))]
    assert format_coord_tsv(coords) == text
    assert read_coord_tsv(DATA / "fig1_coord.tsv") == coords


def test_coord_tsv_category_column():
    c = CoordAnnotation("s", "c1", (2,), ((1, 1), (3, 3)), category="NP")
    text = format_coord_tsv([c])
    assert text.splitlines()[0].endswith("\tcategory")
    assert parse_coord_tsv(text) == [c]


def test_coord_tsv_requires_header():
    with pytest.raises(FormatError):
        parse_coord_tsv("s\tc\t2\t1-1;3-3\t\n")


@pytest.mark.parametrize(
    "row",
    [
        "s\tc\t2\t1-1\t",  # one conjunct
        "s\tc\t2\t3-3;1-1\t",  # unsorted
        "s\tc\t1\t1-2;3-3\t",  # cc inside a conjunct
        "s\tc\t5\t1-1;3-3\t",  # cc outside the phrase
        "s\tc\t2\t1-x;3-3\t",  # malformed span
    ],
)
def test_coord_tsv_bad_rows(row):
    with pytest.raises(AnnotationError):
        parse_coord_tsv("sent_id\tcoord_id\tcc\tconjuncts\tpunct\n" + row + "\n")


def test_strip_quotes():
    sent = Sentence.from_forms(['"', "a", '"', "and", "b"])
    c = CoordAnnotation("s", "c", (4,), ((1, 3), (5, 5)))
    s = strip_quotes(c, sent)
    assert s.conjunct_spans == ((2, 2), (5, 5))
    assert s.punct_positions == (3,)


# -- merge ------------------------------------------------------------------------------

def test_merge_fig1(fig1):
    coords = read_coord_tsv(DATA / "fig1_coord.tsv")
    assert trees_equal(merge(fig1_dependency(), coords), fig1)


def test_merge_inverts_collapse_on_synthetic_data():
    for tree in synthetic_treebank(40, seed=5):
        again = merge(to_dependency_tree(tree), coords_from_tree(tree))
        assert trees_equal(again, tree)
        assert validate_projective(again).ok


def test_merge_relabels_stray_conj():
    dep = DependencyTree(Sentence.from_forms(["a", "and", "b"]), (0, 3, 1), ("root", "cc", "conj"))
    tree = merge(dep, [])
    assert {a.dependent: a.label for a in tree.arcs}[3] == "dep"


def test_merge_shared_modifier_moves_to_bubble():
    # old(1) men(2) and(3) women(4): old is shared when it sits outside the phrase
    dep = DependencyTree(Sentence.from_forms("old men and women".split()), (2, 0, 4, 2), ("amod", "root", "cc", "conj"))
    tree = merge(dep, [CoordAnnotation("", "c", (3,), ((2, 2), (4, 4)))])
    bubble = tree.composite_ids()[0]
    assert tree.head_arc[1].head == bubble
    assert tree.head_arc[bubble].label == "root"
    private = merge(dep, [CoordAnnotation("", "c", (3,), ((1, 2), (4, 4)))])
    assert private.head_arc[1].head == 2


def test_merge_crossing_and_equal_spans():
    dep = DependencyTree(
        Sentence.from_forms("a and b and c".split()), (0, 3, 1, 5, 3), ("root", "cc", "conj", "cc", "conj")
    )
    crossing = [CoordAnnotation("", "x", (2,), ((1, 1), (3, 3))), CoordAnnotation("", "y", (4,), ((3, 3), (5, 5)))]
    with pytest.raises(UnsupportedStructureError):
        merge(dep, crossing)
    same = [CoordAnnotation("", "x", (2,), ((1, 1), (3, 5))), CoordAnnotation("", "y", (2,), ((1, 1), (3, 5)))]
    with pytest.raises(UnsupportedStructureError):
        merge(dep, same)


def test_merge_misaligned_spans():
    dep = fig1_dependency()
    with pytest.raises(AlignmentError):
        merge(dep, [CoordAnnotation("s1", "c", (5,), ((3, 4), (6, 12)))])
    with pytest.raises(AlignmentError):
        # 2-3 is not a subtree
        merge(dep, [CoordAnnotation("s1", "c", (5,), ((2, 3), (6, 6)))])


def test_merge_treebank_lenient_collects_errors():
    dep = fig1_dependency()
    bad = CoordAnnotation("s1", "c", (5,), ((2, 3), (6, 6)))
    stray = CoordAnnotation("nope", "c", (2,), ((1, 1), (3, 3)))
    with pytest.raises(AlignmentError):
        merge_treebank([dep], [bad])
    tb, errors = merge_treebank([dep], [bad, stray], strict=False)
    assert len(tb) == 0
    assert [sid for sid, _ in errors] == ["s1", "nope"]


def test_synthetic_corpus_merges_cleanly():
    deps, coords, tb = synthetic_corpus(20, seed=2)
    again, errors = merge_treebank(deps, coords)
    assert not errors
    assert all(trees_equal(a, b) for a, b in zip(again, tb))


# -- CoNLL-UB ---------------------------------------------------------------------------

def test_conllub_golden_bytes(fig1, tmp_path):
    golden = (DATA / "fig1.conllub").read_text(encoding="utf-8")
    tree = read_bubbles(DATA / "fig1.conllub")[0]
    assert trees_equal(tree, fig1)
    assert format_bubbles([tree]) == golden
    write_bubbles([tree], tmp_path / "out.conllub")
    assert (tmp_path / "out.conllub").read_bytes() == (DATA / "fig1.conllub").read_bytes()


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**31))
def test_conllub_roundtrip_random(seed):
    tree = random_tree(random.Random(seed), n_max=8)
    text = format_bubbles([tree])
    back = parse_bubbles(text)[0]
    assert trees_equal(back, tree)
    normalized = format_bubbles([back])
    assert format_bubbles(parse_bubbles(normalized)) == normalized


UB_HEAD = "# sent_id = u\n"


def ub(rows, bubbles):
    lines = [TOKEN.format(i=i, h=h, l=l) for i, (h, l) in enumerate(rows, 1)]
    return UB_HEAD + "\n".join(lines + ["\t".join(b) for b in bubbles]) + "\n\n"


def test_conllub_noncontiguous_span_reads_and_fails_projectivity():
    text = ub([("B1", "conj"), (0, "root"), ("B1", "conj")], [("B1", "1,3-3", "2", "obj")])
    tree = parse_bubbles(text)[0]
    assert tree.content("B1") == {1, 3}
    assert validate_projective(tree).first_condition == "continuous coverage"
    assert "1-1,3-3" in format_bubbles([tree])


def test_conllub_ambiguous_attachment():
    text = ub([("B1", "conj"), (3, "x"), ("B1", "conj")], [("B1", "1-2", "0", "root")])
    with pytest.raises(UnsupportedStructureError):
        parse_bubbles(text)
    tree = parse_bubbles(text, check_ambiguity=False)[0]
    assert validate_projective(tree).first_condition == "contained projections"


@pytest.mark.parametrize(
    "text",
    [
        ub([("B2", "x"), (0, "root")], [("B1", "1-2", "0", "root")]),  # undefined bubble
        ub([(0, "root")], [("B1", "1-4", "0", "root")]),  # span past the end
        ub([(0, "root")], [("B1", "2-1", "0", "root")]),  # reversed span
        ub([(0, "root")], [("B1", "1-1", "0")]),  # missing field
        ub([(7, "root")], []),  # head out of range
    ],
)
def test_conllub_format_errors(text):
    with pytest.raises(FormatError) as exc:
        parse_bubbles(text)
    assert exc.value.line is not None


def test_filter_projective():
    good = read_bubbles(DATA / "fig1.conllub")[0]
    bad = parse_bubbles(ub([("B1", "conj"), (0, "root"), ("B1", "conj")], [("B1", "1,3-3", "2", "obj")]))[0]
    kept, dropped = filter_projective([good, bad])
    assert len(kept) == 1
    assert dropped == [("u", "continuous coverage")]
