import json

import pytest

from bubbleparse import cli
from bubbleparse.bubbles import to_dependency_tree
from bubbleparse.synthetic import synthetic_corpus
from bubbleparse.treebank import read_bubbles, read_conllu, write_bubbles, write_conllu, write_coord_tsv

from conftest import DATA

SMALL = ["--epochs", "2", "--mlp-hidden", "8", "--d-w", "5", "--d-p", "3", "--d-state", "2", "--warmup-steps", "0"]


@pytest.fixture
def corpus(tmp_path):
    deps, coords, tb = synthetic_corpus(12, seed=8)
    write_conllu(deps, tmp_path / "c.conllu")
    write_coord_tsv(coords, tmp_path / "c.coord.tsv")
    write_bubbles(tb, tmp_path / "c.conllub")
    return tmp_path


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_convert_matches_golden(tmp_path, capsys):
    out = tmp_path / "fig1.conllub"
    assert run("convert", "--conllu", DATA / "fig1.conllu", "--coord", DATA / "fig1_coord.tsv", "--out", out) == 0
    assert out.read_bytes() == (DATA / "fig1.conllub").read_bytes()
    assert "coordinations\t2" in capsys.readouterr().out


def test_convert_strict_and_lenient(tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("sent_id\tcoord_id\tcc\tconjuncts\tpunct\ns1\tc\t5\t2-3;6-6\t\n", encoding="utf-8")
    out = tmp_path / "o.conllub"
    assert run("convert", "--conllu", DATA / "fig1.conllu", "--coord", bad, "--out", out) == 2
    assert run("convert", "--conllu", DATA / "fig1.conllu", "--coord", bad, "--out", out, "--lenient") == 0


def test_validate(tmp_path, capsys):
    assert run("validate", "--input", DATA / "fig1.conllub", "--projective") == 0
    assert capsys.readouterr().out.startswith("PASS\ts1")
    broken = tmp_path / "b.conllub"
    rows = [
        "# sent_id = overlap",
        "1\ta\t_\t_\t_\t_\tB1\tconj\t_\t_",
        "2\tb\t_\t_\t_\t_\tB2\tconj\t_\t_",
        "3\tc\t_\t_\t_\t_\tB2\tconj\t_\t_",
        "B1\t1-2\t0\troot",
        "B2\t2-3\tB1\tconj",
        "",
        "# sent_id = gap",
        "1\ta\t_\t_\t_\t_\tB1\tconj\t_\t_",
        "2\tb\t_\t_\t_\t_\t0\troot\t_\t_",
        "3\tc\t_\t_\t_\t_\tB1\tconj\t_\t_",
        "B1\t1,3\t2\tobj",
        "",
    ]
    broken.write_text("\n".join(rows) + "\n", encoding="utf-8")
    assert run("validate", "--input", broken, "--projective") == 2
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("FAIL\toverlap\tno partial overlap")
    assert out[1].startswith("FAIL\tgap\tcontinuous coverage")


def test_oracle_check(corpus, capsys):
    assert run("oracle-check", "--input", corpus / "c.conllub") == 0
    assert capsys.readouterr().out.splitlines()[-1] == "12/12 OK, 0 skipped"
    assert run("oracle-check", "--input", DATA / "fig1.conllub", "--show-transitions") == 0
    assert "BubbleOpen_cc" in capsys.readouterr().out


def test_train_parse_eval(corpus, capsys):
    model = corpus / "m.bin"
    assert run("train", "--train", corpus / "c.conllub", "--dev", corpus / "c.conllub", "--model-out", model, *SMALL) == 0
    assert "best_dev_exact_f1" in capsys.readouterr().out
    pred = corpus / "p.conllub"
    assert run("parse", "--model", model, "--input", corpus / "c.conllu", "--out", pred) == 0
    capsys.readouterr()
    assert run("eval", "--gold", corpus / "c.conllub", "--pred", pred, "--metric", "all", "--format", "record",
               "--split-complexity", "--uas-las") == 0
    lines = capsys.readouterr().out.splitlines()
    assert [json.loads(x)["metric"] for x in lines[:3]] == ["exact", "inner", "whole"]
    assert lines[-2].startswith("UAS\t") and lines[-1].startswith("LAS\t")


def test_eval_perfect_with_categories(tmp_path, capsys):
    cats = tmp_path / "cats.tsv"
    cats.write_text("sent_id\tcoord_id\tcc\tconjuncts\tpunct\tcategory\ns1\tc2\t7\t3-6;8-9\t\tNP\n", encoding="utf-8")
    gold = DATA / "fig1.conllub"
    assert run("eval", "--gold", gold, "--pred", gold, "--categories", cats) == 0
    out = capsys.readouterr().out
    assert "all\texact\t1.0000\t1.0000\t1.0000\t2\t2\t2" in out
    assert "NP\texact\t1.0000\t1.0000\t1.0000\t1\t1\t1" in out


def test_config_file_and_precedence(corpus, tmp_path, monkeypatch):
    conf = tmp_path / "train.conf"
    conf.write_text("epochs = 1\nmlp-hidden = 8\nd_w = 5\nd_p = 3\nd_state = 2\n", encoding="utf-8")
    monkeypatch.setenv("BUBBLE_PARSE_SEED", "7")
    args = cli.parse_args(["train", "--train", "x", "--model-out", "y", "--config", str(conf), "--epochs", "3"])
    assert args.epochs == "3" and args.mlp_hidden == "8" and args.seed == 7
    args = cli.parse_args(["train", "--train", "x", "--model-out", "y", "--seed", "2"])
    assert args.seed == 2


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["validate"],
        ["train", "--train", "x", "--model-out", "y", "--mlp-hidden", "lots"],
        ["parse", "--model", "m", "--input", "i", "--out", "o", "--workers", "0"],
    ],
)
def test_usage_errors_exit_1(argv, corpus):
    if argv[:1] == ["train"]:
        argv[2] = str(corpus / "c.conllub")
    assert cli.main(argv) == 1


def test_data_errors_exit_2(tmp_path):
    assert run("validate", "--input", tmp_path / "missing.conllub") == 2
    garbage = tmp_path / "g.conllub"
    garbage.write_text("1\tonly\tthree\n", encoding="utf-8")
    assert run("oracle-check", "--input", garbage) == 2


def test_internal_errors_exit_3(monkeypatch):
    def boom(args):
        raise RuntimeError("bug")

    monkeypatch.setitem(cli.COMMANDS, "validate", boom)
    assert run("validate", "--input", DATA / "fig1.conllub") == 3


def test_version_and_help(capsys):
    assert run("--version") == 0
    assert "bubbleparse" in capsys.readouterr().out
    assert run("eval", "--help") == 0


def test_roundtrip_helpers_agree(corpus):
    # the CoNLL-U written for parsing carries the same tokens as the gold bubbles
    gold = read_bubbles(corpus / "c.conllub")
    deps = read_conllu(corpus / "c.conllu")
    assert [to_dependency_tree(t).sentence.forms for t in gold] == [d.sentence.forms for d in deps]
