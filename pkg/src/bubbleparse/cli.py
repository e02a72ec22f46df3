"""Command-line interface: convert, validate, oracle-check, train, parse, eval.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 internal error.  Data goes to stdout or ``--out`` files; logs go to stderr.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

from . import __version__
from .bubbles import to_dependency_tree, trees_equal
from .errors import BubbleError, PreconditionError, UnsupportedStructureError
from .evaluation import METRICS, attachment_scores, score_coordinations, split_by_complexity
from .model import HyperParams, load_model, parse, save_model, train
from .oracle import derive_oracle, verify_sequence
from .treebank import (
    Treebank,
    filter_projective,
    merge_treebank,
    read_bubbles,
    read_conllu,
    read_coord_tsv,
    write_bubbles,
)
from .validation import validate_projective, validate_wellformed

log = logging.getLogger("bubbleparse")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
SEED_ENV = "BUBBLE_PARSE_SEED"
HYPER_FIELDS = [f for f in dataclasses.fields(HyperParams) if f.name != "seed"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise UsageError(f"{path}:{no}: expected 'key = value'")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("common options")
    g.add_argument("--seed", type=int, default=None, help=f"random seed (fallback: ${SEED_ENV}, then 0)")
    g.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    g.add_argument("--strict", dest="strict", action="store_true", default=True,
                   help="fail on the first malformed line or merge error (default)")
    g.add_argument("--lenient", dest="strict", action="store_false",
                   help="skip malformed sentences with a warning instead of failing")
    g.add_argument("--config", metavar="PATH", help="file of 'key = value' option defaults; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bubbleparse", description="Coordination-aware bubble-tree parsing toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("convert", help="merge CoNLL-U trees with coordination spans into CoNLL-UB")
    p.add_argument("--conllu", required=True, metavar="PATH", help="dependency trees (CoNLL-U)")
    p.add_argument("--coord", required=True, metavar="PATH", help="coordination annotations (TSV)")
    p.add_argument("--out", required=True, metavar="PATH", help="output bubble trees (CoNLL-UB)")
    p.add_argument("--strip-quotes", action="store_true", help="pull quotation marks off conjunct edges")
    _common(p)

    p = sub.add_parser("validate", help="check well-formedness (and projectivity) of bubble trees")
    p.add_argument("--input", required=True, metavar="PATH", help="bubble trees (CoNLL-UB)")
    p.add_argument("--projective", action="store_true", help="also check the projectivity conditions")
    _common(p)

    p = sub.add_parser("oracle-check", help="round-trip every tree through the static oracle")
    p.add_argument("--input", required=True, metavar="PATH", help="bubble trees (CoNLL-UB)")
    p.add_argument("--show-transitions", action="store_true", help="print each oracle sequence")
    _common(p)

    p = sub.add_parser("train", help="train a parser model")
    p.add_argument("--train", required=True, metavar="PATH", help="training bubble trees (CoNLL-UB)")
    p.add_argument("--dev", metavar="PATH", help="dev bubble trees for checkpoint selection (CoNLL-UB)")
    p.add_argument("--model-out", required=True, metavar="PATH", help="where to write the model")
    h = p.add_argument_group("hyperparameters")
    for f in HYPER_FIELDS:
        h.add_argument(
            "--" + f.name.replace("_", "-"), dest=f.name, default=None, metavar=type(f.default).__name__.upper(),
            help=f"default {f.default}",
        )
    _common(p)

    p = sub.add_parser("parse", help="parse CoNLL-U sentences into CoNLL-UB bubble trees")
    p.add_argument("--model", required=True, metavar="PATH", help="trained model file")
    p.add_argument("--input", required=True, metavar="PATH", help="sentences (CoNLL-U; heads are ignored)")
    p.add_argument("--out", required=True, metavar="PATH", help="predicted bubble trees (CoNLL-UB)")
    p.add_argument("--no-rescoring", action="store_true", help="skip boundary rescoring")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes (default 1)")
    _common(p)

    p = sub.add_parser("eval", help="score predicted bubble trees against gold")
    p.add_argument("--gold", required=True, metavar="PATH", help="gold bubble trees (CoNLL-UB)")
    p.add_argument("--pred", required=True, metavar="PATH", help="predicted bubble trees (CoNLL-UB)")
    p.add_argument("--metric", choices=METRICS + ("all",), default="exact", help="coordination metric")
    p.add_argument("--categories", metavar="PATH", help="gold coordination TSV with a category column")
    p.add_argument("--split-complexity", action="store_true", help="per-sentence exact match by complexity")
    p.add_argument("--uas-las", action="store_true", help="attachment scores after conversion to UD style")
    p.add_argument("--exclude-punct", action="store_true", help="leave PUNCT tokens out of UAS/LAS")
    p.add_argument("--format", choices=("tsv", "record"), default="tsv", help="report layout")
    _common(p)
    return parser


def parse_args(argv: Sequence[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            values = read_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
        known = {a.dest: a for a in sub._actions}  # noqa: SLF001
        defaults = {}
        for key, value in values.items():
            action = known.get(key)
            if action is None or key in ("help", "config"):
                raise UsageError(f"{args.config}: unknown option {key!r} for {args.command}")
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):  # noqa: SLF001
                try:
                    flag = HyperParams.from_dict({"rescoring_enabled": value}).rescoring_enabled
                except ValueError:
                    raise UsageError(f"{args.config}: {key} expects true/false") from None
                if isinstance(action, argparse._StoreFalseAction):  # noqa: SLF001
                    flag = not flag
                defaults[key] = flag
            else:
                defaults[key] = value
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args.seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            args.seed = int(env) if env not in (None, "") else 0
        except ValueError:
            raise UsageError(f"${SEED_ENV} must be an integer, got {env!r}") from None
    return args


# ---------------------------------------------------------------------------
# commands


def cmd_convert(args) -> int:
    deps = read_conllu(args.conllu, strict=args.strict)
    coords = read_coord_tsv(args.coord)
    tb, errors = merge_treebank(deps, coords, quote_stripping=args.strip_quotes, strict=args.strict)
    for sid, msg in errors:
        log.warning("merge failed for %s: %s", sid, msg)
    write_bubbles(tb, args.out)
    n_coords = sum(len(t.composite_ids()) for t in tb)
    print(f"sentences\t{len(tb)}")
    print(f"coordinations\t{n_coords}")
    print(f"merge_errors\t{len(errors)}")
    return EXIT_OK


def cmd_validate(args) -> int:
    tb = read_bubbles(args.input, check_ambiguity=False)
    failed = 0
    for tree in tb:
        sid = tree.sentence.sent_id
        report = validate_wellformed(tree)
        if report.ok and args.projective:
            report = validate_projective(tree)
        if report.ok:
            print(f"PASS\t{sid}")
        else:
            failed += 1
            details = "; ".join(f"{v.condition}: {v.detail}" for v in report.violations)
            print(f"FAIL\t{sid}\t{','.join(report.conditions)}\t{details}")
    print(f"# {len(tb) - failed}/{len(tb)} passed", file=sys.stderr)
    return EXIT_OK if failed == 0 else EXIT_DATA


def cmd_oracle_check(args) -> int:
    tb = read_bubbles(args.input, check_ambiguity=False)
    ok = skipped = bad = 0
    for tree in tb:
        sid = tree.sentence.sent_id
        try:
            result = derive_oracle(tree)
        except (PreconditionError, UnsupportedStructureError) as exc:
            skipped += 1
            print(f"SKIP\t{sid}\t{exc}")
            continue
        try:
            rebuilt = verify_sequence(tree.sentence, result.transitions)
            same = trees_equal(rebuilt, tree)
        except BubbleError as exc:
            same, rebuilt = False, exc
        if same:
            ok += 1
            print(f"OK\t{sid}\t{len(result)} transitions")
        else:
            bad += 1
            print(f"MISMATCH\t{sid}\t{rebuilt if isinstance(rebuilt, Exception) else 'rebuilt tree differs'}")
        if args.show_transitions:
            print(" ".join(str(t) for t in result.transitions))
    checked = ok + bad
    print(f"{ok}/{checked} OK, {skipped} skipped")
    return EXIT_OK if bad == 0 else EXIT_DATA


def _hyper_from_args(args) -> HyperParams:
    values = {f.name: getattr(args, f.name) for f in HYPER_FIELDS if getattr(args, f.name) is not None}
    values["seed"] = args.seed
    try:
        return HyperParams.from_dict(values)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _trainable(tb: Treebank, what: str) -> list:
    kept, dropped = filter_projective(tb)
    for sid, cond in dropped:
        log.warning("%s: dropping %s (%s)", what, sid, cond)
    out = []
    for t in kept:
        try:
            derive_oracle(t)
        except UnsupportedStructureError as exc:
            log.warning("%s: dropping %s (%s)", what, t.sentence.sent_id, exc)
            continue
        out.append(t)
    return out


def cmd_train(args) -> int:
    hyper = _hyper_from_args(args)
    train_trees = _trainable(read_bubbles(args.train), "train")
    dev_trees = list(read_bubbles(args.dev)) if args.dev else None
    log.info("training on %d sentences, dev %d", len(train_trees), len(dev_trees or []))

    def report(rec):
        extra = f" dev_exact_f1={rec['dev_exact_f1']:.4f}" if "dev_exact_f1" in rec else ""
        log.info("epoch %d loss=%.4f lr=%.2g%s", rec["epoch"], rec["loss"], rec["lr"], extra)

    model = train(train_trees, dev_trees, hyper, on_round=report)
    save_model(model, args.model_out)
    best = max((r.get("dev_exact_f1", 0.0) for r in model.history), default=0.0)
    print(f"epochs\t{len(model.history)}")
    if dev_trees:
        print(f"best_dev_exact_f1\t{best:.4f}")
    return EXIT_OK


_WORKER_MODEL = None


def _init_worker(path: str) -> None:
    global _WORKER_MODEL
    _WORKER_MODEL = load_model(path)


def _parse_one(job):
    sentence, rescoring = job
    return parse(sentence, _WORKER_MODEL, rescoring=rescoring)


def cmd_parse(args) -> int:
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    model = load_model(args.model)
    sentences = [d.sentence for d in read_conllu(args.input, strict=args.strict)]
    rescoring = False if args.no_rescoring else None
    if args.workers == 1 or len(sentences) < 2:
        trees = [parse(s, model, rescoring=rescoring) for s in sentences]
    else:
        with ProcessPoolExecutor(args.workers, initializer=_init_worker, initargs=(args.model,)) as ex:
            trees = list(ex.map(_parse_one, [(s, rescoring) for s in sentences], chunksize=8))
    write_bubbles(Treebank(trees), args.out)
    print(f"sentences\t{len(trees)}")
    return EXIT_OK


def cmd_eval(args) -> int:
    gold, pred = read_bubbles(args.gold), read_bubbles(args.pred)
    categories = None
    if args.categories:
        categories = {
            (c.sent_id, c.whole_span): c.category for c in read_coord_tsv(args.categories) if c.category
        }
    metrics = METRICS if args.metric == "all" else (args.metric,)
    for i, metric in enumerate(metrics):
        rep = score_coordinations(pred, gold, metric, categories)
        if args.format == "record":
            print(rep.to_record())
        else:
            text = rep.to_tsv()
            print(text if i == 0 else text.split("\n", 1)[1])
    if args.split_complexity:
        print(split_by_complexity(pred, gold).to_tsv())
    if args.uas_las:
        by_id = pred.by_id()
        g_deps = [to_dependency_tree(t) for t in gold]
        p_deps = [to_dependency_tree(by_id[t.sentence.sent_id]) for t in gold]
        uas, las = attachment_scores(p_deps, g_deps, exclude_punct=args.exclude_punct)
        print(f"UAS\t{uas:.4f}\nLAS\t{las:.4f}")
    return EXIT_OK


COMMANDS = {
    "convert": cmd_convert,
    "validate": cmd_validate,
    "oracle-check": cmd_oracle_check,
    "train": cmd_train,
    "parse": cmd_parse,
    "eval": cmd_eval,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"bubbleparse {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BubbleError, ValueError, OSError, UnicodeDecodeError) as exc:
        print(f"bubbleparse {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"bubbleparse {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
