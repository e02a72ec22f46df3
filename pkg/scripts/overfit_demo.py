"""Train on a small synthetic treebank and report fit on the training set.

    python3 scripts/overfit_demo.py --sentences 32 --epochs 200
"""
import argparse
import time

from bubbleparse.model import HyperParams, exact_f1, train, transition_accuracy
from bubbleparse.synthetic import synthetic_treebank


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sentences", type=int, default=32)
    ap.add_argument("--epochs", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--data-seed", type=int, default=7)
    ap.add_argument("--dropout", type=float, default=0.0)
    ap.add_argument("--report-every", type=int, default=20)
    args = ap.parse_args()
    trees = synthetic_treebank(args.sentences, seed=args.data_seed)
    hp = HyperParams(dropout=args.dropout, epochs=args.epochs, seed=args.seed)
    start = time.time()

    def show(rec):
        if rec["epoch"] % args.report_every == 0:
            print(f"epoch {rec['epoch']:4d}  loss {rec['loss']:.4f}  ({time.time() - start:.0f}s)", flush=True)

    model = train(trees, None, hp, on_round=show)
    print(f"transition accuracy {transition_accuracy(model, trees):.4f}")
    print(f"exact F1            {exact_f1(model, trees):.4f}")
    print(f"wall time           {time.time() - start:.1f}s")


if __name__ == "__main__":
    main()
