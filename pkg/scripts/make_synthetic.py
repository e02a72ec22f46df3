"""Write a synthetic corpus as CoNLL-U + coordination TSV + CoNLL-UB files.

    python3 scripts/make_synthetic.py --out data/syn --train 200 --dev 50 --test 50
"""
import argparse
from pathlib import Path

from bubbleparse.synthetic import synthetic_corpus
from bubbleparse.treebank import write_bubbles, write_conllu, write_coord_tsv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data/syn")
    ap.add_argument("--train", type=int, default=200)
    ap.add_argument("--dev", type=int, default=50)
    ap.add_argument("--test", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k, (split, size) in enumerate((("train", args.train), ("dev", args.dev), ("test", args.test))):
        deps, coords, tb = synthetic_corpus(size, seed=args.seed * 10 + k, prefix=f"{split}-")
        write_conllu(deps, out / f"{split}.conllu")
        write_coord_tsv(coords, out / f"{split}.coord.tsv")
        write_bubbles(tb, out / f"{split}.conllub")
        print(f"{split}: {len(tb)} sentences, {len(coords)} coordinations")


if __name__ == "__main__":
    main()
