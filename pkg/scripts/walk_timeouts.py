"""Measure how often uniform random walks hit the 50*n step cap.

    python3 scripts/walk_timeouts.py --walks 2000
"""
import argparse

from bubbleparse.bubbles import Sentence
from bubbleparse.errors import WalkTimeout
from bubbleparse.transitions import random_walk


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--walks", type=int, default=2000, help="walks per sentence length")
    ap.add_argument("--max-n", type=int, default=8)
    ap.add_argument("--factor", type=int, default=50, help="step cap is factor * n")
    args = ap.parse_args()
    print("n\twalks\ttimeouts\trate\tmean_steps")
    for n in range(1, args.max_n + 1):
        sent = Sentence.from_forms([f"w{i}" for i in range(1, n + 1)])
        timeouts, steps = 0, []
        for seed in range(args.walks):
            try:
                steps.append(len(random_walk(sent, seed, max_steps=args.factor * n)))
            except WalkTimeout:
                timeouts += 1
        mean = sum(steps) / len(steps) if steps else float("nan")
        print(f"{n}\t{args.walks}\t{timeouts}\t{timeouts / args.walks:.4f}\t{mean:.1f}")


if __name__ == "__main__":
    main()
