#!/usr/bin/env python3
"""Accuracy sweep of the factor-2 count estimator.

For every red count r in a range, runs the estimator on complete and cycle
graphs and tabulates the stabilized exponent against floor(log2 r).

Usage:
    python3 scripts/estimator_accuracy.py [--n 64] [--rmax 32] [--seeds 5]
"""

import argparse
import math
import random

from anonet import build_graph, estimate_protocol, run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--rmax", type=int, default=32)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    proto = estimate_protocol(args.n)
    graphs = [build_graph(f"complete:{args.n}"), build_graph(f"cycle:{args.n}")]
    print("r  floor(log2 r)  estimate 2^est  agree")
    failures = 0
    for r in range(1, args.rmax + 1):
        want = int(math.floor(math.log2(r)))
        agree = True
        for graph in graphs:
            for seed in range(args.seeds):
                inputs = [0] * r + [1] * (args.n - r)
                random.Random(seed * 997 + r).shuffle(inputs)
                res = run(proto, graph, inputs, seed=seed, expected=want)
                agree = agree and res.stabilized and set(res.final_outputs) == {want}
        failures += 0 if agree else 1
        print(f"{r:<3} {want:<14} {2 ** want:<15} {'yes' if agree else 'NO'}")
    print(f"{failures} disagreements over r in [1, {args.rmax}]")


if __name__ == "__main__":
    main()
