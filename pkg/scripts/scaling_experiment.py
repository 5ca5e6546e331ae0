#!/usr/bin/env python3
"""Convergence scaling of the parity counter against token meeting times.

Runs the 1-bit parity counter on cycles of growing size, fits the growth
exponent of mean stabilization activations, and fits the meeting-time
exponent (in the continuous clock) on the same grid for comparison.

Usage:
    python3 scripts/scaling_experiment.py [--sizes 8,16,32,64] [--seeds 20]
"""

import argparse
import json

from anonet import build_graph, lsb_counter_protocol, measure_meeting_time, run, scaling_report


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="8,16,32,64")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--trials", type=int, default=250, help="meeting-time trials per size")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    parity = lsb_counter_protocol(1)
    steps = {}
    for n in sizes:
        graph = build_graph(f"cycle:{n}")
        r = n // 2
        steps[n] = []
        for seed in range(args.seeds):
            res = run(parity, graph, [0] * r + [1] * (n - r), seed=seed, expected=r % 2)
            assert res.stabilized, (n, seed)
            steps[n].append(max(1, res.first_correct_step))
        print(f"cycle:{n}: mean first-correct activation {sum(steps[n]) / len(steps[n]):.0f}")

    fit = scaling_report(steps)
    print(f"parity activations ~ n^{fit.exponent:.2f} (stderr {fit.stderr:.2f})")

    meet = {}
    for n in sizes:
        st = measure_meeting_time(build_graph(f"cycle:{n}"), trials=args.trials, seed=1)
        meet[n] = [st.mean_time]
        print(f"cycle:{n}: mean meeting time {st.mean_time:.1f} ({st.mean_steps:.0f} activations)")
    meet_fit = scaling_report(meet)
    print(f"meeting time ~ n^{meet_fit.exponent:.2f}")
    print(json.dumps({"parity_exponent": fit.exponent, "meeting_exponent": meet_fit.exponent}))


if __name__ == "__main__":
    main()
