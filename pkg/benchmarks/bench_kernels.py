#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Run after building the extension:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from green_noma.kernels import BACKEND, _core_py

try:
    from green_noma.kernels import _core
except ImportError:
    _core = None


def time_call(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_pam(backend, n_points=70, n_clusters=3, instances=50):
    rng = np.random.default_rng(0)
    total = 0.0
    for _ in range(instances):
        pts = rng.normal(size=n_points)
        dist = np.abs(pts[:, None] - pts[None, :])
        seeds = np.sort(rng.choice(n_points, size=n_clusters, replace=False))
        t0 = time.perf_counter()
        backend.pam(dist, seeds)
        total += time.perf_counter() - t0
    return total / instances


def bench_solve_rates(backend, calls=20_000):
    rng = np.random.default_rng(1)
    problems = []
    for _ in range(200):
        m = int(rng.integers(1, 4))
        c = rng.exponential(1.0, size=m) * 1e-3
        floors = np.where(rng.random(m) < 0.3, rng.uniform(0, 1, m), 0.0)
        problems.append((list(c), float(rng.uniform(0.5, 6.0)), list(floors), 0.2))
    t0 = time.perf_counter()
    for i in range(calls):
        c, target, floors, p_max = problems[i % len(problems)]
        backend.solve_rates(c, target, floors, p_max)
    return (time.perf_counter() - t0) / calls


def main():
    print(f"active backend: {BACKEND}")
    rows = []
    backends = [("python", _core_py)] + ([("native", _core)] if _core else [])
    for name, mod in backends:
        pam_t = bench_pam(mod)
        wf_t = bench_solve_rates(mod)
        rows.append((name, pam_t, wf_t))
    print(f"{'backend':<10} {'pam (70 pts, ms)':>18} {'solve_rates (us)':>18}")
    for name, pam_t, wf_t in rows:
        print(f"{name:<10} {pam_t * 1e3:>18.3f} {wf_t * 1e6:>18.2f}")
    if len(rows) == 2:
        print(
            f"{'speedup':<10} {rows[0][1] / rows[1][1]:>17.1f}x "
            f"{rows[0][2] / rows[1][2]:>17.1f}x"
        )


if __name__ == "__main__":
    main()
