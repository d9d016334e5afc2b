import os
import subprocess
import sys

import numpy as np
import pytest

from green_noma import kernels
from green_noma.kernels import _core_py


def random_problem(rng):
    m = int(rng.integers(1, 5))
    c = rng.exponential(1.0, size=m) * 10.0 ** rng.integers(-6, 1)
    target = float(rng.uniform(0.1, 8.0))
    floors = np.where(rng.random(m) < 0.4, rng.uniform(0.0, 1.5, m), 0.0)
    p_max = float(rng.uniform(0.5, 50.0) * c.mean())
    return c, target, floors, p_max


class TestBackendSelection:
    def test_backend_reported(self):
        assert kernels.BACKEND in ("native", "python")

    def test_env_forces_pure(self):
        code = (
            "import green_noma.kernels as k; print(k.BACKEND)"
        )
        env = dict(os.environ, GREEN_NOMA_PURE="1")
        out = subprocess.run(
            [sys.executable, "-c", code], env=env, capture_output=True, text=True
        )
        assert out.stdout.strip() == "python"


class TestSolveRatesParity:
    def test_backends_agree(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            c, target, floors, p_max = random_problem(rng)
            got = kernels.solve_rates(c, target, floors, p_max)
            ref = _core_py.solve_rates(c, target, floors, p_max)
            assert got[2] == ref[2]
            assert got[1] == pytest.approx(ref[1], rel=1e-14, abs=1e-14)
            assert np.allclose(got[0], ref[0], rtol=1e-13, atol=1e-15)

    def test_sum_hits_target_when_affordable(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            c, target, floors, _ = random_problem(rng)
            rates, _, mode = kernels.solve_rates(c, target, floors, 1e12)
            assert mode == kernels.RATES_TARGET_MET
            delivered = sum(rates)
            pinned_total = sum(f for r, f in zip(rates, floors) if r == f and f > 0)
            assert delivered >= target - 1e-9 or delivered >= pinned_total - 1e-9
            assert all(r >= f - 1e-12 for r, f in zip(rates, floors))

    def test_budget_mode_spends_exactly_the_budget(self):
        c = [1e-3, 2e-3]
        floors = [0.0, 0.0]
        p_max = 1e-3
        rates, _, mode = kernels.solve_rates(c, 30.0, floors, p_max)
        assert mode == kernels.RATES_BUDGET_LIMITED
        spent = sum(ci * (2.0**r - 1.0) for ci, r in zip(c, rates))
        assert spent == pytest.approx(p_max, rel=1e-9)

    def test_optimality_against_dense_grid(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            c = rng.exponential(1.0, size=2) * 1e-3
            target = float(rng.uniform(0.5, 6.0))
            rates, _, mode = kernels.solve_rates(c, target, [0.0, 0.0], 1e12)
            assert mode == kernels.RATES_TARGET_MET
            mine = c[0] * (2.0 ** rates[0] - 1.0) + c[1] * (2.0 ** rates[1] - 1.0)
            grid = min(
                c[0] * (2.0**a - 1.0) + c[1] * (2.0 ** (target - a) - 1.0)
                for a in np.linspace(0.0, target, 2000)
            )
            assert mine <= grid + 1e-12 + 1e-6 * grid


def no_improving_swap(dist, medoids, tol=1e-9):
    """Brute-force check that no single swap strictly lowers the cost."""
    n = dist.shape[0]
    base = dist[:, medoids].min(axis=1).sum()
    for slot in range(len(medoids)):
        for cand in range(n):
            if cand in medoids:
                continue
            trial = np.array(medoids)
            trial[slot] = cand
            if dist[:, trial].min(axis=1).sum() < base - tol:
                return False
    return True


class TestPamParity:
    def test_backends_reach_the_same_cost(self):
        # summation order may steer near-tied swaps differently, so the
        # contract is cost parity plus swap-optimality of each result
        rng = np.random.default_rng(3)
        for _ in range(60):
            n = int(rng.integers(5, 30))
            n_clusters = int(rng.integers(2, min(6, n)))
            pts = rng.normal(size=n)
            dist = np.abs(pts[:, None] - pts[None, :])
            seeds = np.sort(rng.choice(n, size=n_clusters, replace=False))
            med_a, lab_a, cost_a = kernels.pam(dist, seeds)
            med_b, lab_b, cost_b = _core_py.pam(dist, seeds)
            assert cost_a == pytest.approx(cost_b, rel=1e-9, abs=1e-12)
            assert no_improving_swap(dist, med_a)
            assert no_improving_swap(dist, med_b)

    def test_medoids_sorted_and_cost_consistent(self):
        rng = np.random.default_rng(4)
        pts = rng.normal(size=12)
        dist = np.abs(pts[:, None] - pts[None, :])
        med, labels, cost = kernels.pam(dist, np.array([0, 1, 2]))
        assert list(med) == sorted(med)
        assert cost == pytest.approx(sum(dist[i, med[labels[i]]] for i in range(12)))
