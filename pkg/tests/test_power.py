import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from green_noma.allocation import from_alpha, greedy_assign
from green_noma.power import (
    Solution,
    check_constraints,
    interference,
    optimize,
    power_from_rate,
    rate,
    sic_feasible,
    total_ee,
    waterfill_device,
)
from green_noma.scenario import ScenarioConfig


def make_config(**kw):
    base = dict(
        K=2,
        N=1,
        w=1e6,
        sigma2_dbm_hz=-150.0,
        zeta=1.0,
        p_max=10.0,
        p_f=1.0,
        bt_target=2e6,
        seed=0,
        slot_duration=1.0,
    )
    base.update(kw)
    return ScenarioConfig(**base)


def single_column_alloc(gains, U=None):
    return greedy_assign(gains, U=U or gains.shape[0], N=gains.shape[1])


class TestInterference:
    def test_single_occupant(self):
        gains = np.array([[1e-8]])
        alloc = single_column_alloc(gains)
        assert interference(alloc, np.array([[0.5]]), gains, 0, 0) == 0.0

    def test_two_occupants_first_decoded(self):
        gains = np.array([[2e-8], [1e-8]])
        alloc = single_column_alloc(gains)
        powers = np.array([[0.3], [0.1]])
        assert interference(alloc, powers, gains, 0, 0) == pytest.approx(1e-9)
        assert interference(alloc, powers, gains, 1, 0) == 0.0

    def test_three_occupants_all_positions(self):
        gains = np.array([[3e-8], [2e-8], [1e-8]])
        alloc = single_column_alloc(gains)
        powers = np.array([[0.4], [0.2], [0.1]])
        order = alloc.decode_order[0]
        assert order == (0, 1, 2)
        for pos, k in enumerate(order):
            expected = sum(powers[j, 0] * gains[j, 0] for j in order[pos + 1 :])
            assert interference(alloc, powers, gains, k, 0) == pytest.approx(expected)

    def test_unassigned_query_rejected(self):
        gains = np.array([[1e-8, 2e-8]])
        alloc = greedy_assign(gains, U=1, N=2)
        with pytest.raises(ValueError):
            interference(alloc, np.zeros((1, 2)), gains, 0, 0)


class TestSicFeasible:
    def test_boundary_equality(self):
        assert sic_feasible(p=1.0, g=1.0, I=1.0, zeta=1.0)

    def test_below_threshold(self):
        assert not sic_feasible(p=0.5, g=1.0, I=1.0, zeta=1.0)

    def test_zero_interference(self):
        assert sic_feasible(p=1e-9, g=1e-12, I=0.0, zeta=5.0)


class TestRate:
    def test_unassigned_is_zero(self):
        assert rate(0, 1.0, 1.0, 0.0, 1e6, 1e-10) == 0.0

    def test_unit_snr(self):
        assert rate(1, 1.0, 1e-10, 0.0, 1e6, 1e-10) == pytest.approx(1e6)

    def test_rejects_nonpositive_noise(self):
        with pytest.raises(ValueError):
            rate(1, 1.0, 1.0, 0.0, 1e6, 0.0)


class TestPowerFromRate:
    def test_zero_rate(self):
        assert power_from_rate(0.0, 1e-9, 0.0, 1e-10) == 0.0

    def test_unit_case(self):
        assert power_from_rate(1.0, 1.0, 0.5, 0.5) == pytest.approx(1.0)

    def test_half_gain(self):
        assert power_from_rate(2.0, 0.5, 0.0, 1.0) == pytest.approx(6.0)

    @settings(max_examples=60, deadline=None)
    @given(
        r=st.floats(0.0, 20.0),
        g=st.floats(1e-12, 1e-3),
        I=st.floats(0.0, 1e-6),
        noise=st.floats(1e-15, 1e-6),
    )
    def test_round_trip_with_rate(self, r, g, I, noise):
        p = power_from_rate(r, g, I, noise)
        back = rate(1, p, g, I, 1.0, noise)
        assert back == pytest.approx(r, rel=1e-9, abs=1e-12)


class TestWaterfillDevice:
    def test_single_subcarrier_exact_target(self):
        cfg = make_config(K=1, N=1, bt_target=3e6, w=1e6)
        gains = np.array([[1e-9]])
        alloc = single_column_alloc(gains)
        rates, ok = waterfill_device(0, alloc, gains, np.zeros((1, 1)), cfg)
        assert ok
        assert rates[0] == cfg.bt_target / cfg.w

    def test_equal_gains_split_evenly(self):
        cfg = make_config(K=1, N=2, bt_target=4e6, w=1e6)
        gains = np.array([[1e-9, 1e-9]])
        alloc = from_alpha(np.array([[1, 1]]), gains, U=1)
        rates, ok = waterfill_device(0, alloc, gains, np.zeros((1, 2)), cfg)
        assert ok
        assert rates[0] == pytest.approx(2.0)
        assert rates[1] == pytest.approx(2.0)

    def test_unequal_gains_match_grid_search(self):
        cfg = make_config(K=1, N=2, bt_target=5e6, w=1e6)
        gains = np.array([[4e-9, 1e-9]])
        alloc = from_alpha(np.array([[1, 1]]), gains, U=1)
        rates, ok = waterfill_device(0, alloc, gains, np.zeros((1, 2)), cfg)
        assert ok
        noise = cfg.noise_power
        total = cfg.bt_target / cfg.w

        def split_power(r0):
            return noise * (2.0**r0 - 1.0) / gains[0, 0] + noise * (
                2.0 ** (total - r0) - 1.0
            ) / gains[0, 1]

        grid_best = min(split_power(r0) for r0 in np.linspace(0.0, total, 1000))
        achieved = split_power(rates[0])
        assert achieved <= grid_best * 1.005
        assert rates.sum() == pytest.approx(total)


class TestOptimize:
    def test_single_device_closed_form(self):
        cfg = make_config(K=1, N=1, bt_target=2e6, w=1e6, p_f=1.0)
        gains = np.array([[1e-9]])
        alloc = single_column_alloc(gains)
        sol = optimize(alloc, gains, cfg)
        p_expected = power_from_rate(2.0, 1e-9, 0.0, cfg.noise_power)
        assert sol.converged
        assert sol.powers[0, 0] == pytest.approx(p_expected, rel=1e-12)
        assert sol.ee == pytest.approx(cfg.bt_target / (cfg.p_f + p_expected), rel=1e-12)

    def test_two_devices_shared_column_closed_form(self):
        cfg = make_config(K=2, N=1, bt_target=2e6, w=1e6)
        gains = np.array([[2e-9], [1e-9]])
        alloc = single_column_alloc(gains)
        sol = optimize(alloc, gains, cfg)
        noise = cfg.noise_power
        t = cfg.bt_target / cfg.w
        p_weak = noise * (2.0**t - 1.0) / gains[1, 0]
        p_strong = (noise + p_weak * gains[1, 0]) * (2.0**t - 1.0) / gains[0, 0]
        assert sol.converged
        assert sol.powers[1, 0] == pytest.approx(p_weak, rel=1e-9)
        assert sol.powers[0, 0] == pytest.approx(p_strong, rel=1e-9)
        ee_expected = 2 * cfg.bt_target / (cfg.p_f + p_weak + p_strong)
        assert sol.ee == pytest.approx(ee_expected, rel=1e-9)

    def test_two_devices_match_power_grid(self):
        # independent oracle: refine a 2-D grid over both transmit powers,
        # keeping points where each device delivers its target
        cfg = make_config(K=2, N=1, bt_target=2e6, w=1e6)
        gains = np.array([[2e-9], [1e-9]])
        alloc = single_column_alloc(gains)
        sol = optimize(alloc, gains, cfg)
        noise = cfg.noise_power

        def delivered(p_strong, p_weak):
            r_strong = math.log2(1.0 + p_strong * gains[0, 0] / (noise + p_weak * gains[1, 0]))
            r_weak = math.log2(1.0 + p_weak * gains[1, 0] / noise)
            return r_strong, r_weak

        target = cfg.bt_target / cfg.w
        lo = np.array([0.0, 0.0])
        hi = np.array([cfg.p_max, cfg.p_max])
        best = None
        for _ in range(6):
            grid0 = np.linspace(lo[0], hi[0], 41)
            grid1 = np.linspace(lo[1], hi[1], 41)
            best = None
            for p0 in grid0:
                for p1 in grid1:
                    r0, r1 = delivered(p0, p1)
                    if r0 >= target and r1 >= target:
                        if best is None or p0 + p1 < best[0]:
                            best = (p0 + p1, p0, p1)
            assert best is not None
            _, b0, b1 = best
            span0 = (hi[0] - lo[0]) / 8
            span1 = (hi[1] - lo[1]) / 8
            lo = np.array([max(0.0, b0 - span0), max(0.0, b1 - span1)])
            hi = np.array([b0 + span0, b1 + span1])
        assert sol.p_t <= best[0] * 1.01
        assert sol.ee >= 2 * cfg.bt_target / (cfg.p_f + best[0]) * 0.99

    def test_interference_free_matches_closed_form(self):
        cfg = make_config(K=3, N=3, bt_target=1.5e6, w=1e6)
        rng = np.random.default_rng(0)
        gains = rng.exponential(1.0, size=(3, 3)) * 1e-9
        alloc = greedy_assign(gains, U=1, N=3)
        sol = optimize(alloc, gains, cfg)
        t = cfg.bt_target / cfg.w
        expected_pt = sum(
            power_from_rate(t, gains[k, alloc.subcarrier_of(k)], 0.0, cfg.noise_power)
            for k in range(3)
        )
        assert sol.converged
        assert sol.p_t == pytest.approx(expected_pt, rel=1e-12)
        assert sol.ee == pytest.approx(3 * cfg.bt_target / (cfg.p_f + expected_pt), rel=1e-12)

    def test_ee_improves_over_first_iterate(self):
        rng = np.random.default_rng(1)
        for seed in range(10):
            gains = np.random.default_rng(seed).exponential(1.0, size=(4, 2)) * 1e-9
            cfg = make_config(K=4, N=2, bt_target=1e6, w=1e6)
            alloc = greedy_assign(gains, U=2, N=2)
            sol = optimize(alloc, gains, cfg)
            assert sol.ee_trace[-1] >= sol.ee_trace[0] * (1.0 - 1e-9)

    def test_final_interference_consistent(self):
        gains = np.random.default_rng(2).exponential(1.0, size=(6, 3)) * 1e-9
        cfg = make_config(K=6, N=3, bt_target=1e6, w=1e6)
        alloc = greedy_assign(gains, U=2, N=3)
        sol = optimize(alloc, gains, cfg)
        assert sol.converged
        from green_noma.power import _interference_matrix

        recomputed = _interference_matrix(alloc, sol.powers, gains)
        assert np.allclose(recomputed, sol.interference, rtol=1e-5, atol=1e-30)

    def test_budget_limited_device_flagged(self):
        cfg = make_config(K=1, N=1, bt_target=30e6, w=1e6, p_max=1e-4)
        gains = np.array([[1e-9]])
        alloc = single_column_alloc(gains)
        sol = optimize(alloc, gains, cfg)
        assert not sol.converged
        assert not sol.qos_met[0]
        assert sol.powers.sum() <= cfg.p_max * (1 + 1e-9)
        # at the boundary the device still ships what it can
        assert sol.b_sum > 0

    def test_constraint_audit_clean_on_random_instances(self):
        for seed in range(8):
            rng = np.random.default_rng(seed)
            K = int(rng.integers(2, 7))
            N = int(rng.integers(1, 4))
            U = int(np.ceil(K / N)) + int(rng.integers(0, 2))
            gains = rng.exponential(1.0, size=(K, N)) * 1e-9
            cfg = make_config(K=K, N=N, bt_target=8e5, w=1e6)
            alloc = greedy_assign(gains, U=U, N=N)
            sol = optimize(alloc, gains, cfg)
            assert check_constraints(sol, alloc, gains, cfg) == []

    def test_powers_only_on_assigned_pairs(self):
        gains = np.random.default_rng(3).exponential(1.0, size=(4, 4)) * 1e-9
        cfg = make_config(K=4, N=4, bt_target=1e6, w=1e6)
        alloc = greedy_assign(gains, U=1, N=4)
        sol = optimize(alloc, gains, cfg)
        assert (sol.powers[alloc.alpha == 0] == 0.0).all()

    def test_max_iters_cap_returns_best_iterate(self):
        gains = np.random.default_rng(5).exponential(1.0, size=(4, 2)) * 1e-9
        cfg = make_config(K=4, N=2, bt_target=1e6, w=1e6, max_iters=1)
        alloc = greedy_assign(gains, U=2, N=2)
        sol = optimize(alloc, gains, cfg)
        assert not sol.fixed_point and not sol.converged
        assert sol.iterations == 1
        assert sol.ee == max(sol.ee_trace)

    def test_csv_and_summary_serialization(self, tmp_path):
        gains = np.array([[2e-9], [1e-9]])
        cfg = make_config(K=2, N=1, bt_target=1e6, w=1e6)
        alloc = single_column_alloc(gains)
        sol = optimize(alloc, gains, cfg)
        path = tmp_path / "solution.csv"
        sol.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "device,subcarrier,rate,power"
        assert len(lines) == 3
        summary = sol.summary()
        assert summary == {
            "ee": sol.ee,
            "b_sum": sol.b_sum,
            "p_t": sol.p_t,
            "iterations": sol.iterations,
            "converged": True,
        }
        import json

        assert json.loads(sol.summary_json()) == summary

    def test_duals_complementary_slackness(self):
        gains = np.random.default_rng(4).exponential(1.0, size=(4, 2)) * 1e-9
        cfg = make_config(K=4, N=2, bt_target=1e6, w=1e6)
        alloc = greedy_assign(gains, U=2, N=2)
        sol = optimize(alloc, gains, cfg)
        assert sol.converged
        assert (sol.duals.lam[sol.qos_met] > 0).all()
        assert (sol.duals.mu == 0.0).all()
        slack = sol.powers.sum(axis=1) - cfg.p_max
        assert (sol.duals.mu * slack == 0.0).all()


class TestTotalEE:
    def _solution(self, b_sum, p_t):
        from green_noma.power import DualState

        return Solution(
            rates=np.zeros((1, 1)),
            powers=np.zeros((1, 1)),
            b_sum=b_sum,
            p_t=p_t,
            ee=0.0,
            iterations=1,
            converged=True,
            fixed_point=True,
            qos_met=np.ones(1, dtype=bool),
            floor_active=np.zeros((1, 1), dtype=bool),
            interference=np.zeros((1, 1)),
            duals=DualState(np.zeros(1), np.zeros(1), np.zeros((1, 1))),
            ee_trace=(0.0,),
        )

    def test_zero_rates(self):
        assert total_ee(self._solution(0.0, 0.5), 1.0) == 0.0

    def test_direct_arithmetic(self):
        assert total_ee(self._solution(1e6, 1.0), 1.0) == pytest.approx(5e5)

    def test_linear_in_rates(self):
        base = total_ee(self._solution(1e6, 1.0), 1.0)
        assert total_ee(self._solution(3e6, 1.0), 1.0) == pytest.approx(3 * base)
