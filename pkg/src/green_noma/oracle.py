"""Ground-truth baselines for small instances, used by tests.

exhaustive_search enumerates every capacity-feasible device-to-subcarrier
map and keeps the best optimized energy efficiency.  grid_power_oracle
validates the water-filling stage by brute-forcing the rate splits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .allocation import AllocationMatrix, from_alpha
from .power import DualState, Solution, optimize, _interference_matrix, _sic_floors
from .scenario import ScenarioConfig

DEFAULT_BUDGET = 1_000_000


class BudgetExceededError(RuntimeError):
    """Enumeration would visit more assignments than the budget allows."""


@dataclass(frozen=True)
class OracleResult:
    best_alloc: AllocationMatrix
    best_solution: Solution
    evaluated: int


@lru_cache(maxsize=None)
def count_feasible_assignments(K: int, N: int, U: int) -> int:
    """Number of device->subcarrier maps with every column holding <= U."""
    if K == 0:
        return 1
    total = 0
    # devices assigned to the first column: choose o of the K, recurse
    if N == 0:
        return 0
    for o in range(min(U, K) + 1):
        total += math.comb(K, o) * count_feasible_assignments(K - o, N - 1, U)
    return total


def _solution_key(sol: Solution) -> tuple:
    return (sol.converged, sol.ee)


def exhaustive_search(
    gains: np.ndarray, config: ScenarioConfig, U: int, budget: int = DEFAULT_BUDGET
) -> OracleResult:
    """Optimal assignment by enumeration, refusing oversized instances.

    Maps are visited in lexicographic device order; ties keep the first
    maximizer, and converged solutions beat unconverged ones.
    """
    K, N = gains.shape
    predicted = count_feasible_assignments(K, N, U)
    if predicted > budget:
        raise BudgetExceededError(
            f"{predicted} feasible assignments exceed the budget of {budget}"
        )

    best: tuple | None = None
    evaluated = 0
    for choice in itertools.product(range(N), repeat=K):
        counts = np.bincount(choice, minlength=N)
        if counts.max() > U:
            continue
        evaluated += 1
        alpha = np.zeros((K, N), dtype=np.int8)
        alpha[np.arange(K), choice] = 1
        alloc = from_alpha(alpha, gains, U)
        sol = optimize(alloc, gains, config)
        if best is None or _solution_key(sol) > _solution_key(best[1]):
            best = (alloc, sol)
    if evaluated != predicted:
        raise AssertionError("enumeration count diverged from the closed form")
    return OracleResult(best_alloc=best[0], best_solution=best[1], evaluated=evaluated)


def _split_grid(target: float, parts: int, resolution: int):
    """All grid points of nonnegative rates over `parts` subcarriers summing
    to target."""
    if parts == 1:
        yield (target,)
        return
    steps = np.linspace(0.0, target, resolution)
    if parts == 2:
        for a in steps:
            yield (a, target - a)
        return
    for a in steps:
        for rest in _split_grid(target - a, parts - 1, resolution):
            yield (a, *rest)


def grid_power_oracle(
    alloc: AllocationMatrix,
    gains: np.ndarray,
    config: ScenarioConfig,
    resolution: int = 1000,
    interference: np.ndarray | None = None,
) -> Solution:
    """Dense-grid minimum-power rate split meeting every device's target.

    With a frozen interference map the per-pair power is direct;
    otherwise powers are resolved exactly along each subcarrier's decode
    order for every grid point.  Refuses instances beyond 3 assigned
    pairs.
    """
    K, N = alloc.alpha.shape
    pairs = int(alloc.alpha.sum())
    if pairs > 3:
        raise ValueError(f"grid oracle limited to 3 assigned pairs, got {pairs}")
    noise = config.noise_power
    target = config.qos_rate / config.w
    device_cols = [np.nonzero(alloc.alpha[k])[0] for k in range(K)]

    grids = [list(_split_grid(target, len(cols), resolution)) for cols in device_cols]
    best_power = np.inf
    best_rates = None
    for combo in itertools.product(*grids):
        rates = np.zeros((K, N))
        for k, cols in enumerate(device_cols):
            rates[k, cols] = combo[k]
        powers = np.zeros((K, N))
        feasible = True
        if interference is not None:
            powers = np.where(
                alloc.alpha > 0, (noise + interference) * (2.0**rates - 1.0) / gains, 0.0
            )
            interf = interference
        else:
            for n, order in enumerate(alloc.decode_order):
                acc = 0.0
                for k in reversed(order):
                    powers[k, n] = (noise + acc) * (2.0 ** rates[k, n] - 1.0) / gains[k, n]
                    acc += powers[k, n] * gains[k, n]
            interf = _interference_matrix(alloc, powers, gains)
        if np.any(powers.sum(axis=1) > config.p_max * (1.0 + 1e-9)):
            feasible = False
        floors = _sic_floors(interf, noise, config.zeta)
        if np.any(rates < floors * (1.0 - 1e-9) - 1e-15):
            feasible = False
        if feasible:
            total = float(powers.sum())
            if total < best_power:
                best_power = total
                best_rates = (rates, powers, interf)

    if best_rates is None:
        raise RuntimeError("no feasible grid point; widen the instance or budget")
    rates, powers, interf = best_rates
    b_sum = float(config.w * rates.sum())
    return Solution(
        rates=config.w * rates,
        powers=powers,
        b_sum=b_sum,
        p_t=float(powers.sum()),
        ee=b_sum / (config.p_f + float(powers.sum())),
        iterations=1,
        converged=True,
        fixed_point=True,
        qos_met=np.ones(K, dtype=bool),
        floor_active=np.zeros((K, N), dtype=bool),
        interference=interf,
        duals=DualState(lam=np.zeros(K), mu=np.zeros(K), delta=np.zeros((K, N))),
        ee_trace=(b_sum / (config.p_f + float(powers.sum())),),
        info={"grid_resolution": resolution},
    )
