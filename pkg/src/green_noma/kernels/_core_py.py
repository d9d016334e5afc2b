"""Pure-Python backend for the hot kernels.

The swap search is vectorized with numpy; the per-device rate solver
uses scalar math on the (tiny) per-device arrays so it mirrors the
compiled backend arithmetic operation for operation.
"""

from __future__ import annotations

import math

import numpy as np

_IMPROVEMENT_EPS = 1e-12


def pam(dist: np.ndarray, medoids: np.ndarray, max_sweeps: int = 512):
    """Best-improvement swap descent for k-medoids.

    dist is a dense (K, K) dissimilarity matrix, medoids the initial
    medoid indices.  Medoids are kept sorted ascending so that an
    equal-distance point is assigned to the lowest medoid index.  Swaps
    are applied while they strictly decrease the total dissimilarity;
    ties between improving swaps go to the lowest (medoid slot,
    candidate) pair.

    Returns (medoids, labels, cost) with labels indexing the sorted
    medoid array.
    """
    n_points = dist.shape[0]
    med = np.sort(np.asarray(medoids, dtype=np.intp))
    n_med = med.shape[0]
    rows = np.arange(n_points)

    labels = np.zeros(n_points, dtype=np.intp)
    d1 = np.zeros(n_points)
    for _ in range(max_sweeps):
        sub = dist[:, med]
        labels = np.argmin(sub, axis=1)
        d1 = sub[rows, labels]
        if n_med > 1:
            sub2 = sub.copy()
            sub2[rows, labels] = np.inf
            d2 = sub2.min(axis=1)
        else:
            d2 = np.full(n_points, np.inf)
        cost = float(d1.sum())

        is_med = np.zeros(n_points, dtype=bool)
        is_med[med] = True
        cand = np.nonzero(~is_med)[0]
        if cand.size == 0:
            break
        dist_cand = dist[:, cand]

        deltas = np.empty((n_med, cand.size))
        for slot in range(n_med):
            own = labels == slot
            repl = np.where(
                own[:, None],
                np.minimum(d2[:, None], dist_cand),
                np.minimum(d1[:, None], dist_cand),
            )
            deltas[slot] = repl.sum(axis=0) - cost
        flat = int(np.argmin(deltas))
        best_slot, best_cand = divmod(flat, cand.size)
        if deltas[best_slot, best_cand] >= -_IMPROVEMENT_EPS:
            break
        med[best_slot] = cand[best_cand]
        med = np.sort(med)
    else:
        raise RuntimeError("swap descent did not terminate")

    sub = dist[:, med]
    labels = np.argmin(sub, axis=1)
    cost = float(sub[rows, labels].sum())
    return med, labels.astype(np.intp), cost


def _level_for_target(y: list[float], target: float) -> float:
    """Water level L with sum(max(0, L - y_i)) == target; y sorted ascending."""
    m = len(y)
    acc = 0.0
    for i in range(m):
        acc += y[i]
        level = (target + acc) / (i + 1)
        if i + 1 == m or level <= y[i + 1]:
            return level
    return (target + acc) / m


def _level_for_budget(c: list[float], budget: float) -> float:
    """Water level L with sum over active of (2^L - c_i) == budget; c sorted."""
    m = len(c)
    acc = 0.0
    for i in range(m):
        acc += c[i]
        chi = (budget + acc) / (i + 1)
        if i + 1 == m or chi <= c[i + 1]:
            return math.log2(chi)
    return math.log2((budget + acc) / m)


def solve_rates(c, target, floors, p_max):
    """Minimum-power rate split for one device.

    c[i] is the power cost slope (noise plus interference over gain) of
    assigned subcarrier i, target the required sum of spectral rates,
    floors[i] the minimum rate keeping interference cancellation
    feasible.  Prefers meeting the target exactly (rates projected up to
    their floors); if the resulting power exceeds p_max the rates are
    recomputed at the power boundary instead.

    Returns (rates, level, mode) with mode 0 when the target is met,
    1 when budget-limited with floors kept, 2 when even the floors do
    not fit within p_max and are dropped.
    """
    m = len(c)
    c = [float(v) for v in c]
    floors = [float(v) for v in floors]
    rates = [0.0] * m
    y = [math.log2(v) for v in c]
    order = sorted(range(m), key=lambda i: (y[i], i))

    pinned = [False] * m
    level = 0.0
    for _ in range(m + 1):
        pinned_sum = 0.0
        for i in range(m):
            if pinned[i]:
                pinned_sum += floors[i]
        remaining = target - pinned_sum
        free_y = [y[i] for i in order if not pinned[i]]
        if remaining > 0.0 and free_y:
            level = _level_for_target(free_y, remaining)
        else:
            level = -math.inf
        changed = False
        for i in range(m):
            if pinned[i]:
                rates[i] = floors[i]
                continue
            rates[i] = level - y[i] if level > y[i] else 0.0
            if rates[i] < floors[i] - 1e-15:
                pinned[i] = True
                rates[i] = floors[i]
                changed = True
        if not changed:
            break

    power = 0.0
    for i in range(m):
        power += c[i] * (2.0 ** rates[i] - 1.0)
    if power <= p_max * (1.0 + 1e-12):
        return rates, level, 0

    floor_power = 0.0
    for i in range(m):
        floor_power += c[i] * (2.0 ** floors[i] - 1.0)
    if floor_power > p_max:
        sorted_c = [c[i] for i in order]
        level = _level_for_budget(sorted_c, p_max)
        for i in range(m):
            rates[i] = level - y[i] if level > y[i] else 0.0
        return rates, level, 2

    pinned = [False] * m
    for _ in range(m + 1):
        pinned_power = 0.0
        for i in range(m):
            if pinned[i]:
                pinned_power += c[i] * (2.0 ** floors[i] - 1.0)
        free_c = [c[i] for i in order if not pinned[i]]
        if free_c:
            level = _level_for_budget(free_c, p_max - pinned_power)
        else:
            level = -math.inf
        changed = False
        for i in range(m):
            if pinned[i]:
                rates[i] = floors[i]
                continue
            rates[i] = level - y[i] if level > y[i] else 0.0
            if rates[i] < floors[i] - 1e-15:
                pinned[i] = True
                rates[i] = floors[i]
                changed = True
        if not changed:
            break
    return rates, level, 1
