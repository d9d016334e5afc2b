"""Rate and power optimization on a fixed subcarrier assignment.

Each device must deliver bt_target bits within the slot, which pins its
required rate sum.  Power is minimized per device by water-filling
across its assigned subcarriers, alternating with interference
re-evaluation until the total energy efficiency settles.  Interference
is residual after successive cancellation: a device only hears the
co-channel devices decoded after it.

A device whose target does not fit inside its power budget transmits at
the budget boundary instead and is flagged, so the solution still
reports what the device could deliver.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .allocation import AllocationMatrix
from .scenario import ScenarioConfig

LN2 = math.log(2.0)


@dataclass(frozen=True)
class DualState:
    """Multipliers of the per-device problems at the final iterate.

    lam prices the rate-sum equality, mu the power budget, delta the
    per-subcarrier cancellation floor.  Meaningful for converged
    solutions; budget-limited devices report lam = 0 and mu > 0.
    """

    lam: np.ndarray
    mu: np.ndarray
    delta: np.ndarray


@dataclass(frozen=True)
class Solution:
    rates: np.ndarray
    powers: np.ndarray
    b_sum: float
    p_t: float
    ee: float
    iterations: int
    converged: bool
    fixed_point: bool
    qos_met: np.ndarray
    floor_active: np.ndarray
    interference: np.ndarray
    duals: DualState
    ee_trace: tuple[float, ...]
    info: dict = field(default_factory=dict)

    def delivered_bits(self, config: ScenarioConfig) -> np.ndarray:
        """Bits each device gets across the slot."""
        return config.slot_duration * self.rates.sum(axis=1)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("device,subcarrier,rate,power\n")
            for k, n in zip(*np.nonzero(self.rates > 0)):
                fh.write(f"{k},{n},{self.rates[k, n]:.10g},{self.powers[k, n]:.10g}\n")

    def summary(self) -> dict:
        return {
            "ee": self.ee,
            "b_sum": self.b_sum,
            "p_t": self.p_t,
            "iterations": self.iterations,
            "converged": bool(self.converged),
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def interference(
    alloc: AllocationMatrix, powers: np.ndarray, gains: np.ndarray, k: int, n: int
) -> float:
    """Residual co-channel power seen by device k on subcarrier n.

    Sums p*g over the co-assigned devices decoded after k; the last
    decoded device sees none.
    """
    order = alloc.decode_order[n]
    if k not in order:
        raise ValueError(f"device {k} is not assigned to subcarrier {n}")
    pos = order.index(k)
    total = 0.0
    for j in order[pos + 1 :]:
        total += powers[j, n] * gains[j, n]
    return total


def sic_feasible(p: float, g: float, I: float, zeta: float) -> bool:
    """Cancellation works when received power dominates the residual."""
    if I <= 0.0:
        return True
    return p * g / I >= zeta


def rate(alpha: int, p: float, g: float, I: float, w: float, noise: float) -> float:
    """Achievable rate in bits/s; zero for an unassigned pair."""
    if noise <= 0:
        raise ValueError("noise power must be positive")
    if alpha == 0:
        return 0.0
    return w * math.log2(1.0 + p * g / (noise + I))


def power_from_rate(r: float, g: float, I: float, noise: float) -> float:
    """Transmit power sustaining spectral rate r (bits/s/Hz) on one subcarrier."""
    if g <= 0:
        raise ValueError("gain must be positive")
    if r < 0:
        raise ValueError("rate must be nonnegative")
    return (noise + I) * (2.0**r - 1.0) / g


def _interference_matrix(
    alloc: AllocationMatrix, powers: np.ndarray, gains: np.ndarray
) -> np.ndarray:
    out = np.zeros_like(powers)
    for n, order in enumerate(alloc.decode_order):
        acc = 0.0
        for k in reversed(order):
            out[k, n] = acc
            acc += powers[k, n] * gains[k, n]
    return out


def _sic_floors(interf: np.ndarray, noise: float, zeta: float) -> np.ndarray:
    floors = np.zeros_like(interf)
    mask = interf > 0.0
    floors[mask] = np.log2(1.0 + zeta * interf[mask] / (noise + interf[mask]))
    return floors


def waterfill_device(
    k: int,
    alloc: AllocationMatrix,
    gains: np.ndarray,
    interference_snapshot: np.ndarray,
    config: ScenarioConfig,
    duals: DualState | None = None,
):
    """Optimal spectral rates for device k against a frozen interference map.

    Returns (rates, qos_met) where rates is a length-N vector in
    bits/s/Hz, nonzero only on k's subcarriers.  Updates duals in place
    when provided.
    """
    cols = np.nonzero(alloc.alpha[k])[0]
    if cols.size == 0:
        raise ValueError(f"device {k} has no assigned subcarrier")
    noise = config.noise_power
    I = interference_snapshot[k, cols]
    c = (noise + I) / gains[k, cols]
    floors = _sic_floors(I, noise, config.zeta)
    target = config.qos_rate / config.w
    r, level, mode = kernels.solve_rates(c, target, floors, config.p_max)

    out = np.zeros(alloc.num_subcarriers)
    out[cols] = r
    if duals is not None:
        lam, mu, delta = _device_duals(c, floors, r, level, mode)
        duals.lam[k] = lam
        duals.mu[k] = mu
        duals.delta[k, cols] = delta
    return out, mode == kernels.RATES_TARGET_MET


def _device_duals(c, floors, r, level, mode):
    if not math.isfinite(level):
        return 0.0, 0.0, np.zeros(len(c))
    if mode == kernels.RATES_TARGET_MET:
        lam = LN2 * 2.0**level
        mu = 0.0
    else:
        lam = 0.0
        mu = 1.0 / (LN2 * 2.0**level)
    delta = np.zeros(len(c))
    if mode == kernels.RATES_TARGET_MET:
        for i in range(len(c)):
            if floors[i] > 0.0:
                delta[i] = max(0.0, c[i] * LN2 * 2.0 ** r[i] - lam)
    return lam, mu, delta


def optimize(alloc: AllocationMatrix, gains: np.ndarray, config: ScenarioConfig) -> Solution:
    """Alternate per-device water-filling with interference re-evaluation.

    Powers start at p_max over the number of occupied subcarriers to
    probe the interference once, then each outer iteration solves every
    device against the snapshot from the previous one.  Stops when the
    relative change of the total energy efficiency drops below tol.
    """
    K, N = alloc.alpha.shape
    if gains.shape != (K, N):
        raise ValueError("gains shape does not match allocation")
    noise = config.noise_power
    w = config.w
    target = config.qos_rate / w
    device_cols = [np.nonzero(alloc.alpha[k])[0] for k in range(K)]
    occupied = int((alloc.alpha.sum(axis=0) > 0).sum())

    powers = np.where(alloc.alpha > 0, config.p_max / occupied, 0.0)
    rates_spec = np.zeros((K, N))
    qos_met = np.ones(K, dtype=bool)
    duals = DualState(lam=np.zeros(K), mu=np.zeros(K), delta=np.zeros((K, N)))
    interf = np.zeros((K, N))
    floor_active = np.zeros((K, N), dtype=bool)

    ee_trace = []
    prev_ee = None
    fixed_point = False
    iterations = 0
    best = None
    for iterations in range(1, config.max_iters + 1):
        interf = _interference_matrix(alloc, powers, gains)
        new_powers = np.zeros((K, N))
        for k in range(K):
            cols = device_cols[k]
            I = interf[k, cols]
            c = (noise + I) / gains[k, cols]
            floors = _sic_floors(I, noise, config.zeta)
            r, level, mode = kernels.solve_rates(c, target, floors, config.p_max)
            r = np.asarray(r)
            rates_spec[k, :] = 0.0
            rates_spec[k, cols] = r
            new_powers[k, cols] = c * (2.0**r - 1.0)
            qos_met[k] = mode == kernels.RATES_TARGET_MET
            floor_active[k, :] = False
            floor_active[k, cols] = (floors > 0.0) & (r <= floors * (1.0 + 1e-12))
            lam, mu, delta = _device_duals(c, floors, r, level, mode)
            duals.lam[k] = lam
            duals.mu[k] = mu
            duals.delta[k, :] = 0.0
            duals.delta[k, cols] = delta

        powers = new_powers
        p_t = float(powers.sum())
        b_sum = float(w * rates_spec.sum())
        ee = b_sum / (config.p_f + p_t)
        ee_trace.append(ee)
        if best is None or ee > best[0]:
            best = (ee, b_sum, p_t, rates_spec.copy(), powers.copy(), interf,
                    qos_met.copy(), floor_active.copy())
        if prev_ee is not None and abs(ee - prev_ee) <= config.tol * max(abs(prev_ee), 1e-300):
            fixed_point = True
            break
        prev_ee = ee

    if not fixed_point:
        # hand back the best iterate seen rather than wherever the
        # oscillation stopped
        ee, b_sum, p_t, rates_spec, powers, interf, qos_met, floor_active = best

    all_met = bool(qos_met.all())
    return Solution(
        rates=w * rates_spec,
        powers=powers,
        b_sum=b_sum,
        p_t=p_t,
        ee=ee,
        iterations=iterations,
        converged=fixed_point and all_met,
        fixed_point=fixed_point,
        qos_met=qos_met.copy(),
        floor_active=floor_active,
        interference=interf,
        duals=duals,
        ee_trace=tuple(ee_trace),
    )


def total_ee(solution: Solution, p_f: float) -> float:
    """Delivered bits per Joule: rate sum over circuit plus transmit power."""
    return solution.b_sum / (p_f + solution.p_t)


def check_constraints(
    solution: Solution,
    alloc: AllocationMatrix,
    gains: np.ndarray,
    config: ScenarioConfig,
    rel_tol: float = 1e-6,
) -> list[str]:
    """Constraint audit of a solution; returns human-readable violations.

    Converged solutions must pass with an empty list: per-device power
    within p_max, delivered bits matching the target (floors may push
    past it), cancellation ratio at least zeta, occupancy at most U,
    and powers confined to assigned pairs.
    """
    violations = []
    K, N = alloc.alpha.shape

    if np.any(solution.powers[alloc.alpha == 0] != 0.0):
        violations.append("power on unassigned pair")
    if np.any(solution.powers < 0.0):
        violations.append("negative power")

    col_occupancy = alloc.alpha.sum(axis=0)
    if np.any(col_occupancy > alloc.U):
        violations.append(f"occupancy {col_occupancy.max()} exceeds U={alloc.U}")

    per_device_power = solution.powers.sum(axis=1)
    over = per_device_power > config.p_max * (1.0 + rel_tol)
    if np.any(over):
        worst = float(per_device_power.max())
        violations.append(f"device power {worst:.6g} exceeds p_max {config.p_max}")

    delivered = solution.delivered_bits(config)
    for k in range(K):
        if not solution.qos_met[k]:
            continue
        low = delivered[k] < config.bt_target * (1.0 - rel_tol)
        high = delivered[k] > config.bt_target * (1.0 + rel_tol)
        if low or (high and not solution.floor_active[k].any()):
            violations.append(
                f"device {k} delivered {delivered[k]:.6g} bits vs target {config.bt_target:.6g}"
            )

    residual = _interference_matrix(alloc, solution.powers, gains)
    for n, order in enumerate(alloc.decode_order):
        for k in order:
            I = residual[k, n]
            if I <= 0.0:
                continue
            ratio = solution.powers[k, n] * gains[k, n] / I
            if solution.qos_met[k] and ratio < config.zeta - rel_tol:
                violations.append(f"SIC ratio {ratio:.6g} below zeta at ({k},{n})")
    return violations
