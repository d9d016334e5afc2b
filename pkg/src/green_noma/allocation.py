"""Subcarrier assignment: cluster-aware normalized ranking and the raw-gain baseline.

Every device ends up on exactly one subcarrier and no subcarrier hosts
more than U devices.  The multiplexed devices on a subcarrier are
decoded strongest-gain-first, so the decode order is part of the
assignment output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import ClusterAssignment


class CapacityError(ValueError):
    """Raised when N * U < K leaves some device without a subcarrier."""


@dataclass(frozen=True)
class AllocationMatrix:
    alpha: np.ndarray
    decode_order: tuple[tuple[int, ...], ...]
    U: int

    def __post_init__(self) -> None:
        col_sums = self.alpha.sum(axis=0)
        if np.any(col_sums > self.U):
            raise ValueError("subcarrier occupancy exceeds U")
        if np.any(self.alpha.sum(axis=1) < 1):
            raise ValueError("every device needs at least one subcarrier")
        for n, order in enumerate(self.decode_order):
            if sorted(order) != sorted(np.nonzero(self.alpha[:, n])[0].tolist()):
                raise ValueError("decode order does not match assignment")

    @property
    def num_devices(self) -> int:
        return self.alpha.shape[0]

    @property
    def num_subcarriers(self) -> int:
        return self.alpha.shape[1]

    def subcarrier_of(self, device: int) -> int:
        return int(np.nonzero(self.alpha[device])[0][0])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("device,subcarrier,decode_position\n")
            for n, order in enumerate(self.decode_order):
                for pos, device in enumerate(order):
                    fh.write(f"{device},{n},{pos}\n")


def from_alpha(alpha: np.ndarray, gains: np.ndarray, U: int) -> AllocationMatrix:
    """Wrap an explicit assignment pattern, deriving the decode order.

    The assignment operations always emit one subcarrier per device;
    this constructor also accepts multi-subcarrier patterns for the
    power-stage oracles.
    """
    alpha = np.asarray(alpha, dtype=np.int8)
    return AllocationMatrix(alpha=alpha, decode_order=_decode_order(alpha, np.asarray(gains)), U=U)


def normalize_gains(gains: np.ndarray) -> np.ndarray:
    """Divide each device's gains by its own mean, so every row has mean 1."""
    gains = np.asarray(gains, dtype=float)
    if np.any(gains <= 0):
        raise ValueError("gains must be strictly positive")
    return gains / gains.mean(axis=1, keepdims=True)


def _decode_order(alpha: np.ndarray, gains: np.ndarray) -> tuple[tuple[int, ...], ...]:
    """Per subcarrier: assigned devices sorted by descending gain,
    index-ascending on exact ties (that device is demultiplexed first)."""
    orders = []
    for n in range(alpha.shape[1]):
        occupants = np.nonzero(alpha[:, n])[0]
        ranked = sorted(occupants, key=lambda k: (-gains[k, n], k))
        orders.append(tuple(int(k) for k in ranked))
    return tuple(orders)


def _contention_assign(
    score: np.ndarray,
    U: int,
    N: int,
    cluster_labels: np.ndarray | None,
) -> np.ndarray:
    """One-pass greedy assignment of devices to subcarriers.

    Devices are processed in descending order of their best score;
    each takes its best-scoring subcarrier with residual capacity,
    preferring ones not already holding a device of its own cluster.
    """
    K = score.shape[0]
    if score.shape[1] < N:
        raise ValueError("score matrix has fewer columns than N")
    if N * U < K:
        raise CapacityError(f"capacity N*U = {N * U} cannot host {K} devices")
    score = score[:, :N]

    order = np.argsort(-score.max(axis=1), kind="stable")
    occupancy = np.zeros(N, dtype=np.intp)
    cluster_used = None
    if cluster_labels is not None:
        n_clusters = int(cluster_labels.max()) + 1
        cluster_used = np.zeros((n_clusters, N), dtype=bool)

    alpha = np.zeros((K, N), dtype=np.int8)
    for k in order:
        open_cols = occupancy < U
        preferred = open_cols
        if cluster_used is not None:
            fresh = open_cols & ~cluster_used[cluster_labels[k]]
            if fresh.any():
                preferred = fresh
        candidates = np.nonzero(preferred)[0]
        n = candidates[np.argmax(score[k, candidates])]
        alpha[k, n] = 1
        occupancy[n] += 1
        if cluster_used is not None:
            cluster_used[cluster_labels[k], n] = True
    return alpha


def assign_subcarriers(
    norm_gains: np.ndarray,
    clusters: ClusterAssignment,
    U: int,
    N: int,
    raw_gains: np.ndarray | None = None,
) -> AllocationMatrix:
    """Cluster-aware assignment ranked by mean-normalized gains.

    raw_gains, when given, determines the physical decode order; the
    ranking itself always uses the normalized matrix.
    """
    alpha = _contention_assign(np.asarray(norm_gains, dtype=float), U, N, clusters.labels)
    basis = norm_gains if raw_gains is None else raw_gains
    return AllocationMatrix(alpha=alpha, decode_order=_decode_order(alpha, np.asarray(basis)), U=U)


def greedy_assign(raw_gains: np.ndarray, U: int, N: int) -> AllocationMatrix:
    """Baseline assignment ranked by raw gains, ignoring cluster structure."""
    raw = np.asarray(raw_gains, dtype=float)
    alpha = _contention_assign(raw, U, N, None)
    return AllocationMatrix(alpha=alpha, decode_order=_decode_order(alpha, raw), U=U)
