"""Device grouping by channel-gain similarity.

k-medoids partitions the devices, and the mean silhouette score picks
the cluster count, which doubles as the devices-per-subcarrier cap of
the assignment stage.  Clustering runs on log-scaled gains because raw
gains span orders of magnitude and would reduce to outlier isolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

RESTARTS = 5


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    medoids: np.ndarray
    C: int

    def __post_init__(self) -> None:
        if self.C != len(self.medoids):
            raise ValueError("cluster count and medoid count disagree")
        if np.any(self.labels < 0) or np.any(self.labels >= self.C):
            raise ValueError("labels out of range")
        if len(np.unique(self.labels)) != self.C:
            raise ValueError("empty cluster")
        for cluster, medoid in enumerate(self.medoids):
            if self.labels[medoid] != cluster:
                raise ValueError("medoid not labeled with its own cluster")

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("device_index,cluster_label\n")
            for device, label in enumerate(self.labels):
                fh.write(f"{device},{label}\n")


@dataclass(frozen=True)
class SilhouetteReport:
    per_point: np.ndarray
    mean: float


def gain_features(gains: np.ndarray) -> np.ndarray:
    """1-D feature per device: mean gain across subcarriers, in dB."""
    return 10.0 * np.log10(np.mean(gains, axis=1))[:, None]


def _as_matrix(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def _distance_matrix(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


def _seed_medoids(dist: np.ndarray, n_clusters: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy spread seeding: each new medoid drawn with probability
    proportional to squared distance from the chosen set."""
    n_points = dist.shape[0]
    medoids = [int(rng.integers(n_points))]
    dmin = dist[medoids[0]].copy()
    for _ in range(n_clusters - 1):
        weights = dmin**2
        total = weights.sum()
        if total <= 0.0:
            for idx in range(n_points):
                if idx not in medoids:
                    medoids.append(idx)
                    break
        else:
            medoids.append(int(rng.choice(n_points, p=weights / total)))
        dmin = np.minimum(dmin, dist[medoids[-1]])
    return np.array(sorted(medoids), dtype=np.intp)


def k_medoids(values, C: int, rng: np.random.Generator) -> ClusterAssignment:
    """Partition the feature vectors into C clusters around medoids.

    Swap descent from a seeded start, repeated RESTARTS times keeping
    the lowest total dissimilarity.  Points are processed in canonical
    (lexicographically sorted) order so the partition does not depend on
    the device ordering.
    """
    points = _as_matrix(values)
    n_points = points.shape[0]
    if n_points < 3:
        raise ValueError(f"need at least 3 points, got {n_points}")
    if not 2 <= C <= n_points - 1:
        raise ValueError(f"cluster count must be in [2, {n_points - 1}], got {C}")

    order = np.lexsort(points.T[::-1])
    dist = _distance_matrix(points[order])

    best = None
    for _ in range(RESTARTS):
        seeds = _seed_medoids(dist, C, rng)
        medoids, labels, cost = kernels.pam(dist, seeds)
        if best is None or cost < best[2]:
            best = (medoids, labels, cost)

    medoids_c, labels_c, _ = best
    # duplicate points tie toward the lowest medoid, which could empty a
    # cluster; a medoid always claims itself
    labels_c = labels_c.copy()
    labels_c[medoids_c] = np.arange(C)
    labels = np.empty(n_points, dtype=np.intp)
    labels[order] = labels_c
    medoids = np.sort(order[medoids_c])
    # relabel so cluster i is the one whose medoid is i-th smallest device index
    remap = np.empty(C, dtype=np.intp)
    for new, medoid in enumerate(medoids):
        remap[labels[medoid]] = new
    return ClusterAssignment(labels=remap[labels], medoids=medoids, C=C)


def silhouette(values, assignment: ClusterAssignment) -> SilhouetteReport:
    """Per-point silhouette (b - a) / max(a, b); singletons score 0.

    a is the mean distance to the point's own cluster (self excluded),
    b the smallest mean distance to any other cluster.
    """
    points = _as_matrix(values)
    n_points = points.shape[0]
    if len(assignment.labels) != n_points:
        raise ValueError("assignment does not match values")
    counts = np.bincount(assignment.labels, minlength=assignment.C)
    if np.any(counts == 0):
        raise ValueError("empty cluster")

    dist = _distance_matrix(points)
    labels = assignment.labels
    members = [np.nonzero(labels == c)[0] for c in range(assignment.C)]

    # plain accumulation keeps scores reproducible against a reference
    # implementation down to the last bit
    scores = []
    for i in range(n_points):
        own = labels[i]
        if counts[own] == 1:
            scores.append(0.0)
            continue
        acc = 0.0
        for j in members[own]:
            if j != i:
                acc += dist[i, j]
        a = acc / (counts[own] - 1)
        b = np.inf
        for other in range(assignment.C):
            if other == own:
                continue
            acc = 0.0
            for j in members[other]:
                acc += dist[i, j]
            b = min(b, acc / counts[other])
        denom = max(a, b)
        scores.append(0.0 if denom == 0.0 else (b - a) / denom)

    total = 0.0
    for s in scores:
        total += s
    return SilhouetteReport(per_point=np.array(scores), mean=total / n_points)


def select_cluster_count(
    values,
    rng: np.random.Generator,
    max_clusters: int | None = None,
    return_scores: bool = False,
):
    """Pick the cluster count with maximal mean silhouette.

    Scans C in [2, K-1] (optionally capped), breaking ties toward the
    smaller count.  Each candidate uses an independent child RNG so the
    scan order cannot leak between candidates.
    """
    points = _as_matrix(values)
    n_points = points.shape[0]
    if n_points < 3:
        raise ValueError(f"need at least 3 points, got {n_points}")
    upper = n_points - 1
    if max_clusters is not None:
        upper = min(upper, max_clusters)

    candidates = range(2, upper + 1)
    children = rng.spawn(len(candidates))
    best_c, best_assignment, best_score = None, None, -np.inf
    scores = {}
    for child, C in zip(children, candidates):
        assignment = k_medoids(points, C, child)
        score = silhouette(points, assignment).mean
        scores[C] = score
        if score > best_score:
            best_c, best_assignment, best_score = C, assignment, score
    if return_scores:
        return best_c, best_assignment, scores
    return best_c, best_assignment
