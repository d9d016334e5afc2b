"""End-to-end pipeline and seeded Monte Carlo sweeps.

A trial draws one channel, derives the devices-per-subcarrier cap from
the grouping stage, assigns subcarriers with the selected algorithm,
and optimizes power.  Sweeps run paired trials (every algorithm sees
the same channel realizations) over a grid of one variable and emit
CSV rows.

mean_ee aggregates every trial whose power iteration reached its fixed
point, including trials where some device was budget-limited; those
count against convergence_rate, which reports the fraction of trials
with all quality-of-service targets met.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .allocation import AllocationMatrix, assign_subcarriers, greedy_assign, normalize_gains
from .clustering import ClusterAssignment, gain_features, select_cluster_count
from .oracle import DEFAULT_BUDGET, count_feasible_assignments, exhaustive_search
from .power import Solution, optimize
from .scenario import ChannelRealization, ScenarioConfig, build_realization

ALGORITHMS = ("green_ai", "greedy", "exhaustive")
SWEEP_VARIABLES = ("p_f", "bt_target", "K")

# silhouette beyond 3 groups on the smooth 1-D gain features is selection
# noise; deeper multiplexing chains also push first-decoded devices past
# the power budget, so the scan stops at 3
MAX_CLUSTER_CANDIDATES = 3

DEFAULT_GRIDS = {
    "p_f": tuple(np.round(np.linspace(0.1003, 1.4002, 14), 6)),
    "bt_target": tuple(float(v) for v in range(10_000, 90_001, 10_000)),
    "K": tuple(range(10, 71, 10)),
}


def derive_seed(base_seed: int, *parts) -> int:
    """Stable 63-bit seed from the base seed and arbitrary labels."""
    text = f"{base_seed}|" + "|".join(repr(p) for p in parts)
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


@dataclass(frozen=True)
class TrialContext:
    """Everything shared by the algorithms within one paired trial."""

    config: ScenarioConfig
    seed: int
    realization: ChannelRealization
    clusters: ClusterAssignment
    U: int
    C: int | None
    gains: np.ndarray


def _singleton_clusters(K: int) -> ClusterAssignment:
    idx = np.arange(K, dtype=np.intp)
    return ClusterAssignment(labels=idx.copy(), medoids=idx.copy(), C=K)


def prepare_trial(config: ScenarioConfig, seed: int, u_override: int | None = None) -> TrialContext:
    """Draw the channel and derive (U, N) deterministically from the seed."""
    rng = np.random.default_rng(derive_seed(seed, "scenario"))
    realization = build_realization(config, rng)

    C = None
    clusters = None
    if config.K >= 3:
        features = gain_features(realization.gains)
        cluster_rng = np.random.default_rng(derive_seed(seed, "clustering"))
        C, clusters = select_cluster_count(
            features, cluster_rng, max_clusters=MAX_CLUSTER_CANDIDATES
        )
    if clusters is None:
        clusters = _singleton_clusters(config.K)

    U = u_override if u_override is not None else (C if C is not None else min(2, config.K))
    n_eff = config.N if config.N is not None else max(1, math.ceil(config.K / U))
    gains = realization.gains[:, :n_eff]
    return TrialContext(
        config=config,
        seed=seed,
        realization=realization,
        clusters=clusters,
        U=U,
        C=C,
        gains=gains,
    )


def solve_allocation(ctx: TrialContext, algorithm: str) -> AllocationMatrix | None:
    if algorithm == "green_ai":
        return assign_subcarriers(
            normalize_gains(ctx.gains),
            ctx.clusters,
            ctx.U,
            ctx.gains.shape[1],
            raw_gains=ctx.gains,
        )
    if algorithm == "greedy":
        return greedy_assign(ctx.gains, ctx.U, ctx.gains.shape[1])
    return None


def run_algorithm(ctx: TrialContext, algorithm: str, budget: int = DEFAULT_BUDGET) -> Solution:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if algorithm == "exhaustive":
        result = exhaustive_search(ctx.gains, ctx.config, ctx.U, budget)
        solution = result.best_solution
    else:
        alloc = solve_allocation(ctx, algorithm)
        solution = optimize(alloc, ctx.gains, ctx.config)
    cluster_sizes = np.bincount(ctx.clusters.labels)
    solution.info.update(
        algorithm=algorithm,
        seed=ctx.seed,
        U=ctx.U,
        cluster_count=ctx.C,
        max_cluster_size=int(cluster_sizes.max()),
        subcarriers=ctx.gains.shape[1],
    )
    return solution


def run_trial(
    config: ScenarioConfig,
    algorithm: str,
    seed: int,
    u_override: int | None = None,
    budget: int = DEFAULT_BUDGET,
) -> Solution:
    """Full pipeline for one algorithm on one seeded channel."""
    return run_algorithm(prepare_trial(config, seed, u_override), algorithm, budget)


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    trials: int
    base: ScenarioConfig
    algorithms: tuple[str, ...] = ("green_ai", "greedy")
    budget: int = DEFAULT_BUDGET

    def __post_init__(self) -> None:
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"variable must be one of {SWEEP_VARIABLES}")
        if not self.values:
            raise ValueError("values must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("values must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")
        if "exhaustive" in self.algorithms:
            for value in self.values:
                cfg = apply_value(self.base, self.variable, value)
                n_eff = cfg.N if cfg.N is not None else max(1, math.ceil(cfg.K / 2))
                if count_feasible_assignments(cfg.K, n_eff, 2) > self.budget:
                    raise ValueError(
                        f"exhaustive enumeration at {self.variable}={value} exceeds the budget"
                    )


@dataclass(frozen=True)
class SweepRow:
    variable: str
    value: float
    algorithm: str
    mean_ee: float
    std_ee: float
    trials: int
    convergence_rate: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    def by_algorithm(self, algorithm: str) -> list[SweepRow]:
        return [r for r in self.rows if r.algorithm == algorithm]


def apply_value(base: ScenarioConfig, variable: str, value) -> ScenarioConfig:
    if variable == "K":
        return dataclasses.replace(base, K=int(value))
    return dataclasses.replace(base, **{variable: float(value)})


def trial_seed(base: ScenarioConfig, variable: str, value, trial: int) -> int:
    """Seed for trial t of a sweep cell.

    Values that do not shape the channel (circuit power, QoS target)
    share seeds across the sweep, so every cell sees the same channel
    draws and the trend reflects the model rather than seed noise.  The
    device count does shape the channel and keeps per-value seeds.
    """
    if variable == "K":
        return derive_seed(base.seed, variable, value, trial)
    return derive_seed(base.seed, trial)


def _run_cell(args) -> tuple[int, int, dict]:
    value_idx, trial, variable, value, base, algorithms, budget = args
    config = apply_value(base, variable, value)
    seed = trial_seed(base, variable, value, trial)
    ctx = prepare_trial(config, seed)
    out = {}
    for algorithm in algorithms:
        sol = run_algorithm(ctx, algorithm, budget)
        out[algorithm] = (sol.ee, sol.fixed_point, sol.converged)
    return value_idx, trial, out


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Paired Monte Carlo sweep; one row per (value, algorithm)."""
    tasks = [
        (vi, t, spec.variable, value, spec.base, spec.algorithms, spec.budget)
        for vi, value in enumerate(spec.values)
        for t in range(spec.trials)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, tasks, chunksize=4))
    else:
        results = [_run_cell(task) for task in tasks]

    cells: dict[tuple[int, str], list] = {}
    for value_idx, trial, per_algo in results:
        for algorithm, stats in per_algo.items():
            cells.setdefault((value_idx, algorithm), []).append((trial, stats))

    rows = []
    for value_idx, value in enumerate(spec.values):
        for algorithm in sorted(spec.algorithms):
            entries = sorted(cells[(value_idx, algorithm)])
            ees = [ee for _, (ee, fixed, _) in entries if fixed]
            converged = sum(1 for _, (_, _, conv) in entries if conv)
            rows.append(
                SweepRow(
                    variable=spec.variable,
                    value=float(value),
                    algorithm=algorithm,
                    mean_ee=float(np.mean(ees)) if ees else float("nan"),
                    std_ee=float(np.std(ees)) if ees else float("nan"),
                    trials=spec.trials,
                    convergence_rate=converged / spec.trials,
                )
            )
    return SweepResult(rows=tuple(rows))


CSV_HEADER = "variable,value,algorithm,mean_ee,std_ee,trials,convergence_rate"


def write_csv(result: SweepResult, path: str | Path) -> None:
    lines = [CSV_HEADER]
    for r in result.rows:
        lines.append(
            f"{r.variable},{r.value:.10g},{r.algorithm},{r.mean_ee:.10g},"
            f"{r.std_ee:.10g},{r.trials},{r.convergence_rate:.10g}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
