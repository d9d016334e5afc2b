"""Energy-efficiency maximization for UAV-relayed uplink NOMA IoT devices.

Pipeline: scenario -> clustering -> subcarrier allocation -> power
optimization, with greedy and exhaustive baselines and a Monte Carlo
sweep harness.
"""

from .allocation import AllocationMatrix, assign_subcarriers, greedy_assign, normalize_gains
from .clustering import ClusterAssignment, SilhouetteReport, k_medoids, select_cluster_count, silhouette
from .harness import SweepResult, SweepSpec, run_sweep, run_trial, write_csv
from .oracle import OracleResult, exhaustive_search, grid_power_oracle
from .power import Solution, optimize, total_ee
from .scenario import ChannelRealization, Position, ScenarioConfig, build_realization, load_config

__version__ = "0.1.0"

__all__ = [
    "AllocationMatrix",
    "ChannelRealization",
    "ClusterAssignment",
    "OracleResult",
    "Position",
    "ScenarioConfig",
    "SilhouetteReport",
    "Solution",
    "SweepResult",
    "SweepSpec",
    "assign_subcarriers",
    "build_realization",
    "exhaustive_search",
    "greedy_assign",
    "grid_power_oracle",
    "k_medoids",
    "load_config",
    "normalize_gains",
    "optimize",
    "run_sweep",
    "run_trial",
    "select_cluster_count",
    "silhouette",
    "total_ee",
    "write_csv",
]
