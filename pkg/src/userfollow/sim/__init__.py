"""Scenario construction, closed-loop simulation and error statistics."""

from userfollow.sim.trajectory import (SCENARIOS, Trajectory, derive_human_command,
                                       generate_scenario, load_trajectory_csv)
from userfollow.sim.engine import LOG_COLUMNS, SimLog, run_simulation
from userfollow.sim.stats import ErrorStats, compute_stats, reduction_percent

__all__ = [
    "SCENARIOS", "Trajectory", "derive_human_command", "generate_scenario", "load_trajectory_csv",
    "LOG_COLUMNS", "SimLog", "run_simulation", "ErrorStats", "compute_stats", "reduction_percent",
]
