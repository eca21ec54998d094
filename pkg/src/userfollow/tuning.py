"""Grid search for the PID baseline gains."""

from __future__ import annotations

import itertools
import math

from userfollow.config import build_scenario, resolve
from userfollow.sim.engine import build_trajectory, run_simulation
from userfollow.sim.stats import compute_stats

KP_GRID = (1.0, 2.0, 3.0, 5.0, 7.5, 10.0, 15.0, 20.0, 25.0, 30.0)
KI_GRID = (0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 7.5, 10.0)
KD_GRID = (0.0, 0.1, 0.2, 0.5, 1.0, 1.5, 2.0)


def pid_objective(log) -> float:
    """Mean absolute tracking error (m) averaged over both axes; inf for failed runs."""
    if not log.completed:
        return math.inf
    st = compute_stats(log, window_start=log["t"][0])
    value = 0.5 * (st.avg_abs_e_x + st.avg_abs_e_y) / 100.0
    return value if math.isfinite(value) else math.inf


def tune_pid(base: dict | None = None, kp_grid=KP_GRID, ki_grid=KI_GRID, kd_grid=KD_GRID,
             progress=None):
    """Exhaustive search over the gain grid, same gains on both axes.

    ``base`` is a partial config; the scenario defaults to ``in_place``.
    Ties keep the first grid point in (kp, ki, kd) order. Returns
    ``(best, table)`` where ``best = (objective, kp, ki, kd)``.
    """
    cfg_dict = resolve({"trajectory": {"name": "in_place"}, **(base or {})})
    cfg_dict["controller"]["kind"] = "pid"
    traj = build_trajectory(build_scenario(cfg_dict))
    table = []
    best = (math.inf, None, None, None)
    for kp, ki, kd in itertools.product(kp_grid, ki_grid, kd_grid):
        cfg_dict["pid"] = {"kp": [kp, kp], "ki": [ki, ki], "kd": [kd, kd]}
        obj = pid_objective(run_simulation(build_scenario(cfg_dict), traj))
        table.append((kp, ki, kd, obj))
        if obj < best[0]:
            best = (obj, kp, ki, kd)
        if progress is not None:
            progress(kp, ki, kd, obj)
    return best, table
