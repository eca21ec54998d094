"""Tracking-error statistics and controller comparison tables."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from userfollow.errors import EmptyWindow
from userfollow.sim.trajectory import walk_onset


@dataclass(frozen=True)
class ErrorStats:
    """Mean and peak absolute tracking errors in centimeters."""

    avg_abs_e_x: float
    avg_abs_e_y: float
    max_abs_e_x: float
    max_abs_e_y: float
    window_start: float
    samples: int

    def as_dict(self) -> dict:
        return asdict(self)


def human_speed(log) -> np.ndarray:
    """Central-difference speed of the logged human pose."""
    t, x, y = log["t"], log["xh"], log["yh"]
    if len(t) < 2:
        return np.zeros(len(t))
    return np.hypot(np.gradient(x, t), np.gradient(y, t))


def detect_window_start(log, threshold: float = 0.1, sustain: float = 0.5) -> float:
    """Walk onset of the logged human, or the first tick if it never walks."""
    onset = walk_onset(log["t"], human_speed(log), threshold, sustain)
    return float(log["t"][0]) if onset is None else onset


def compute_stats(log, window_start: float | None = None) -> ErrorStats:
    """Statistics over ticks with ``t >= window_start`` (auto-detected when None)."""
    if len(log["t"]) == 0:
        raise EmptyWindow("log is empty")
    if window_start is None:
        window_start = detect_window_start(log)
    mask = log["t"] >= window_start - 1e-12
    if not mask.any():
        raise EmptyWindow(f"no samples at or after t={window_start} s")
    ex = np.abs(log["ex"][mask]) * 100.0
    ey = np.abs(log["ey"][mask]) * 100.0
    mx, my = float(ex.max()), float(ey.max())
    # summation rounding can put the mean of equal values one ulp above the max
    return ErrorStats(min(float(ex.mean()), mx), min(float(ey.mean()), my), mx, my,
                      float(window_start), int(mask.sum()))


def reduction_percent(baseline: float, proposed: float) -> float:
    """Relative reduction of ``proposed`` with respect to ``baseline`` in percent."""
    if baseline == 0:
        return 0.0 if proposed == 0 else float("-inf")
    return (1.0 - proposed / baseline) * 100.0


def reductions(baseline: ErrorStats, proposed: ErrorStats) -> dict:
    return {
        "avg_abs_e_x": reduction_percent(baseline.avg_abs_e_x, proposed.avg_abs_e_x),
        "avg_abs_e_y": reduction_percent(baseline.avg_abs_e_y, proposed.avg_abs_e_y),
        "max_abs_e_x": reduction_percent(baseline.max_abs_e_x, proposed.max_abs_e_x),
        "max_abs_e_y": reduction_percent(baseline.max_abs_e_y, proposed.max_abs_e_y),
    }


def format_stats(stats: ErrorStats, prefix: str = "") -> str:
    """Flat ``key = value`` report."""
    return "".join(f"{prefix}{k} = {v:.6g}\n" if isinstance(v, float) else f"{prefix}{k} = {v}\n"
                   for k, v in stats.as_dict().items())


def format_comparison(name: str, pid: ErrorStats | None, proposed: ErrorStats | None) -> str:
    """Two-controller table: avg and max rows per controller plus reductions (values in cm)."""
    def cell(s, attr):
        return "   n/a" if s is None else f"{getattr(s, attr):6.2f}"

    lines = [f"scenario: {name}",
             "        |      PID controller       |   Proposed controller",
             "        |  |e_x| (cm)   |e_y| (cm) |  |e_x| (cm)   |e_y| (cm)"]
    for label, ax, ay in (("Avg.", "avg_abs_e_x", "avg_abs_e_y"), ("Max.", "max_abs_e_x", "max_abs_e_y")):
        lines.append(f"  {label:5} |  {cell(pid, ax)}      {cell(pid, ay)}   |  "
                     f"{cell(proposed, ax)}      {cell(proposed, ay)}")
    if pid is not None and proposed is not None:
        r = reductions(pid, proposed)
        lines.append(f"  reduction avg: x {r['avg_abs_e_x']:.2f}%  y {r['avg_abs_e_y']:.2f}%   "
                     f"max: x {r['max_abs_e_x']:.2f}%  y {r['max_abs_e_y']:.2f}%")
    return "\n".join(lines) + "\n"
