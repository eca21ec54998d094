"""Static figures for run, compare and sysid reports.

Everything renders off-screen with the Agg backend. PNG metadata is pinned
so identical data yields identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_PNG_META = {"Software": None}
_COLORS = {"pid": "tab:orange", "proposed": "tab:blue"}

plt.rcParams.update({
    "figure.dpi": 100,
    "savefig.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.frameon": False,
})


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="png", metadata=_PNG_META, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_tracking_errors(logs: dict, path, title: str = "", window_start: float | None = None) -> Path:
    """Relative-position errors over time, one line per controller.

    ``logs`` maps a controller label to a :class:`SimLog`.
    """
    fig, axes = plt.subplots(2, 1, figsize=(7, 4.5), sharex=True)
    for label, log in logs.items():
        color = _COLORS.get(label)
        axes[0].plot(log["t"], log["ex"] * 100, lw=1.0, color=color, label=label)
        axes[1].plot(log["t"], log["ey"] * 100, lw=1.0, color=color, label=label)
    for ax, name in zip(axes, ("e_x", "e_y")):
        ax.set_ylabel(f"{name} (cm)")
        if window_start is not None:
            ax.axvline(window_start, color="0.5", lw=0.8, ls="--")
    axes[1].set_xlabel("time (s)")
    axes[0].legend(loc="upper right")
    if title:
        axes[0].set_title(title)
    return _save(fig, path)


def plot_paths(logs: dict, path, title: str = "") -> Path:
    """World-frame paths of the human and of the robot under each controller."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    first = next(iter(logs.values()))
    ax.plot(first["xh"], first["yh"], color="k", lw=1.2, label="human")
    for label, log in logs.items():
        ax.plot(log["xr"], log["yr"], lw=1.0, ls="--", color=_COLORS.get(label), label=f"robot ({label})")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_disturbance(log, path, title: str = "") -> Path:
    """True versus estimated human-induced velocity in the robot frame."""
    fig, axes = plt.subplots(2, 1, figsize=(7, 4.5), sharex=True)
    for ax, axis in zip(axes, ("x", "y")):
        ax.plot(log["t"], log[f"d{axis}_true"], color="k", lw=1.0, label="true")
        ax.plot(log["t"], log[f"d{axis}_hat"], color="tab:blue", lw=1.0, ls="--", label="estimate")
        ax.set_ylabel(f"d_{axis} (m/s)")
    axes[1].set_xlabel("time (s)")
    axes[0].legend(loc="upper right")
    if title:
        axes[0].set_title(title)
    return _save(fig, path)


def plot_sysid(log, predicted: np.ndarray, path, title: str = "") -> Path:
    """Measured and predicted wheel speeds above the applied voltages."""
    fig, axes = plt.subplots(3, 1, figsize=(7, 6), sharex=True,
                             gridspec_kw={"height_ratios": [2, 2, 1]})
    for i, side in enumerate(("left", "right")):
        axes[i].plot(log.time, log.wheel_speed[:, i], color="0.6", lw=0.8, label="measured")
        axes[i].plot(log.time, predicted[:, i], color="tab:red", lw=1.0, label="model")
        axes[i].set_ylabel(f"v_{side} (m/s)")
    axes[0].legend(loc="upper right")
    axes[2].step(log.time, log.voltage[:, 0], where="post", lw=0.8, label="left")
    axes[2].step(log.time, log.voltage[:, 1], where="post", lw=0.8, label="right")
    axes[2].set_ylabel("u (V)")
    axes[2].set_xlabel("time (s)")
    axes[2].legend(loc="upper right", ncol=2)
    if title:
        axes[0].set_title(title)
    return _save(fig, path)
