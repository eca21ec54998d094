"""Human pelvis trajectories: CSV replay, synthetic gait generators and
recovery of the human velocity inputs from sampled poses."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid

from userfollow.errors import BadParams, NonMonotoneTime, SchemaError
from userfollow.frames import Pose2, wrap_angle
from userfollow.plant import HumanCommand

TRAJECTORY_HEADER = ["t", "x", "y", "theta"]
SCENARIOS = ("in_place", "straight_accel", "slalom", "stop_go")


@dataclass
class Trajectory:
    """Uniformly sampled world-frame pelvis poses."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray

    def __len__(self):
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def pose(self, k: int) -> Pose2:
        return Pose2(float(self.x[k]), float(self.y[k]), float(self.theta[k]))

    def truncated(self, n: int) -> "Trajectory":
        return Trajectory(self.t[:n], self.x[:n], self.y[:n], self.theta[:n])


def _resample(t, x, y, theta, f_s):
    n = int(math.floor((t[-1] - t[0]) * f_s + 1e-9)) + 1
    tq = t[0] + np.arange(n) / f_s
    th = np.unwrap(theta)
    thq = np.array([wrap_angle(a) for a in np.interp(tq, t, th)])
    return Trajectory(tq, np.interp(tq, t, x), np.interp(tq, t, y), thq)


def load_trajectory_csv(path, f_s: float = 200.0) -> Trajectory:
    """Read ``t,x,y,theta`` (SI units) and resample to ``1/f_s``.

    Positions are interpolated linearly, headings along the shortest arc.
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRAJECTORY_HEADER:
            raise SchemaError(f"{path}: expected header {','.join(TRAJECTORY_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise SchemaError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
            if not all(math.isfinite(v) for v in vals):
                raise SchemaError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
    if len(rows) < 2:
        raise SchemaError(f"{path}: need at least two samples")
    data = np.array(rows)
    if np.any(np.diff(data[:, 0]) <= 0):
        raise NonMonotoneTime(f"{path}: time column must be strictly increasing")
    return _resample(data[:, 0], data[:, 1], data[:, 2], data[:, 3], f_s)


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for k in range(len(traj)):
            w.writerow([repr(float(traj.t[k])), repr(float(traj.x[k])), repr(float(traj.y[k])),
                        repr(float(traj.theta[k]))])
    return path


# -- generators ---------------------------------------------------------------

def _smoothstep(s):
    """Raised-cosine ramp from 0 to 1 on s in [0, 1]."""
    s = np.clip(s, 0.0, 1.0)
    return 0.5 - 0.5 * np.cos(np.pi * s)


def _path_from_speed(t, speed, heading, oversample=8):
    """Integrate a planar path with given speed and heading functions of time."""
    fine = np.linspace(t[0], t[-1], (len(t) - 1) * oversample + 1)
    sp, hd = speed(fine), heading(fine)
    x = cumulative_trapezoid(sp * np.cos(hd), fine, initial=0.0)
    y = cumulative_trapezoid(sp * np.sin(hd), fine, initial=0.0)
    return x[::oversample], y[::oversample], hd[::oversample]


def _jitter(t, amplitude, rng):
    """Smooth lateral gait variability: three random sinusoids, zero at t=0."""
    if amplitude == 0:
        return np.zeros_like(t)
    out = np.zeros_like(t)
    for _ in range(3):
        f = rng.uniform(0.3, 1.5)
        ph = rng.uniform(0, 2 * np.pi)
        out += amplitude / 3 * (np.sin(2 * np.pi * f * t + ph) - np.sin(ph))
    return out


_DEFAULTS = {
    "in_place": {"amplitude": 0.03, "frequency": 1.0, "yaw_amplitude": 0.0, "jitter": 0.0},
    "straight_accel": {"peak_speed": 1.0, "start_time": 1.0, "accel_time": 2.0, "cruise_time": 4.0,
                       "decel_time": 2.0, "jitter": 0.0},
    "slalom": {"speed": 0.8, "heading_amplitude": math.radians(30.0), "frequency": 0.2,
               "start_time": 1.0, "ramp_time": 2.0, "jitter": 0.0},
    "stop_go": {"speed": 0.8, "walk_time": 2.0, "stand_time": 2.0, "ramp_time": 1.0, "jitter": 0.0},
}


def scenario_defaults(name: str) -> dict:
    if name not in _DEFAULTS:
        raise BadParams(f"unknown scenario {name!r}; expected one of {', '.join(SCENARIOS)}")
    return dict(_DEFAULTS[name])


def _check_params(name, params):
    p = scenario_defaults(name)
    unknown = set(params) - set(p)
    if unknown:
        raise BadParams(f"{name}: unknown parameter(s) {sorted(unknown)}")
    p.update(params)
    for k, v in p.items():
        if not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
            raise BadParams(f"{name}.{k} must be a finite non-negative number, got {v!r}")
    return p


def generate_scenario(name: str, params: dict | None = None, seed: int = 0,
                      duration: float = 20.0, f_s: float = 200.0) -> Trajectory:
    """Synthetic pelvis trajectory starting at the world origin facing +X.

    ``in_place``: lateral sinusoidal sway, no net displacement.
    ``straight_accel``: straight walk with a trapezoidal speed profile.
    ``slalom``: sinusoidal heading while advancing at constant speed.
    ``stop_go``: alternating stand / walk phases with raised-cosine ramps.
    All profiles have continuous velocity.
    """
    p = _check_params(name, params or {})
    if duration <= 0 or f_s <= 0:
        raise BadParams("duration and f_s must be positive")
    n = int(round(duration * f_s)) + 1
    t = np.arange(n) / f_s
    rng = np.random.default_rng(seed)

    if name == "in_place":
        if p["frequency"] <= 0:
            raise BadParams("in_place.frequency must be positive")
        w = 2 * np.pi * p["frequency"]
        x = np.zeros(n)
        y = p["amplitude"] * np.sin(w * t)
        th = p["yaw_amplitude"] * np.sin(w * t)
    elif name == "straight_accel":
        t0, ta, tc, td = p["start_time"], p["accel_time"], p["cruise_time"], p["decel_time"]
        if ta <= 0 or td <= 0:
            raise BadParams("straight_accel accel_time and decel_time must be positive")
        vmax = p["peak_speed"]

        def speed(tt):
            up = np.clip((tt - t0) / ta, 0, 1)
            down = np.clip((tt - t0 - ta - tc) / td, 0, 1)
            return vmax * (up - down)

        x, y, th = _path_from_speed(t, speed, lambda tt: np.zeros_like(tt))
    elif name == "slalom":
        t0, tr, v0 = p["start_time"], p["ramp_time"], p["speed"]
        amp, w = p["heading_amplitude"], 2 * np.pi * p["frequency"]

        def speed(tt):
            if tr == 0:
                return np.where(tt >= t0, v0, 0.0)
            return v0 * _smoothstep((tt - t0) / tr)

        def heading(tt):
            return np.where(tt >= t0, amp * np.sin(w * (tt - t0)), 0.0)

        x, y, th = _path_from_speed(t, speed, heading)
    else:
        walk, stand, tr, v0 = p["walk_time"], p["stand_time"], p["ramp_time"], p["speed"]
        if walk <= 0 or 2 * tr > walk:
            raise BadParams("stop_go requires walk_time > 0 and 2*ramp_time <= walk_time")
        period = walk + stand

        def speed(tt):
            s = np.mod(tt, period) - stand
            if tr == 0:
                return np.where(s >= 0, v0, 0.0)
            return v0 * np.where(s >= 0, _smoothstep(s / tr) * _smoothstep((walk - s) / tr), 0.0)

        x, y, th = _path_from_speed(t, speed, lambda tt: np.zeros_like(tt))

    y = y + _jitter(t, p["jitter"], rng)
    th = np.array([wrap_angle(a) for a in th])
    return Trajectory(t, np.asarray(x, float), np.asarray(y, float), th)


# -- human inputs -------------------------------------------------------------

def derive_human_command(traj: Trajectory, tick: int, prev_delta: float = 0.0) -> HumanCommand:
    """Human inputs at ``tick`` by central differences (one-sided at the ends).

    When the speed is below 1e-6 m/s the direction ``delta`` keeps
    ``prev_delta``.
    """
    n = len(traj)
    if not 0 <= tick < n:
        raise IndexError(f"tick {tick} outside trajectory of length {n}")
    lo, hi = max(tick - 1, 0), min(tick + 1, n - 1)
    span = traj.t[hi] - traj.t[lo]
    vx = (traj.x[hi] - traj.x[lo]) / span
    vy = (traj.y[hi] - traj.y[lo]) / span
    w = wrap_angle(traj.theta[hi] - traj.theta[lo]) / span
    v = math.hypot(vx, vy)
    delta = math.atan2(vy, vx) if v >= 1e-6 else prev_delta
    return HumanCommand(float(v), float(delta), float(w))


def human_commands(traj: Trajectory) -> list[HumanCommand]:
    """:func:`derive_human_command` for every tick, carrying ``delta`` forward."""
    out = []
    delta = 0.0
    for k in range(len(traj)):
        cmd = derive_human_command(traj, k, delta)
        delta = cmd.delta
        out.append(cmd)
    return out


def walk_onset(t, speed, threshold: float = 0.1, sustain: float = 0.5):
    """First time the speed stays above ``threshold`` for ``sustain`` seconds, else None."""
    t = np.asarray(t)
    above = np.asarray(speed) > threshold
    start = None
    for k in range(len(t)):
        if above[k]:
            if start is None:
                start = k
            if t[k] - t[start] >= sustain - 1e-12:
                return float(t[start])
        else:
            start = None
    return None
