"""Wheel actuator identification from voltage / speed logs.

Each wheel is fitted independently to ``dv/dt = (K*u - v)/tau`` by
Levenberg-Marquardt on ``(log K, log tau)``, which keeps both parameters
positive without bounds handling.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from userfollow.errors import DegenerateLog, DidNotConverge, SchemaError
from userfollow.plant import ActuatorParams

SYSID_HEADER = ["t", "u_left", "u_right", "v_left", "v_right"]


@dataclass
class SysIdLog:
    """Time stamps (N,), wheel voltages (N, 2) and wheel speeds (N, 2), columns (left, right)."""

    time: np.ndarray
    voltage: np.ndarray
    wheel_speed: np.ndarray

    def __post_init__(self):
        self.time = np.asarray(self.time, dtype=float)
        self.voltage = np.asarray(self.voltage, dtype=float).reshape(len(self.time), -1)
        self.wheel_speed = np.asarray(self.wheel_speed, dtype=float).reshape(len(self.time), -1)
        if self.voltage.shape != self.wheel_speed.shape:
            raise SchemaError("voltage and wheel_speed must have the same shape")
        if len(self.time) < 50:
            raise SchemaError(f"need at least 50 samples, got {len(self.time)}")
        if np.any(np.diff(self.time) <= 0):
            raise SchemaError("time must be strictly increasing")


@dataclass
class WheelFit:
    gain: float
    tau: float
    rmse: float
    iterations: int
    converged: bool
    gradient_norm: float
    rmse_history: list = field(default_factory=list)


@dataclass
class FitResult:
    params: ActuatorParams
    rmse: float
    iterations: int
    converged: bool
    wheels: tuple = ()


def _first_order(time, u, v0, gain, tau):
    dt = np.diff(time)
    n = len(time)
    out = np.empty(n)
    out[0] = v0
    if np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        a = math.exp(-dt[0] / tau)
        b = (1.0 - a) * gain
        # v[k+1] = a v[k] + b u[k]
        out[1:], _ = lfilter([b], [1.0, -a], u[:-1], zi=[a * v0])
        return out
    a = np.exp(-dt / tau)
    for k in range(n - 1):
        out[k + 1] = a[k] * out[k] + (1.0 - a[k]) * gain * u[k]
    return out


def simulate_response(params: ActuatorParams, log: SysIdLog) -> np.ndarray:
    """Predicted wheel speeds (N, 2) with voltages held between samples.

    Starts from the first measured speed of each wheel.
    """
    cols = []
    for i in range(log.voltage.shape[1]):
        cols.append(_first_order(log.time, log.voltage[:, i], log.wheel_speed[0, i],
                                 params.gain_K[i], params.time_constant_tau[i]))
    return np.column_stack(cols)


def _check_excitation(u, v, wheel):
    if not np.any(u != 0.0):
        raise DegenerateLog(f"{wheel} wheel: voltage is identically zero")
    if np.ptp(u) == 0.0 and np.ptp(v) == 0.0:
        raise DegenerateLog(f"{wheel} wheel: constant voltage with no speed transient")


def fit_wheel(time, u, v, gain0: float, tau0: float, grad_tol: float = 1e-8,
              max_iter: int = 200, fd_step: float = 1e-6, max_log_step: float = 0.5) -> WheelFit:
    """Levenberg-Marquardt fit of one wheel.

    Jacobian by central differences in log-parameter space. Only steps that
    lower the cost are accepted, so the rmse history is non-increasing.
    ``grad_tol`` applies to the gradient of the per-sample cost
    ``0.5*mean(r**2)`` so it does not scale with log length.
    """
    if gain0 <= 0 or tau0 <= 0:
        raise ValueError("initial guess must be positive")
    time = np.asarray(time, float)
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    v0 = v[0]

    def residual(p):
        return v - _first_order(time, u, v0, math.exp(p[0]), math.exp(p[1]))

    def jacobian(p):
        J = np.empty((len(v), 2))
        for j in range(2):
            dp = np.zeros(2)
            dp[j] = fd_step
            J[:, j] = (residual(p + dp) - residual(p - dp)) / (2 * fd_step)
        return J

    p = np.array([math.log(gain0), math.log(tau0)])
    r = residual(p)
    cost = 0.5 * float(r @ r)
    lam = 1e-3
    history = [math.sqrt(2 * cost / len(v))]
    converged = False
    it = 0
    gnorm = math.inf
    while it < max_iter:
        J = jacobian(p)
        g = J.T @ r
        gnorm = float(np.linalg.norm(g)) / len(v)
        if gnorm < grad_tol:
            converged = True
            break
        it += 1
        H = J.T @ J
        scale = np.maximum(np.diag(H), 1e-12 * max(float(np.diag(H).max()), 1e-300))
        accepted = False
        while lam < 1e16:
            step = np.linalg.solve(H + lam * np.diag(scale), -g)
            # cap the move in log space so a far initial guess cannot leap onto
            # the tau -> 0 plateau where the tau sensitivity vanishes
            norm = float(np.linalg.norm(step))
            if norm > max_log_step:
                step *= max_log_step / norm
            trial = p + step
            r_trial = residual(trial)
            cost_trial = 0.5 * float(r_trial @ r_trial)
            if np.isfinite(cost_trial) and cost_trial < cost:
                p, r, cost = trial, r_trial, cost_trial
                lam = max(lam / 10.0, 1e-12)
                accepted = True
                break
            lam *= 10.0
        history.append(math.sqrt(2 * cost / len(v)))
        if not accepted:
            # no descent possible at machine precision: we are at the minimum
            # of the discretized cost; report the gradient actually reached.
            gnorm = float(np.linalg.norm(jacobian(p).T @ r)) / len(v)
            converged = gnorm < grad_tol
            break
    return WheelFit(math.exp(p[0]), math.exp(p[1]), history[-1], it, converged, gnorm, history)


def fit_actuator(log: SysIdLog, initial_guess: ActuatorParams, strict: bool = False, **kwargs) -> FitResult:
    """Fit both wheels of ``log``.

    ``wheel_track_b`` is copied from ``initial_guess``; speed logs do not
    identify it. With ``strict`` a non-converged fit raises
    :class:`DidNotConverge` carrying the best-so-far result.
    """
    names = ("left", "right")
    fits = []
    for i in range(log.voltage.shape[1]):
        _check_excitation(log.voltage[:, i], log.wheel_speed[:, i], names[i])
        fits.append(fit_wheel(log.time, log.voltage[:, i], log.wheel_speed[:, i],
                              initial_guess.gain_K[i], initial_guess.time_constant_tau[i], **kwargs))
    params = ActuatorParams(tuple(f.gain for f in fits), tuple(f.tau for f in fits),
                            initial_guess.wheel_track_b)
    pred = simulate_response(params, log)
    rmse = float(np.sqrt(np.mean((pred - log.wheel_speed) ** 2)))
    result = FitResult(params, rmse, max(f.iterations for f in fits),
                       all(f.converged for f in fits), tuple(fits))
    if strict and not result.converged:
        raise DidNotConverge("Levenberg-Marquardt did not reach the gradient tolerance", result)
    return result


def prbs_voltage(time, seed: int = 0, amplitude: float = 0.6 * 24.0, min_hold: float = 0.5,
                 max_hold: float = 2.0) -> np.ndarray:
    """Binary +/-amplitude sequence with random hold times in [min_hold, max_hold]."""
    rng = np.random.default_rng(seed)
    out = np.empty(len(time))
    level = amplitude if rng.random() < 0.5 else -amplitude
    switch = time[0] + rng.uniform(min_hold, max_hold)
    for k, t in enumerate(time):
        while t >= switch:
            level = -level
            switch += rng.uniform(min_hold, max_hold)
        out[k] = level
    return out


def synthesize_log(params: ActuatorParams, duration: float = 20.0, rate: float = 200.0,
                   noise_std: float = 0.0, seed: int = 0) -> SysIdLog:
    """PRBS-excited log of the first-order model, optionally with speed noise."""
    rng = np.random.default_rng(seed)
    n = int(round(duration * rate)) + 1
    time = np.arange(n) / rate
    u = np.column_stack([prbs_voltage(time, seed=int(rng.integers(2**31))) for _ in range(2)])
    zero = np.zeros((n, 2))
    clean = simulate_response(params, SysIdLog(time, u, zero))
    noisy = clean + noise_std * rng.standard_normal(clean.shape)
    return SysIdLog(time, u, noisy)


def load_sysid_csv(path) -> SysIdLog:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != SYSID_HEADER:
            raise SchemaError(f"{path}: expected header {','.join(SYSID_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(SYSID_HEADER):
                raise SchemaError(f"{path}:{lineno}: expected {len(SYSID_HEADER)} fields, got {len(row)}")
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.array(rows)
    return SysIdLog(data[:, 0], data[:, 1:3], data[:, 3:5])


def write_sysid_csv(log: SysIdLog, path, predicted: np.ndarray | None = None) -> Path:
    path = Path(path)
    header = list(SYSID_HEADER)
    if predicted is not None:
        header += ["v_left_pred", "v_right_pred"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(len(log.time)):
            row = [log.time[k], *log.voltage[k], *log.wheel_speed[k]]
            if predicted is not None:
                row += list(predicted[k])
            w.writerow([repr(float(x)) for x in row])
    return path
