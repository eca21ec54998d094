"""Linear extended state observers for the two decoupled position channels.

Each channel follows ``dx/dt = v + d`` with ``d`` unknown. The observer
augments the state with ``d``::

    dx_hat/dt = v + d_hat - b_odd * (x_hat - x)
    dd_hat/dt =       - b_even * (x_hat - x)

Between control ticks the virtual input is held, so the observer is a linear
time-invariant system over each period. ``leso_step`` integrates it exactly
(matrix exponential). The measurement is either held at the newest sample
(``zoh``) or ramped linearly from the previous sample to the newest one
(``foh``), which is exact when the relative position moves at constant speed
across the period. Forward Euler is kept as an option.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from userfollow.plant import Disturbance


@dataclass(frozen=True)
class ObserverGains:
    beta1: float
    beta2: float
    beta3: float
    beta4: float

    def __post_init__(self):
        if min(self.beta1, self.beta2, self.beta3, self.beta4) <= 0:
            raise ValueError("observer gains must be strictly positive")


@dataclass(frozen=True)
class ObserverState:
    x_hat: float
    y_hat: float
    d_x_hat: float
    d_y_hat: float

    @property
    def disturbance(self) -> Disturbance:
        return Disturbance(self.d_x_hat, self.d_y_hat)


def default_gains(f_s: float) -> ObserverGains:
    """Position gain 1 and disturbance gain ``f_s/3`` on both channels."""
    if f_s <= 0:
        raise ValueError("f_s must be positive")
    return ObserverGains(1.0, f_s / 3.0, 1.0, f_s / 3.0)


def initial_state(measured, d_hat=(0.0, 0.0)) -> ObserverState:
    """Seed the position estimates from the first measurement."""
    return ObserverState(measured[0], measured[1], d_hat[0], d_hat[1])


@lru_cache(maxsize=64)
def channel_transition(b_pos: float, b_dist: float, dt: float):
    """Exact discretization of one channel.

    Returns ``(Phi, Gamma)`` as nested tuples with
    ``[x_hat, d_hat]+ = Phi @ [x_hat, d_hat] + Gamma @ [v, x_meas]``.
    """
    A = np.array([[-b_pos, 1.0], [-b_dist, 0.0]])
    B = np.array([[1.0, b_pos], [0.0, b_dist]])
    M = np.zeros((4, 4))
    M[:2, :2] = A
    M[:2, 2:] = B
    E = expm(M * dt)
    phi, gam = E[:2, :2], E[:2, 2:]
    return tuple(map(tuple, phi)), tuple(map(tuple, gam))


@lru_cache(maxsize=64)
def ramp_transition(b_pos: float, b_dist: float, dt: float):
    """Response of one channel to a unit-slope measurement ramp over ``dt``.

    With the measurement ``m(s) = m0 + slope * s`` the update is the held
    update for ``m0`` plus ``(r0, r1) * slope``.
    """
    M = np.zeros((4, 4))
    M[:2, :2] = [[-b_pos, 1.0], [-b_dist, 0.0]]
    M[:2, 2] = [b_pos, b_dist]
    M[2, 3] = 1.0
    E = expm(M * dt)
    return float(E[0, 3]), float(E[1, 3])


def _channel(est, d_est, meas, v, b_pos, b_dist, dt, method, prev=None):
    if method == "euler":
        e = est - meas
        return est + dt * (v + d_est - b_pos * e), d_est - dt * b_dist * e
    ((p00, p01), (p10, p11)), ((g00, g01), (g10, g11)) = channel_transition(b_pos, b_dist, dt)
    if method == "foh" and prev is not None:
        r0, r1 = ramp_transition(b_pos, b_dist, dt)
        slope = (meas - prev) / dt
        return (
            p00 * est + p01 * d_est + g00 * v + g01 * prev + r0 * slope,
            p10 * est + p11 * d_est + g10 * v + g11 * prev + r1 * slope,
        )
    return (
        p00 * est + p01 * d_est + g00 * v + g01 * meas,
        p10 * est + p11 * d_est + g10 * v + g11 * meas,
    )


def leso_step(state: ObserverState, measured, virtual_input, gains: ObserverGains, dt: float,
              method: str = "zoh", previous=None) -> ObserverState:
    """Advance both observers by ``dt``.

    Args:
        state: current estimates.
        measured: measured relative position (x, y) in meters.
        virtual_input: linearized-system input (v_x, v_y) applied over the period.
        gains: observer gains.
        dt: period in seconds.
        method: ``"zoh"`` (exact, measurement held), ``"foh"`` (exact,
            measurement ramped from ``previous``) or ``"euler"``.
        previous: measurement at the start of the period; ``foh`` falls back
            to ``zoh`` without it.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if method not in ("zoh", "foh", "euler"):
        raise ValueError(f"unknown method {method!r}")
    px, py = (None, None) if previous is None else previous
    x_hat, d_x = _channel(state.x_hat, state.d_x_hat, measured[0], virtual_input[0],
                          gains.beta1, gains.beta2, dt, method, px)
    y_hat, d_y = _channel(state.y_hat, state.d_y_hat, measured[1], virtual_input[1],
                          gains.beta3, gains.beta4, dt, method, py)
    return ObserverState(x_hat, y_hat, d_x, d_y)

