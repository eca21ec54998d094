"""Following control law and the PID baseline.

After feedback linearization the relative position obeys ``de/dt = v + d``
per axis. The proposed law is ``v = -K_e e - pinv(B_v) B_d d_hat`` with
``K_e`` from the LQR Riccati equation (A = 0, B_v = I), mapped back to the
unicycle inputs through the inverse decoupling matrix::

    M(x) = [[-1,  y],
            [ 0, -x]]

which is invertible as long as the human stays in front of the robot
(x > 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from userfollow.errors import NotPositiveDefinite, SingularityGuard
from userfollow.frames import Pose2
from userfollow.plant import Disturbance, RobotCommand


@dataclass(frozen=True)
class ControllerConfig:
    Q: tuple = ((200.0, 0.0), (0.0, 200.0))
    R: tuple = ((1.0, 0.0), (0.0, 1.0))
    x_d: float = 0.55
    y_d: float = 0.0
    x_guard_epsilon: float = 0.05
    v_max: float = 1.5
    w_max: float = 2.0
    B_v: tuple = ((1.0, 0.0), (0.0, 1.0))
    B_d: tuple = ((1.0, 0.0), (0.0, 1.0))


@dataclass(frozen=True)
class GainMatrix:
    K_e: np.ndarray
    P: np.ndarray
    residual: float

    def __post_init__(self):
        object.__setattr__(self, "_k", tuple(tuple(float(a) for a in row) for row in self.K_e))

    @property
    def k_x(self) -> float:
        return float(self.K_e[0, 0])

    @property
    def k_y(self) -> float:
        return float(self.K_e[1, 1])


@dataclass(frozen=True)
class ErrorState:
    e_x: float
    e_y: float


@dataclass(frozen=True)
class VirtualCommand:
    v_x: float
    v_y: float
    feedback: tuple = (0.0, 0.0)
    feedforward: tuple = (0.0, 0.0)


def _check_spd(name, M):
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise NotPositiveDefinite(f"{name} must be 2x2, got shape {M.shape}")
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max())):
        raise NotPositiveDefinite(f"{name} is not symmetric")
    if np.linalg.eigvalsh(M).min() <= 0:
        raise NotPositiveDefinite(f"{name} is not positive definite")
    return M


def _sqrtm_spd(M):
    w, V = np.linalg.eigh(M)
    return (V * np.sqrt(w)) @ V.T


def care_residual(P, Q, R, A=None, B=None) -> float:
    """Frobenius norm of ``A'P + PA - P B R^-1 B' P + Q``."""
    P, Q, R = (np.asarray(m, dtype=float) for m in (P, Q, R))
    A = np.zeros_like(P) if A is None else np.asarray(A, dtype=float)
    B = np.eye(P.shape[0]) if B is None else np.asarray(B, dtype=float)
    res = A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q
    return float(np.linalg.norm(res, "fro"))


def solve_lqr(Q, R) -> GainMatrix:
    """LQR gain for the decoupled error dynamics (A = 0, B_v = I).

    The Riccati equation reduces to ``P R^-1 P = Q``, whose SPD solution is
    ``P = R^1/2 (R^-1/2 Q R^-1/2)^1/2 R^1/2``. Diagonal weights take the
    elementwise shortcut ``p_ii = sqrt(q_ii r_ii)``.
    """
    Q = _check_spd("Q", Q)
    R = _check_spd("R", R)
    if np.count_nonzero(Q - np.diag(np.diag(Q))) == 0 and np.count_nonzero(R - np.diag(np.diag(R))) == 0:
        P = np.diag(np.sqrt(np.diag(Q) * np.diag(R)))
    else:
        Rh = _sqrtm_spd(R)
        Rih = np.linalg.inv(Rh)
        P = Rh @ _sqrtm_spd(Rih @ Q @ Rih) @ Rh
        P = 0.5 * (P + P.T)
    K = np.linalg.solve(R, P)
    res = care_residual(P, Q, R)
    if res >= 1e-9 * max(1.0, np.abs(Q).max()):
        raise ArithmeticError(f"Riccati residual {res:.3e} too large")
    return GainMatrix(K, P, res)


def feedforward_matrix(B_v, B_d) -> np.ndarray:
    """``pinv(B_v) @ B_d``."""
    return np.linalg.pinv(np.asarray(B_v, dtype=float)) @ np.asarray(B_d, dtype=float)


def tracking_error(relative: Pose2, config: ControllerConfig) -> ErrorState:
    return ErrorState(relative.x - config.x_d, relative.y - config.y_d)


def feedback(e: ErrorState, K: GainMatrix):
    """``v_b = -K_e e``."""
    (k00, k01), (k10, k11) = K._k
    return (-(k00 * e.e_x + k01 * e.e_y), -(k10 * e.e_x + k11 * e.e_y))


@lru_cache(maxsize=16)
def _feedforward_cached(B_v, B_d):
    F = feedforward_matrix(B_v, B_d)
    return tuple(map(tuple, F))


def _as_key(M):
    if isinstance(M, tuple):
        return M
    return tuple(tuple(float(a) for a in row) for row in np.asarray(M, dtype=float))


def feedforward(d_hat: Disturbance, B_v=((1.0, 0.0), (0.0, 1.0)), B_d=((1.0, 0.0), (0.0, 1.0))):
    """``v_f = -pinv(B_v) B_d d_hat``."""
    F = _feedforward_cached(_as_key(B_v), _as_key(B_d))
    return (
        -(F[0][0] * d_hat.d_x + F[0][1] * d_hat.d_y),
        -(F[1][0] * d_hat.d_x + F[1][1] * d_hat.d_y),
    )


def _clip(val, limit):
    return max(-limit, min(limit, val))


def decouple(v, relative: Pose2, config: ControllerConfig, saturate: bool = True) -> RobotCommand:
    """Map a virtual command ``(v_x, v_y)`` to ``(v_r, w_r) = M(x)^-1 v``.

    Raises:
        SingularityGuard: if ``relative.x <= config.x_guard_epsilon``.
    """
    x, y = relative.x, relative.y
    if not x > config.x_guard_epsilon:
        raise SingularityGuard(
            f"relative x={x:.4f} m at or below guard {config.x_guard_epsilon} m"
        )
    v_x, v_y = (v.v_x, v.v_y) if isinstance(v, VirtualCommand) else v
    v_r = -v_x - (y / x) * v_y
    w_r = -v_y / x
    if saturate:
        v_r, w_r = _clip(v_r, config.v_max), _clip(w_r, config.w_max)
    return RobotCommand(v_r, w_r)


def realized_virtual(u: RobotCommand, relative: Pose2):
    """Virtual command actually produced by ``u``, i.e. ``M(x) u``."""
    return (-u.v_r + relative.y * u.w_r, -relative.x * u.w_r)


def control_step(relative_measured: Pose2, d_hat: Disturbance, K: GainMatrix, config: ControllerConfig):
    """One evaluation of the proposed law.

    Returns ``(RobotCommand, VirtualCommand)``; the virtual command feeds
    the observer on the next tick.
    """
    e = tracking_error(relative_measured, config)
    vb = feedback(e, K)
    vf = feedforward(d_hat, config.B_v, config.B_d)
    v = VirtualCommand(vb[0] + vf[0], vb[1] + vf[1], vb, vf)
    return decouple(v, relative_measured, config), v


def closed_form_command(relative: Pose2, d_hat: Disturbance, k_x: float, k_y: float,
                        config: ControllerConfig) -> RobotCommand:
    """Explicit law for diagonal gains and identity input matrices (unsaturated)."""
    x, y = relative.x, relative.y
    e_x, e_y = x - config.x_d, y - config.y_d
    lateral = k_y * e_y + d_hat.d_y
    return RobotCommand((y / x) * lateral + k_x * e_x + d_hat.d_x, lateral / x)


@dataclass(frozen=True)
class PIDGains:
    """Per-axis gains, tuples ordered (x, y)."""

    kp: tuple = (30.0, 30.0)
    ki: tuple = (0.0, 0.0)
    kd: tuple = (0.5, 0.5)


@dataclass(frozen=True)
class PIDState:
    integral: tuple = (0.0, 0.0)
    previous_error: tuple | None = None


def pid_step(e: ErrorState, state: PIDState, gains: PIDGains, relative: Pose2,
             config: ControllerConfig, dt: float):
    """Baseline per-axis PID on the tracking error, routed through :func:`decouple`.

    The derivative term uses a backward difference of the error (zero on the
    first call). The integrator is frozen on any tick where the decoupled
    command saturates.

    Returns ``(RobotCommand, VirtualCommand, PIDState)``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    err = (e.e_x, e.e_y)
    prev = state.previous_error if state.previous_error is not None else err
    deriv = tuple((a - b) / dt for a, b in zip(err, prev))
    trial = tuple(i + a * dt for i, a in zip(state.integral, err))

    def virtual(integral):
        return tuple(
            -(gains.kp[i] * err[i] + gains.ki[i] * integral[i] + gains.kd[i] * deriv[i]) for i in range(2)
        )

    v = virtual(trial)
    raw = decouple(v, relative, config, saturate=False)
    integral = trial
    if abs(raw.v_r) > config.v_max or abs(raw.w_r) > config.w_max:
        integral = state.integral
        v = virtual(integral)
    u = decouple(v, relative, config)
    return u, VirtualCommand(v[0], v[1], v, (0.0, 0.0)), PIDState(integral, err)
