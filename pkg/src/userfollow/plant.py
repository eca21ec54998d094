"""Ground-truth motion models for the human, the robot and the wheel actuators."""

from __future__ import annotations

import math
from dataclasses import dataclass

from userfollow.frames import Pose2


@dataclass(frozen=True)
class HumanCommand:
    """Human translational speed ``v_h`` along world direction ``delta`` plus yaw rate ``w_h``."""

    v_h: float
    delta: float
    w_h: float


@dataclass(frozen=True)
class RobotCommand:
    v_r: float
    w_r: float


@dataclass(frozen=True)
class Disturbance:
    """Human velocity expressed along the robot X and Y axes."""

    d_x: float
    d_y: float


@dataclass(frozen=True)
class ActuatorParams:
    """First-order wheel model ``dv/dt = (K*u - v)/tau``, one (K, tau) per wheel.

    Tuples are ordered (left, right). ``wheel_track_b`` is the wheel separation.
    """

    gain_K: tuple[float, float] = (0.12, 0.12)
    time_constant_tau: tuple[float, float] = (0.35, 0.35)
    wheel_track_b: float = 0.55

    def __post_init__(self):
        if min(self.gain_K) <= 0 or min(self.time_constant_tau) <= 0 or self.wheel_track_b <= 0:
            raise ValueError("actuator gains, time constants and wheel track must be positive")


def _unicycle(theta, v, w):
    return v * math.cos(theta), v * math.sin(theta), w


def robot_step(pose: Pose2, cmd: RobotCommand, dt: float) -> Pose2:
    """Advance the unicycle by one RK4 step with the command held constant."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    v, w = cmd.v_r, cmd.w_r
    th = pose.theta
    k1 = _unicycle(th, v, w)
    k2 = _unicycle(th + 0.5 * dt * k1[2], v, w)
    k3 = _unicycle(th + 0.5 * dt * k2[2], v, w)
    k4 = _unicycle(th + dt * k3[2], v, w)
    h6 = dt / 6.0
    return Pose2(
        pose.x + h6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        pose.y + h6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        th + dt * w,
    )


def human_step(pose: Pose2, cmd: HumanCommand, dt: float) -> Pose2:
    """Holonomic human motion; translation direction is independent of heading.

    With the command constant the velocity field does not depend on the
    state, so the update is exact.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    return Pose2(
        pose.x + dt * cmd.v_h * math.cos(cmd.delta),
        pose.y + dt * cmd.v_h * math.sin(cmd.delta),
        pose.theta + dt * cmd.w_h,
    )


def true_disturbance(cmd_h: HumanCommand, theta_r: float) -> Disturbance:
    a = cmd_h.delta - theta_r
    return Disturbance(cmd_h.v_h * math.cos(a), cmd_h.v_h * math.sin(a))


def coupled_derivative(relative: Pose2, cmd_r: RobotCommand, cmd_h: HumanCommand, theta_r: float):
    """Time derivative of the human pose seen from the robot.

    Returns ``(dx, dy, dtheta)``.
    """
    d = true_disturbance(cmd_h, theta_r)
    return (
        relative.y * cmd_r.w_r - cmd_r.v_r + d.d_x,
        -relative.x * cmd_r.w_r + d.d_y,
        -cmd_r.w_r + cmd_h.w_h,
    )


def actuator_step(state, voltages, params: ActuatorParams, dt: float):
    """Exact zero-order-hold update of both wheel speeds.

    Args:
        state: (v_left, v_right) in m/s.
        voltages: (u_left, u_right) in volts, held over ``dt``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    out = []
    for v, u, k, tau in zip(state, voltages, params.gain_K, params.time_constant_tau):
        target = k * u
        out.append(target + (v - target) * math.exp(-dt / tau))
    return tuple(out)


def diff_drive(wheel_speeds, params: ActuatorParams) -> RobotCommand:
    v_l, v_r = wheel_speeds
    return RobotCommand(0.5 * (v_l + v_r), (v_r - v_l) / params.wheel_track_b)


def diff_drive_inverse(cmd: RobotCommand, params: ActuatorParams):
    """Wheel speeds (left, right) realizing ``cmd``."""
    half = 0.5 * cmd.w_r * params.wheel_track_b
    return (cmd.v_r - half, cmd.v_r + half)


@dataclass
class WheelSpeedLoop:
    """Per-wheel PI speed loop driving the first-order actuator model.

    Gains place the closed loop at ``bandwidth`` rad/s by cancelling the
    motor pole: ``kp = bandwidth*tau/K`` and ``ki = bandwidth/K``. While the
    voltage saturates the integrator tracks the current wheel speed instead
    of winding up.
    """

    params: ActuatorParams
    bandwidth: float = 50.0
    voltage_limit: float = 24.0

    def __post_init__(self):
        self.kp = tuple(self.bandwidth * t / k for k, t in zip(self.params.gain_K, self.params.time_constant_tau))
        self.ki = tuple(self.bandwidth / k for k in self.params.gain_K)
        self.integral = [0.0, 0.0]
        self.speeds = (0.0, 0.0)

    def step(self, targets, dt: float) -> RobotCommand:
        """Run one inner-loop period and return the mean realized robot command."""
        volts = []
        for i in range(2):
            err = targets[i] - self.speeds[i]
            trial = self.integral[i] + err * dt
            u = self.kp[i] * err + self.ki[i] * trial
            if abs(u) > self.voltage_limit:
                u = math.copysign(self.voltage_limit, u)
                # keep ki*integral at the voltage that holds the current speed
                # (its value in unsaturated operation), so leaving saturation
                # does not excite the cancelled motor pole
                self.integral[i] = self.speeds[i] / self.bandwidth
            else:
                self.integral[i] = trial
            volts.append(u)
        before = self.speeds
        self.speeds = actuator_step(before, volts, self.params, dt)
        mean = (0.5 * (before[0] + self.speeds[0]), 0.5 * (before[1] + self.speeds[1]))
        return diff_drive(mean, self.params)
