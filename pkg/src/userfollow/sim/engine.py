"""Closed-loop simulation: sense, observe, control, actuate, integrate.

One tick at ``f_s``:

1. the human pose is read from the trajectory (exogenous playback),
2. the true relative pose is computed and passed through the arm
   (inverse kinematics, optional encoder quantization, forward kinematics),
3. the observers are advanced with the previous tick's virtual command,
4. the proposed law or the PID baseline produces ``(v_r, w_r)``,
5. the robot is advanced over one period, either directly (kinematic
   fidelity) or through the wheel speed loops and motor models (dynamic).

With ``controller.update = continuous`` the proposed law is evaluated inside
the integrator with the exact human velocity instead of being held for a
period. That mode exists to check the continuous-time error dynamics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from userfollow.controller import (PIDState, control_step, pid_step, realized_virtual, solve_lqr,
                                   tracking_error)
from userfollow.errors import OutOfWorkspace, SingularityGuard, UserFollowError
from userfollow.frames import Pose2, arm_forward, arm_inverse, quantize_reading, world_to_robot
from userfollow.observer import initial_state, leso_step
from userfollow.plant import (Disturbance, WheelSpeedLoop, diff_drive_inverse, robot_step,
                              true_disturbance)
from userfollow.sim.trajectory import (Trajectory, generate_scenario, human_commands,
                                       load_trajectory_csv)

if TYPE_CHECKING:
    from userfollow.config import ScenarioConfig

LOG_COLUMNS = ["t", "xh", "yh", "thh", "xr", "yr", "thr", "x_rel", "y_rel", "th_rel",
               "x_meas", "y_meas", "dx_true", "dy_true", "dx_hat", "dy_hat", "vx", "vy",
               "vr", "wr", "ex", "ey"]


@dataclass
class SimLog:
    """Per-tick record arrays keyed by :data:`LOG_COLUMNS`.

    ``failure`` holds the reason when the run stopped early; the record of
    the failing tick is not part of the log.
    """

    columns: dict
    f_s: float
    scenario: str = ""
    controller: str = ""
    failure: str | None = None
    failure_time: float | None = None
    extra: dict = field(default_factory=dict)

    def __getitem__(self, key) -> np.ndarray:
        return self.columns[key]

    def __len__(self):
        return len(self.columns["t"])

    @property
    def completed(self) -> bool:
        return self.failure is None

    def to_csv(self, path) -> Path:
        path = Path(path)
        cols = [self.columns[c] for c in LOG_COLUMNS]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(LOG_COLUMNS)
            for k in range(len(self)):
                w.writerow([repr(float(c[k])) for c in cols])
        return path


def read_simlog_csv(path) -> SimLog:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return SimLog({c: np.atleast_1d(data[c]) for c in LOG_COLUMNS}, f_s=0.0)


def build_trajectory(cfg: ScenarioConfig) -> Trajectory:
    """Trajectory covering exactly ``duration * f_s + 1`` ticks."""
    n = int(round(cfg.duration * cfg.f_s)) + 1
    if cfg.trajectory_source == "csv":
        traj = load_trajectory_csv(cfg.trajectory_path, cfg.f_s)
        if len(traj) < n:
            raise UserFollowError(
                f"trajectory {cfg.trajectory_path} covers {len(traj) / cfg.f_s:.3f} s, "
                f"shorter than duration {cfg.duration} s"
            )
        return traj.truncated(n)
    return generate_scenario(cfg.scenario, cfg.scenario_params, cfg.seed, cfg.duration, cfg.f_s)


def initial_robot_pose(human: Pose2, x_rel: float, y_rel: float) -> Pose2:
    """Robot pose that sees ``human`` at ``(x_rel, y_rel)`` with zero heading offset."""
    c, s = math.cos(human.theta), math.sin(human.theta)
    return Pose2(human.x - (c * x_rel - s * y_rel), human.y - (s * x_rel + c * y_rel), human.theta)


def _closed_loop_step(robot: Pose2, human: Pose2, hvel, dt, gains, ctrl):
    """RK4 over one period with the proposed law re-evaluated at every stage.

    The human moves with constant world velocity ``hvel = (vx, vy, w)``
    across the period (linear interpolation of the samples).
    """
    vx, vy, wh = hvel

    def f(tau, xr, yr, thr):
        h = Pose2(human.x + vx * tau, human.y + vy * tau, human.theta + wh * tau)
        rel = world_to_robot(h, Pose2(xr, yr, thr))
        c, s = math.cos(thr), math.sin(thr)
        d = Disturbance(c * vx + s * vy, -s * vx + c * vy)
        u, _ = control_step(rel, d, gains, ctrl)
        return u.v_r * c, u.v_r * s, u.w_r

    x0, y0, t0 = robot.x, robot.y, robot.theta
    k1 = f(0.0, x0, y0, t0)
    k2 = f(0.5 * dt, x0 + 0.5 * dt * k1[0], y0 + 0.5 * dt * k1[1], t0 + 0.5 * dt * k1[2])
    k3 = f(0.5 * dt, x0 + 0.5 * dt * k2[0], y0 + 0.5 * dt * k2[1], t0 + 0.5 * dt * k2[2])
    k4 = f(dt, x0 + dt * k3[0], y0 + dt * k3[1], t0 + dt * k3[2])
    h6 = dt / 6.0
    return Pose2(x0 + h6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                 y0 + h6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
                 t0 + h6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]))


def run_simulation(cfg: ScenarioConfig, trajectory: Trajectory | None = None) -> SimLog:
    """Run one closed-loop scenario.

    A :class:`SingularityGuard` or :class:`OutOfWorkspace` ends the run; the
    log then stops before the failing tick and records the reason.
    """
    traj = trajectory if trajectory is not None else build_trajectory(cfg)
    dt = cfg.dt
    n_ticks = min(len(traj), int(round(cfg.duration * cfg.f_s)) + 1)
    ctrl = cfg.controller
    gains = solve_lqr(ctrl.Q, ctrl.R)
    hcmds = human_commands(traj)

    rec = {c: [] for c in LOG_COLUMNS}
    xhat_log, yhat_log = [], []
    robot = initial_robot_pose(traj.pose(0), ctrl.x_d + cfg.initial_offset[0],
                               ctrl.y_d + cfg.initial_offset[1])
    obs = None
    v_prev = (0.0, 0.0)
    meas_prev = None
    pid_state = PIDState()
    wheels = None
    if cfg.fidelity == "dynamic":
        wheels = WheelSpeedLoop(cfg.dynamics.actuator, cfg.dynamics.inner_bandwidth,
                                cfg.dynamics.voltage_limit)
    failure = failure_time = None
    quantized = cfg.sensing.mode == "quantized"
    tol = cfg.sensing.consistency_tol if quantized else 1e-6

    for k in range(n_ticks):
        t = k * dt
        human = traj.pose(k)
        try:
            rel = world_to_robot(human, robot)
            reading = arm_inverse(rel, cfg.geometry)
            if quantized:
                reading = quantize_reading(reading, cfg.sensing.counts_per_rev,
                                           cfg.sensing.linear_resolution)
            meas = arm_forward(reading, cfg.geometry, tol=tol)

            d_true = true_disturbance(hcmds[k], robot.theta)
            if obs is None:
                obs = initial_state((meas.x, meas.y))
            else:
                obs = leso_step(obs, (meas.x, meas.y), v_prev, cfg.observer_gains, dt,
                                method=cfg.observer_method, previous=meas_prev)
            meas_prev = (meas.x, meas.y)
            d_hat = d_true if cfg.feedforward == "truth" else obs.disturbance

            if cfg.controller_kind == "proposed":
                u, v = control_step(meas, d_hat, gains, ctrl)
            else:
                u, v, pid_state = pid_step(tracking_error(meas, ctrl), pid_state, cfg.pid, meas, ctrl, dt)
        except (SingularityGuard, OutOfWorkspace) as exc:
            failure, failure_time = f"{type(exc).__name__}: {exc}", t
            break

        e = tracking_error(rel, ctrl)
        for name, val in (("t", t), ("xh", human.x), ("yh", human.y), ("thh", human.theta),
                          ("xr", robot.x), ("yr", robot.y), ("thr", robot.theta),
                          ("x_rel", rel.x), ("y_rel", rel.y), ("th_rel", rel.theta),
                          ("x_meas", meas.x), ("y_meas", meas.y),
                          ("dx_true", d_true.d_x), ("dy_true", d_true.d_y),
                          ("dx_hat", d_hat.d_x), ("dy_hat", d_hat.d_y),
                          ("vx", v.v_x), ("vy", v.v_y), ("vr", u.v_r), ("wr", u.w_r),
                          ("ex", e.e_x), ("ey", e.e_y)):
            rec[name].append(val)
        xhat_log.append(obs.x_hat)
        yhat_log.append(obs.y_hat)

        if k == n_ticks - 1:
            break
        if cfg.control_update == "continuous":
            nxt = traj.pose(k + 1)
            hvel = ((nxt.x - human.x) / dt, (nxt.y - human.y) / dt,
                    math.remainder(nxt.theta - human.theta, 2 * math.pi) / dt)
            robot = _closed_loop_step(robot, human, hvel, dt, gains, ctrl)
        elif wheels is None:
            robot = robot_step(robot, u, dt)
        else:
            targets = diff_drive_inverse(u, cfg.dynamics.actuator)
            h = dt / cfg.dynamics.substeps
            for _ in range(cfg.dynamics.substeps):
                robot = robot_step(robot, wheels.step(targets, h), h)
        # the observer needs the virtual input the robot actually received
        v_prev = realized_virtual(u, meas)

    columns = {c: np.asarray(rec[c], dtype=float) for c in LOG_COLUMNS}
    name = cfg.scenario if cfg.trajectory_source == "generator" else str(cfg.trajectory_path)
    return SimLog(columns, cfg.f_s, name, cfg.controller_kind, failure, failure_time,
                  {"x_hat": np.asarray(xhat_log), "y_hat": np.asarray(yhat_log)})
