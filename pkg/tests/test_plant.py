import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import circle_pose, first_order_step, relative_pose
from userfollow.frames import Pose2, world_to_robot
from userfollow.plant import (ActuatorParams, Disturbance, HumanCommand, RobotCommand, WheelSpeedLoop,
                              actuator_step, coupled_derivative, diff_drive, diff_drive_inverse,
                              human_step, robot_step, true_disturbance)


def test_robot_straight_line():
    assert robot_step(Pose2(0, 0, 0), RobotCommand(1, 0), 1).as_tuple() == pytest.approx((1, 0, 0))


def test_robot_pure_rotation():
    p = robot_step(Pose2(0, 0, 0), RobotCommand(0, math.pi / 2), 1)
    assert p.as_tuple() == pytest.approx((0, 0, math.pi / 2), abs=1e-15)


def test_robot_closes_circle():
    p = Pose2(0, 0, 0)
    for _ in range(200):
        p = robot_step(p, RobotCommand(1, 2 * math.pi), 1 / 200)
    assert abs(p.x) < 1e-6 and abs(p.y) < 1e-6
    assert abs(math.remainder(p.theta, 2 * math.pi)) < 1e-12


def _arc_error(dt, v=1.0, w=2.0, T=1.0):
    p = Pose2(0, 0, 0)
    for _ in range(int(round(T / dt))):
        p = robot_step(p, RobotCommand(v, w), dt)
    x, y, _ = circle_pose(v, w, T)
    return math.hypot(p.x - x, p.y - y)


def test_rk4_fourth_order_convergence():
    ratio = _arc_error(0.1) / _arc_error(0.05)
    assert ratio == pytest.approx(16.0, rel=0.1)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(1e-3, 1.0))
def test_straight_motion_keeps_heading(th, v, dt):
    p = Pose2(1.0, -2.0, th)
    assert robot_step(p, RobotCommand(v, 0.0), dt).theta == p.theta
    assert human_step(p, HumanCommand(abs(v), 0.7, 0.0), dt).theta == p.theta


def test_human_sidestep():
    p = human_step(Pose2(0, 0, 0), HumanCommand(1, math.pi / 2, 0), 1)
    assert p.as_tuple() == pytest.approx((0, 1, 0), abs=1e-15)


def test_human_turn_in_place():
    assert human_step(Pose2(0, 0, 0), HumanCommand(0, 0, 1), 0.5).as_tuple() == (0, 0, 0.5)


def test_human_constant_command():
    p = human_step(Pose2(1, 1, 0.3), HumanCommand(1, 0.3, 0), 2)
    assert p.as_tuple() == pytest.approx((1 + 2 * math.cos(0.3), 1 + 2 * math.sin(0.3), 0.3))


def test_coupled_derivative_examples():
    assert coupled_derivative(Pose2(0.8, 0, 0), RobotCommand(0, 0), HumanCommand(0, 0, 0), 0.3) == (0, 0, 0)
    dx, dy, _ = coupled_derivative(Pose2(0.8, 0, 0), RobotCommand(0.5, 0), HumanCommand(0.5, 0.4, 0.1), 0.4)
    assert dx == pytest.approx(0, abs=1e-15) and dy == pytest.approx(0, abs=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_coupled_derivative_finite_difference(seed):
    rng = np.random.default_rng(seed)
    robot = Pose2(*rng.uniform(-2, 2, 2), rng.uniform(-3, 3))
    human = Pose2(*rng.uniform(-2, 2, 2), rng.uniform(-3, 3))
    cr = RobotCommand(*rng.uniform(-1, 1, 2))
    ch = HumanCommand(rng.uniform(0, 1.5), rng.uniform(-3, 3), rng.uniform(-1, 1))
    h = 1e-6
    r0 = relative_pose(human.as_tuple(), robot.as_tuple())
    r1 = relative_pose(human_step(human, ch, h).as_tuple(), robot_step(robot, cr, h).as_tuple())
    fd = [(b - a) / h for a, b in zip(r0, r1)]
    got = coupled_derivative(world_to_robot(human, robot), cr, ch, robot.theta)
    assert got == pytest.approx(fd, abs=1e-5)


def test_true_disturbance_examples():
    assert true_disturbance(HumanCommand(0, 1.0, 0), 0.3) == Disturbance(0.0, 0.0)
    d = true_disturbance(HumanCommand(1, 0.4, 0), 0.4)
    assert (d.d_x, d.d_y) == (1.0, 0.0)
    d = true_disturbance(HumanCommand(2, 0.2 + math.pi / 6, 0), 0.2)
    assert (d.d_x, d.d_y) == pytest.approx((math.sqrt(3), 1))


@given(st.floats(0, 5), st.floats(-10, 10), st.floats(-10, 10))
def test_disturbance_norm_is_speed(v, delta, th):
    d = true_disturbance(HumanCommand(v, delta, 0), th)
    assert math.hypot(d.d_x, d.d_y) == pytest.approx(v, abs=1e-12)


def test_actuator_examples():
    p = ActuatorParams((0.2, 0.2), (0.5, 0.5))
    assert actuator_step((0, 0), (0, 0), p, 0.01) == (0, 0)
    assert actuator_step((0, 0), (10, 10), p, 1e3) == pytest.approx((2, 2), abs=1e-12)
    v = actuator_step((0, 0), (10, 10), p, 0.5)
    assert v[0] == pytest.approx(2 * (1 - math.exp(-1)), abs=1e-12)
    assert v[0] == pytest.approx(1.2642, abs=1e-4)


@given(st.floats(-3, 3), st.floats(-24, 24), st.floats(0.01, 1), st.floats(0.05, 2), st.floats(1e-3, 3))
def test_actuator_closed_form(v0, u, k, tau, t):
    p = ActuatorParams((k, k), (tau, tau))
    got = actuator_step((v0, v0), (u, u), p, t)[0]
    assert got == pytest.approx(float(first_order_step(t, u, k, tau, v0)), abs=1e-12)


def test_actuator_params_validation():
    with pytest.raises(ValueError):
        ActuatorParams((0.0, 0.1))
    with pytest.raises(ValueError):
        ActuatorParams(wheel_track_b=0.0)


def test_diff_drive_examples():
    assert diff_drive((1, 1), ActuatorParams()) == RobotCommand(1, 0)
    assert diff_drive((-1, 1), ActuatorParams(wheel_track_b=0.5)) == RobotCommand(0, 4)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 1))
def test_diff_drive_inverse_pair(vl, vr, b):
    p = ActuatorParams(wheel_track_b=b)
    back = diff_drive_inverse(diff_drive((vl, vr), p), p)
    assert back == pytest.approx((vl, vr), abs=1e-12)


def test_wheel_loop_settles_within_100ms():
    # small-signal step: the voltage stays inside its limit
    loop = WheelSpeedLoop(ActuatorParams(), bandwidth=50.0, voltage_limit=24.0)
    for _ in range(100):
        loop.step((0.05, -0.06), 1e-3)
    assert loop.speeds == pytest.approx((0.05, -0.06), rel=0.02)


def test_wheel_loop_large_step_recovers_from_saturation():
    loop = WheelSpeedLoop(ActuatorParams(), bandwidth=50.0, voltage_limit=24.0)
    trace = []
    for _ in range(400):
        loop.step((1.0, -1.0), 1e-3)
        trace.append(loop.speeds)
    trace = np.array(trace)
    assert trace[:, 0].max() <= 1.0 + 1e-6
    assert trace[:, 1].min() >= -1.0 - 1e-6
    assert loop.speeds == pytest.approx((1.0, -1.0), rel=1e-3)


def test_wheel_loop_respects_voltage_limit():
    p = ActuatorParams((0.12, 0.12), (0.35, 0.35))
    loop = WheelSpeedLoop(p, voltage_limit=24.0)
    for _ in range(5000):
        loop.step((10.0, 10.0), 1e-3)
    # 24 V can sustain at most K*24 = 2.88 m/s
    assert loop.speeds[0] <= 0.12 * 24 + 1e-9
