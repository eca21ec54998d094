import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import relative_pose
from userfollow.errors import InconsistentReading, OutOfWorkspace
from userfollow.frames import (ArmGeometry, ArmReading, Pose2, Workspace, angle_diff, arm_forward,
                               arm_inverse, attachment_points, quantize_reading, robot_to_world,
                               world_to_robot, wrap_angle)

GEOM = ArmGeometry(0.6, 0.45)
finite = st.floats(-50, 50, allow_nan=False)
angles = st.floats(-20, 20, allow_nan=False)
poses = st.builds(Pose2, finite, finite, angles)
ws = GEOM.workspace
workspace_poses = st.builds(
    Pose2,
    st.floats(ws.x_min, ws.x_max),
    st.floats(-ws.y_abs_max, ws.y_abs_max),
    st.floats(-ws.theta_abs_max, ws.theta_abs_max),
)


def close(p, q, tol):
    return (abs(p.x - q.x) <= tol and abs(p.y - q.y) <= tol
            and abs(angle_diff(p.theta, q.theta)) <= tol)


def test_wrap_angle_half_open_interval():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(0.0) == 0.0


@given(angles)
def test_pose_theta_always_wrapped(a):
    th = Pose2(0, 0, a).theta
    assert -math.pi < th <= math.pi


def test_world_to_robot_identity_at_origin():
    r = world_to_robot(Pose2(0.5, 0.1, 0.2), Pose2(0, 0, 0))
    assert r.as_tuple() == pytest.approx((0.5, 0.1, 0.2), abs=1e-15)


def test_world_to_robot_rotated_robot():
    r = world_to_robot(Pose2(1, 2, math.pi / 2), Pose2(1, 1, math.pi / 2))
    assert r.as_tuple() == pytest.approx((1, 0, 0), abs=1e-15)


def test_world_to_robot_coincident():
    p = Pose2(3, -2, 0.7)
    assert world_to_robot(p, p).as_tuple() == (0.0, 0.0, 0.0)


def test_robot_to_world_examples():
    robot = Pose2(3, -2, 0.7)
    assert robot_to_world(Pose2(0, 0, 0), robot).as_tuple() == pytest.approx((3, -2, 0.7), abs=1e-15)
    w = robot_to_world(Pose2(1, 0, 0), Pose2(1, 1, math.pi / 2))
    assert w.as_tuple() == pytest.approx((1, 2, math.pi / 2), abs=1e-15)


@given(poses, poses)
def test_world_to_robot_matches_rotation_matrix(h, r):
    got = world_to_robot(h, r)
    x, y, th = relative_pose(h.as_tuple(), r.as_tuple())
    assert got.x == pytest.approx(x, abs=1e-12)
    assert got.y == pytest.approx(y, abs=1e-12)
    assert abs(angle_diff(got.theta, th)) < 1e-12


@given(poses, poses)
def test_frame_round_trips(p, r):
    assert close(world_to_robot(robot_to_world(p, r), r), p, 1e-12)
    assert close(robot_to_world(world_to_robot(p, r), r), p, 1e-12)


def test_symmetric_reading():
    d = math.hypot(0.8, 0.075)
    a = math.atan2(-0.075, 0.8)
    assert d == pytest.approx(0.803508, abs=1e-6)
    # the quoted -0.093479 is rounded; the exact angle is -0.0934768
    assert a == pytest.approx(-0.093479, abs=5e-6)
    p = arm_forward(ArmReading(d, d, a, -a), GEOM)
    assert p.as_tuple() == pytest.approx((0.8, 0.0, 0.0), abs=1e-12)


def test_arm_inverse_symmetric_case():
    r = arm_inverse(Pose2(0.8, 0.0, 0.0), GEOM)
    assert r.d_L == pytest.approx(0.803508, abs=1e-6)
    assert r.d_R == pytest.approx(r.d_L, abs=1e-15)
    assert r.theta_L == pytest.approx(math.atan2(-0.075, 0.8), abs=1e-15)
    assert r.theta_R == pytest.approx(math.atan2(0.075, 0.8), abs=1e-15)
    assert r.theta_L == pytest.approx(-0.093479, abs=5e-6)


def test_forward_of_inverse_example():
    p = Pose2(0.55, 0.1, 0.3)
    assert close(arm_forward(arm_inverse(p, GEOM), GEOM), p, 1e-9)


def test_inconsistent_reading():
    # sliders 0.46 m apart while the bar is 0.45 m wide
    lx, ly, rx, ry = 0.8, 0.23, 0.8, -0.23
    reading = ArmReading(math.hypot(lx, ly - 0.3), math.hypot(rx, ry + 0.3),
                         math.atan2(ly - 0.3, lx), math.atan2(ry + 0.3, rx))
    with pytest.raises(InconsistentReading):
        arm_forward(reading, GEOM)
    # a loose tolerance accepts it
    assert arm_forward(reading, GEOM, tol=0.02).x == pytest.approx(0.8)


def test_nonpositive_slider_distance_rejected():
    with pytest.raises(InconsistentReading):
        arm_forward(ArmReading(0.0, 0.8, 0.0, 0.0), GEOM)


def test_arm_inverse_out_of_workspace():
    with pytest.raises(OutOfWorkspace):
        arm_inverse(Pose2(0.3 * 0.5, 0.0, 0.0), GEOM)
    with pytest.raises(OutOfWorkspace):
        arm_inverse(Pose2(0.8, 0.5, 0.0), GEOM)
    with pytest.raises(OutOfWorkspace):
        arm_inverse(Pose2(0.8, 0.0, 1.0), GEOM)


@settings(max_examples=300)
@given(workspace_poses)
def test_arm_round_trip_and_separation(p):
    reading = arm_inverse(p, GEOM)
    assert reading.d_L > 0 and reading.d_R > 0
    (lx, ly), (rx, ry) = attachment_points(reading, GEOM)
    assert abs(math.hypot(lx - rx, ly - ry) - GEOM.hri_width_W) < 1e-12
    q = arm_forward(reading, GEOM)
    assert close(q, p, 1e-9)
    assert q.x > 0


@pytest.mark.parametrize("kwargs", [
    dict(joint_separation_D=0.0), dict(hri_width_W=-1.0),
    dict(workspace=Workspace(x_min=0.0)), dict(workspace=Workspace(x_min=1.0, x_max=0.5)),
])
def test_geometry_validation(kwargs):
    with pytest.raises(ValueError):
        ArmGeometry(**kwargs)


def test_quantize_examples():
    q = quantize_reading(ArmReading(0.8, 0.8, 0.1, 0.0), 4096, 1e-4)
    assert q.theta_L == pytest.approx(65 * 2 * math.pi / 4096, abs=1e-15)
    assert q.theta_L == pytest.approx(0.0997, abs=1e-4)
    assert q.theta_R == 0.0
    r = ArmReading(0.8123456, 0.7654321, 0.123456, -0.654321)
    fine = quantize_reading(r, 1e12, 1e-12)
    lsb = 2 * math.pi / 1e12
    assert abs(fine.theta_L - r.theta_L) <= lsb and abs(fine.theta_R - r.theta_R) <= lsb
    assert abs(fine.d_L - r.d_L) <= 1e-12 and abs(fine.d_R - r.d_R) <= 1e-12


@given(st.floats(1, 1e6))
def test_quantize_zero_is_lattice_point(counts):
    q = quantize_reading(ArmReading(0.5, 0.5, 0.0, 0.0), counts, 1e-3)
    assert q.theta_L == 0.0 and q.theta_R == 0.0


def test_quantize_rejects_bad_resolution():
    with pytest.raises(ValueError):
        quantize_reading(ArmReading(0.5, 0.5, 0, 0), 0, 1e-3)
