"""Planar frame transforms and parallel-arm kinematics.

Robot frame: origin on the mobile base, X forward, Y to the left. The two
rotary joints of the arm sit at (0, +D/2) (left) and (0, -D/2) (right). Each
arm carries a slider at distance d from its joint; the sliders hold the ends
of the HRI bar, a rigid segment of width W perpendicular to the human heading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from userfollow.errors import InconsistentReading, OutOfWorkspace

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.remainder(a, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


def angle_diff(a: float, b: float) -> float:
    """Smallest signed difference a - b, wrapped."""
    return wrap_angle(a - b)


@dataclass(frozen=True)
class Pose2:
    """Planar pose. ``theta`` is wrapped on construction."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)


@dataclass(frozen=True)
class Workspace:
    x_min: float = 0.3
    x_max: float = 1.2
    y_abs_max: float = 0.35
    theta_abs_max: float = math.pi / 4

    def contains(self, p: Pose2) -> bool:
        return (
            self.x_min <= p.x <= self.x_max
            and abs(p.y) <= self.y_abs_max
            and abs(p.theta) <= self.theta_abs_max
        )


@dataclass(frozen=True)
class ArmGeometry:
    """Fixed arm constants: joint separation ``D`` and HRI bar width ``W`` (meters)."""

    joint_separation_D: float = 0.6
    hri_width_W: float = 0.45
    workspace: Workspace = field(default_factory=Workspace)

    def __post_init__(self):
        if not self.joint_separation_D > 0:
            raise ValueError("joint_separation_D must be positive")
        if not self.hri_width_W > 0:
            raise ValueError("hri_width_W must be positive")
        ws = self.workspace
        if not 0 < ws.x_min < ws.x_max:
            raise ValueError("workspace requires 0 < x_min < x_max")


@dataclass(frozen=True)
class ArmReading:
    """Encoder quantities of both arms."""

    d_L: float
    d_R: float
    theta_L: float
    theta_R: float


def world_to_robot(human_world: Pose2, robot_world: Pose2) -> Pose2:
    """Express a world-frame pose in the frame of ``robot_world``."""
    c, s = math.cos(robot_world.theta), math.sin(robot_world.theta)
    dx = human_world.x - robot_world.x
    dy = human_world.y - robot_world.y
    return Pose2(c * dx + s * dy, -s * dx + c * dy, human_world.theta - robot_world.theta)


def robot_to_world(relative: Pose2, robot_world: Pose2) -> Pose2:
    """Inverse of :func:`world_to_robot`."""
    c, s = math.cos(robot_world.theta), math.sin(robot_world.theta)
    return Pose2(
        robot_world.x + c * relative.x - s * relative.y,
        robot_world.y + s * relative.x + c * relative.y,
        relative.theta + robot_world.theta,
    )


def attachment_points(reading: ArmReading, geom: ArmGeometry):
    """Left and right slider positions in the robot frame."""
    half = 0.5 * geom.joint_separation_D
    left = (reading.d_L * math.cos(reading.theta_L), half + reading.d_L * math.sin(reading.theta_L))
    right = (reading.d_R * math.cos(reading.theta_R), -half + reading.d_R * math.sin(reading.theta_R))
    return left, right


def arm_forward(reading: ArmReading, geom: ArmGeometry, tol: float = 1e-6) -> Pose2:
    """Human pose in the robot frame from the four encoder values.

    The position is the midpoint of the two sliders and the heading is the
    normal of the bar pointing away from the robot. ``tol`` bounds the allowed
    mismatch between the slider separation and ``W``; loosen it for
    quantized readings.
    """
    if reading.d_L <= 0 or reading.d_R <= 0:
        raise InconsistentReading("slider distances must be positive")
    (lx, ly), (rx, ry) = attachment_points(reading, geom)
    sep = math.hypot(lx - rx, ly - ry)
    if abs(sep - geom.hri_width_W) > tol:
        raise InconsistentReading(
            f"slider separation {sep:.6f} m differs from W={geom.hri_width_W} m by more than {tol:g}"
        )
    theta = math.atan2(ly - ry, lx - rx) - 0.5 * math.pi
    return Pose2(0.5 * (lx + rx), 0.5 * (ly + ry), theta)


def arm_inverse(relative: Pose2, geom: ArmGeometry) -> ArmReading:
    """Encoder reading that would place the HRI at ``relative``."""
    if not geom.workspace.contains(relative):
        raise OutOfWorkspace(
            f"relative pose ({relative.x:.4f}, {relative.y:.4f}, {relative.theta:.4f}) outside arm workspace"
        )
    hw = 0.5 * geom.hri_width_W
    half = 0.5 * geom.joint_separation_D
    nx, ny = -math.sin(relative.theta) * hw, math.cos(relative.theta) * hw
    lx, ly = relative.x + nx, relative.y + ny - half
    rx, ry = relative.x - nx, relative.y - ny + half
    d_L, d_R = math.hypot(lx, ly), math.hypot(rx, ry)
    if d_L <= 0 or d_R <= 0:
        raise OutOfWorkspace("slider would sit on its rotary joint")
    return ArmReading(d_L, d_R, math.atan2(ly, lx), math.atan2(ry, rx))


def quantize_reading(
    reading: ArmReading, angular_resolution: float = 4096, linear_resolution: float = 1e-4
) -> ArmReading:
    """Round angles to ``2*pi/angular_resolution`` and distances to ``linear_resolution``."""
    if angular_resolution <= 0 or linear_resolution <= 0:
        raise ValueError("resolutions must be positive")
    lsb = TWO_PI / angular_resolution

    def qa(a):
        return round(a / lsb) * lsb

    def qd(d):
        return round(d / linear_resolution) * linear_resolution

    return ArmReading(qd(reading.d_L), qd(reading.d_R), qa(reading.theta_L), qa(reading.theta_R))
