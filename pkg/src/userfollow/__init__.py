"""Simulation library for a mobile balance-assist robot that follows a walking user.

The pipeline couples a holonomic human with a unicycle robot, senses the
human through a planar parallel arm, estimates the human's velocity with two
linear extended state observers and closes the loop with a feedback
linearizing LQR law that cancels the estimated disturbance.
"""

__version__ = "0.1.0"

from userfollow.errors import UserFollowError
from userfollow.frames import ArmGeometry, ArmReading, Pose2, arm_forward, arm_inverse
from userfollow.frames import robot_to_world, world_to_robot

__all__ = [
    "__version__",
    "UserFollowError",
    "ArmGeometry",
    "ArmReading",
    "Pose2",
    "arm_forward",
    "arm_inverse",
    "robot_to_world",
    "world_to_robot",
]
