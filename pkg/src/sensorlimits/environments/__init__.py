"""Benchmark environments."""

from .base import DiscretePOMDP, LinearGaussianSystem, SampledEnvironment
from .catching import ball_catching, hat_expectation, hat_reward
from .lava import lava_pomdp
from .obstacles import MotionPrimitive, ObstacleWorld, obstacle_world, point_to_arc_distance
from .pomdp_io import load_pomdp, save_pomdp

__all__ = [
    "DiscretePOMDP",
    "LinearGaussianSystem",
    "SampledEnvironment",
    "ball_catching",
    "hat_expectation",
    "hat_reward",
    "lava_pomdp",
    "MotionPrimitive",
    "ObstacleWorld",
    "obstacle_world",
    "point_to_arc_distance",
    "load_pomdp",
    "save_pomdp",
]
