"""Adaptive personal and group space costmaps, approach pose estimation and
a deterministic desk-scale simulator for socially aware robot navigation."""

__version__ = "0.1.0"

from .adaptation import AdaptationConfig, VelocityAdaptConfig, adapt_group, adapt_scene  # noqa: E402
from .approach import ApproachConfig, ApproachPose, estimate_approach_pose  # noqa: E402
from .costmap import Costmap, GridSpec, LayerStack, compose  # noqa: E402
from .field import (GaussianParams, GroupState, PersonState, Pose2D, SceneState,  # noqa: E402
                    altered_asymmetric_gaussian, build_group, global_field)
from .kernels import BACKEND  # noqa: E402

__all__ = [
    "AdaptationConfig", "VelocityAdaptConfig", "adapt_group", "adapt_scene",
    "ApproachConfig", "ApproachPose", "estimate_approach_pose",
    "Costmap", "GridSpec", "LayerStack", "compose",
    "GaussianParams", "GroupState", "PersonState", "Pose2D", "SceneState",
    "altered_asymmetric_gaussian", "build_group", "global_field", "BACKEND",
]
