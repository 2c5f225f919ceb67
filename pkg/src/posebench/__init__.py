"""Evaluation workbench for markerless infant motion trackers."""

from .skeleton import KEYPOINTS, SKELETON_EDGES, SYMMETRIC_PAIRS, KeypointId
from .types import (
    DatasetManifest,
    FrameMeta,
    Point,
    PoseAnnotation,
    PoseClass,
    PredictionSet,
    Setup,
    Split,
    VideoInfo,
    validate_pose,
)

__version__ = "0.1.0"

__all__ = [
    "KEYPOINTS",
    "SKELETON_EDGES",
    "SYMMETRIC_PAIRS",
    "KeypointId",
    "DatasetManifest",
    "FrameMeta",
    "Point",
    "PoseAnnotation",
    "PoseClass",
    "PredictionSet",
    "Setup",
    "Split",
    "VideoInfo",
    "validate_pose",
    "__version__",
]
