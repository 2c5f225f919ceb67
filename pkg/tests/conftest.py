from __future__ import annotations

import numpy as np
import pytest

from posebench.skeleton import KEYPOINTS
from posebench.types import (
    DatasetManifest,
    FrameMeta,
    Point,
    PoseAnnotation,
    Split,
    VideoInfo,
)


def grid_pose(frame_id: str, annotator_id: str, width=800, height=600, shift=0.0):
    """A complete pose with keypoints spread over the frame interior."""
    points = {}
    for i, k in enumerate(KEYPOINTS):
        x = 40 + (i % 5) * (width - 80) / 4 + shift
        y = 40 + (i // 5) * (height - 80) / 4 + shift
        points[k] = Point(x, y)
    return PoseAnnotation(frame_id, annotator_id, points)


def random_pose(frame_id: str, annotator_id: str, rng, width=800, height=600):
    points = {
        k: Point(rng.uniform(0, width), rng.uniform(0, height)) for k in KEYPOINTS
    }
    return PoseAnnotation(frame_id, annotator_id, points)


def single_frame_manifest(frame_id="f0001", width=800, height=600, interrater=False):
    frame = FrameMeta(frame_id, "v01", width, height)
    return DatasetManifest(
        (VideoInfo("v01"),),
        (frame,),
        {frame_id: Split.TEST},
        frozenset({frame_id}) if interrater else frozenset(),
    )


def manifest_for(frames, interrater=()):
    videos = tuple(
        VideoInfo(video_id) for video_id in sorted({f.video_id for f in frames})
    )
    return DatasetManifest(
        videos,
        tuple(frames),
        {f.frame_id: Split.TEST for f in frames},
        frozenset(interrater),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
