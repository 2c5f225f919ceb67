"""Domain types: points, frames, poses, prediction sets, dataset manifests.

All types are immutable values after construction and safe to share across
worker threads. Coordinates are pixels with the origin at the top-left
corner, x rightward and y downward. Frame bounds are inclusive of the
edges; out-of-bounds points are ingest errors, never silently clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, NamedTuple

from .skeleton import KEYPOINTS, N_KEYPOINTS, KeypointId


class Point(NamedTuple):
    x: float
    y: float

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


class Setup(str, Enum):
    """Recording setup class of a frame's source video."""

    STANDARDIZED_HOSPITAL = "standardized_hospital"
    HOME_SMARTPHONE = "home_smartphone"
    LESS_STANDARDIZED_HOSPITAL = "less_standardized_hospital"


class Split(str, Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


class ChallengeType(str, Enum):
    """Why a frame was hand-picked as a hard pose."""

    LEGS_TOWARD_UPPER_BODY = "legs_toward_upper_body"
    OVERLAP = "overlap"
    CROSSING = "crossing"


@dataclass(frozen=True)
class PoseClass:
    """Pose-class tag: randomly sampled, or challenging with a criterion."""

    challenge: ChallengeType | None = None

    @property
    def is_challenging(self) -> bool:
        return self.challenge is not None

    def __str__(self) -> str:
        if self.challenge is None:
            return "random"
        return f"challenging:{self.challenge.value}"

    @classmethod
    def parse(cls, text: str) -> "PoseClass":
        text = text.strip()
        if text == "random":
            return cls()
        if text.startswith("challenging:"):
            return cls(ChallengeType(text.split(":", 1)[1]))
        raise ValueError(f"unknown pose class: {text!r}")


RANDOM_POSE = PoseClass()


@dataclass(frozen=True)
class FrameMeta:
    """Identity and geometry of one video frame.

    ``diagonal`` is always recomputed from width and height, never stored,
    so it can not go stale.
    """

    frame_id: str
    video_id: str
    width: int
    height: int
    setup: Setup = Setup.STANDARDIZED_HOSPITAL
    pose_class: PoseClass = RANDOM_POSE
    image_path: str | None = None

    def __post_init__(self) -> None:
        if not self.frame_id or not self.video_id:
            raise ValueError("frame_id and video_id must be non-empty")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(
                f"frame {self.frame_id}: dimensions must be positive, "
                f"got {self.width}x{self.height}"
            )

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    def contains(self, p: Point) -> bool:
        """Inclusive bounds check."""
        return p.is_finite() and 0 <= p.x <= self.width and 0 <= p.y <= self.height


@dataclass(frozen=True)
class PoseAnnotation:
    """One rater's 19 keypoint positions for one frame."""

    frame_id: str
    annotator_id: str
    points: Mapping[KeypointId, Point]

    def __post_init__(self) -> None:
        missing = [k.label for k in KEYPOINTS if k not in self.points]
        if missing:
            raise ValueError(
                f"incomplete pose for frame {self.frame_id!r}, "
                f"annotator {self.annotator_id!r}: missing {', '.join(missing)}"
            )


@dataclass(frozen=True)
class PredictionSet:
    """One model's predictions over a set of frames, plus declared metadata.

    Parameter and FLOP counts are ingested as declared by the model's
    author; this workbench never derives them.
    """

    model_id: str
    poses: Mapping[str, Mapping[KeypointId, Point]]
    declared_params: int | None = None
    declared_flops: int | None = None
    declared_resolution: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        for frame_id, pose in self.poses.items():
            if len(pose) != N_KEYPOINTS:
                raise ValueError(
                    f"model {self.model_id!r}: partial pose for frame {frame_id!r}"
                )


@dataclass(frozen=True)
class VideoInfo:
    video_id: str
    site: str = ""
    country: str = ""
    setup: Setup = Setup.STANDARDIZED_HOSPITAL


@dataclass(frozen=True)
class DatasetManifest:
    """Videos, frames, split assignment and the inter-rater frame subset."""

    videos: tuple[VideoInfo, ...]
    frames: tuple[FrameMeta, ...]
    splits: Mapping[str, Split]
    interrater_frames: frozenset[str] = frozenset()
    _by_id: dict = field(init=False, repr=False, compare=False, hash=False, default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        known_videos = {v.video_id for v in self.videos}
        seen: set[str] = set()
        for f in self.frames:
            if f.frame_id in seen:
                raise ValueError(f"duplicate frame_id {f.frame_id!r}")
            seen.add(f.frame_id)
            if f.video_id not in known_videos:
                raise ValueError(
                    f"frame {f.frame_id!r} references unknown video {f.video_id!r}"
                )
        for frame_id in self.splits:
            if frame_id not in seen:
                raise ValueError(f"split entry for unknown frame {frame_id!r}")
        unsplit = seen - set(self.splits)
        if unsplit:
            raise ValueError(f"frames without a split: {sorted(unsplit)[:5]}")
        stray = set(self.interrater_frames) - seen
        if stray:
            raise ValueError(f"inter-rater entries for unknown frames: {sorted(stray)[:5]}")
        object.__setattr__(self, "_by_id", {f.frame_id: f for f in self.frames})

    def frame(self, frame_id: str) -> FrameMeta:
        try:
            return self._by_id[frame_id]
        except KeyError:
            raise KeyError(f"unknown frame {frame_id!r}") from None

    def frames_in(self, split: Split) -> list[FrameMeta]:
        return [f for f in self.frames if self.splits[f.frame_id] is split]


@dataclass(frozen=True)
class Violation:
    """One violated invariant found by a validation pass."""

    kind: str
    message: str
    keypoint: KeypointId | None = None


def validate_pose(pose: PoseAnnotation, frame: FrameMeta) -> list[Violation]:
    """Check a pose against its frame. Empty result means valid.

    Raises ValueError when the pose does not belong to the frame at all;
    everything else is reported, not raised, so callers can surface every
    problem at once.
    """
    if pose.frame_id != frame.frame_id:
        raise ValueError(
            f"pose frame {pose.frame_id!r} does not match frame {frame.frame_id!r}"
        )
    violations: list[Violation] = []
    for k in KEYPOINTS:
        p = pose.points.get(k)
        if p is None:
            violations.append(Violation("missing", f"{k.label}: not annotated", k))
            continue
        if not p.is_finite():
            violations.append(
                Violation("non_finite", f"{k.label}: non-finite coordinates", k)
            )
        elif not frame.contains(p):
            violations.append(
                Violation(
                    "out_of_bounds",
                    f"{k.label}: ({p.x}, {p.y}) outside "
                    f"{frame.width}x{frame.height} frame",
                    k,
                )
            )
    return violations


def pose_array(points: Mapping[KeypointId, Point]) -> "list[tuple[float, float]]":
    """Points as (x, y) rows in ordinal order; helper for numeric code."""
    return [(points[k].x, points[k].y) for k in KEYPOINTS]


def group_by_frame(
    annotations: Iterable[PoseAnnotation],
) -> dict[str, list[PoseAnnotation]]:
    grouped: dict[str, list[PoseAnnotation]] = {}
    for ann in annotations:
        grouped.setdefault(ann.frame_id, []).append(ann)
    return grouped
