"""Synthetic scenes, raters and predictors for verifying the metric suite.

Scenes contain plausible supine infant skeletons: a pelvis triangle and a
pelvis-to-head spine chain with limbs attached at loosely bounded joint
angles. Raters add isotropic Gaussian jitter per keypoint; predictors add
jitter plus the two coarse error modes (left/right inversions and uniform
misses). Everything is a pure function of its seed.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dataset import DEFAULT_SETUP_SHARES, _largest_remainder, _select_interrater
from .skeleton import KEYPOINTS, SYMMETRIC_PAIRS, KeypointId
from .types import (
    DatasetManifest,
    FrameMeta,
    Point,
    PoseAnnotation,
    PredictionSet,
    Setup,
    Split,
    VideoInfo,
)

GT_ANNOTATOR = "gt"


@dataclass(frozen=True)
class NoiseProfile:
    """Noise model for a simulated rater or predictor."""

    per_keypoint_sigma: Mapping[KeypointId, float]
    inversion_rate: float = 0.0
    miss_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for k, sigma in self.per_keypoint_sigma.items():
            if sigma < 0 or not math.isfinite(sigma):
                raise ValueError(f"{k.label}: sigma must be finite and >= 0")
        for name, rate in (("inversion", self.inversion_rate), ("miss", self.miss_rate)):
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} rate must be in [0, 1], got {rate}")

    @classmethod
    def uniform(
        cls,
        sigma: float,
        inversion_rate: float = 0.0,
        miss_rate: float = 0.0,
        seed: int = 0,
    ) -> "NoiseProfile":
        return cls({k: sigma for k in KEYPOINTS}, inversion_rate, miss_rate, seed)

    def sigma_array(self) -> np.ndarray:
        return np.array([self.per_keypoint_sigma[k] for k in KEYPOINTS])


def _stream(*parts: int | str) -> list[int]:
    """Stable per-entity seed material (strings hashed with crc32)."""
    out: list[int] = []
    for part in parts:
        if isinstance(part, str):
            out.append(zlib.crc32(part.encode("utf-8")))
        else:
            out.append(part & 0xFFFFFFFFFFFFFFFF)
    return out


def _rotate(length: float, angle: float) -> np.ndarray:
    return np.array([length * math.cos(angle), length * math.sin(angle)])


def _skeleton(
    trunk: float, rng: np.random.Generator, width: int, height: int
) -> dict[KeypointId, Point] | None:
    """One skeleton attempt; None when any point lands out of bounds."""
    theta = rng.uniform(0.0, 2.0 * math.pi)
    u = np.array([math.cos(theta), math.sin(theta)])  # pelvis -> head
    right = np.array([u[1], -u[0]])
    margin = 0.02 * min(width, height)
    anchor = np.array(
        [rng.uniform(margin, width - margin), rng.uniform(margin, height - margin)]
    )

    pts: dict[KeypointId, np.ndarray] = {}
    pelvis_w = rng.uniform(0.20, 0.30) * trunk
    pts[KeypointId.RIGHT_PELVIS] = anchor + right * (pelvis_w / 2)
    pts[KeypointId.LEFT_PELVIS] = anchor - right * (pelvis_w / 2)
    pts[KeypointId.MID_PELVIS] = (
        pts[KeypointId.RIGHT_PELVIS] + pts[KeypointId.LEFT_PELVIS]
    ) / 2

    chest_h = rng.uniform(0.50, 0.60) * trunk
    shoulder_w = rng.uniform(0.25, 0.35) * trunk
    pts[KeypointId.RIGHT_SHOULDER] = anchor + u * chest_h + right * (shoulder_w / 2)
    pts[KeypointId.LEFT_SHOULDER] = anchor + u * chest_h - right * (shoulder_w / 2)
    pts[KeypointId.UPPER_CHEST] = (
        pts[KeypointId.RIGHT_SHOULDER] + pts[KeypointId.LEFT_SHOULDER]
    ) / 2

    neck_h = chest_h + rng.uniform(0.08, 0.12) * trunk
    pts[KeypointId.UPPER_NECK] = anchor + u * neck_h
    pts[KeypointId.HEAD_TOP] = anchor + u * trunk
    nose_h = neck_h + 0.4 * (trunk - neck_h)
    pts[KeypointId.NOSE] = (
        anchor + u * nose_h + right * rng.uniform(-0.06, 0.06) * trunk
    )
    ear_w = rng.uniform(0.10, 0.14) * trunk
    ear_h = neck_h + 0.3 * (trunk - neck_h)
    pts[KeypointId.RIGHT_EAR] = anchor + u * ear_h + right * ear_w
    pts[KeypointId.LEFT_EAR] = anchor + u * ear_h - right * ear_w

    for side, shoulder, elbow_id, wrist_id in (
        (1.0, KeypointId.RIGHT_SHOULDER, KeypointId.RIGHT_ELBOW, KeypointId.RIGHT_WRIST),
        (-1.0, KeypointId.LEFT_SHOULDER, KeypointId.LEFT_ELBOW, KeypointId.LEFT_WRIST),
    ):
        base_angle = math.atan2(side * right[1], side * right[0])
        arm_angle = base_angle + rng.uniform(-2.4, 2.4)
        pts[elbow_id] = pts[shoulder] + _rotate(rng.uniform(0.20, 0.26) * trunk, arm_angle)
        wrist_angle = arm_angle + rng.uniform(-2.4, 2.4)
        pts[wrist_id] = pts[elbow_id] + _rotate(
            rng.uniform(0.18, 0.24) * trunk, wrist_angle
        )

    down = math.atan2(-u[1], -u[0])  # pelvis -> feet
    for pelvis_id, knee_id, ankle_id in (
        (KeypointId.RIGHT_PELVIS, KeypointId.RIGHT_KNEE, KeypointId.RIGHT_ANKLE),
        (KeypointId.LEFT_PELVIS, KeypointId.LEFT_KNEE, KeypointId.LEFT_ANKLE),
    ):
        thigh_angle = down + rng.uniform(-2.2, 2.2)
        pts[knee_id] = pts[pelvis_id] + _rotate(
            rng.uniform(0.22, 0.30) * trunk, thigh_angle
        )
        shank_angle = thigh_angle + rng.uniform(-2.4, 2.4)
        pts[ankle_id] = pts[knee_id] + _rotate(
            rng.uniform(0.20, 0.26) * trunk, shank_angle
        )

    for arr in pts.values():
        if not (0 <= arr[0] <= width and 0 <= arr[1] <= height):
            return None
    return {k: Point(float(pts[k][0]), float(pts[k][1])) for k in KEYPOINTS}


def gen_scene(
    n_frames: int,
    width: int = 1280,
    height: int = 720,
    seed: int = 0,
    frames_per_video: int = 50,
    interrater_count: int = 100,
) -> tuple[DatasetManifest, list[PoseAnnotation]]:
    """Generate a scene: a manifest plus one ground-truth pose per frame.

    Frames are grouped into videos of ``frames_per_video`` and the videos
    spread over the three recording setups at the default 40/40/20 shares.
    Every frame lands in the test split; a seeded inter-rater subset of
    ``interrater_count`` frames (or fewer, for small scenes) is selected
    with the same setup distribution.
    """
    diagonal = math.hypot(width, height)
    if 0.25 * diagonal < 10.0:
        raise ValueError(
            f"{width}x{height} is too small to place a skeleton (trunk < 10 px)"
        )
    if n_frames == 0:
        return (
            DatasetManifest((), (), {}, frozenset()),
            [],
        )
    n_videos = max(1, math.ceil(n_frames / frames_per_video))
    video_setups: list[Setup] = []
    for setup, count in zip(
        Setup, _largest_remainder(n_videos, [DEFAULT_SETUP_SHARES[s] for s in Setup])
    ):
        video_setups.extend([setup] * count)

    width_digits = max(4, len(str(n_frames - 1)))
    frames: list[FrameMeta] = []
    annotations: list[PoseAnnotation] = []
    for i in range(n_frames):
        video_index = i // frames_per_video
        rng = np.random.default_rng(_stream(seed, i))
        trunk = rng.uniform(0.25, 0.50) * diagonal
        pose: dict[KeypointId, Point] | None = None
        while pose is None:
            for _ in range(40):
                pose = _skeleton(trunk, rng, width, height)
                if pose is not None:
                    break
            else:
                trunk *= 0.85
                if trunk < 10.0:
                    raise ValueError(
                        f"{width}x{height} is too small to place a skeleton"
                    )
        frame_id = f"f{i:0{width_digits}d}"
        frames.append(
            FrameMeta(
                frame_id=frame_id,
                video_id=f"v{video_index:04d}",
                width=width,
                height=height,
                setup=video_setups[video_index],
            )
        )
        annotations.append(PoseAnnotation(frame_id, GT_ANNOTATOR, pose))

    videos = tuple(
        VideoInfo(f"v{i:04d}", site="synthetic", setup=video_setups[i])
        for i in range(n_videos)
    )
    splits = {f.frame_id: Split.TEST for f in frames}
    interrater = _select_interrater(
        frames,
        min(interrater_count, n_frames),
        DEFAULT_SETUP_SHARES,
        np.random.default_rng(_stream(seed, "interrater")),
    )
    manifest = DatasetManifest(videos, tuple(frames), splits, interrater)
    return manifest, annotations


def _bounded_jitter(
    base: np.ndarray,
    sigmas: np.ndarray,
    width: int,
    height: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Add per-keypoint isotropic noise, resampling any out-of-bounds point."""
    def out_of_bounds(arr: np.ndarray) -> np.ndarray:
        return ~(
            (arr[:, 0] >= 0)
            & (arr[:, 0] <= width)
            & (arr[:, 1] >= 0)
            & (arr[:, 1] <= height)
        )

    out = base + rng.normal(size=base.shape) * sigmas[:, None]
    for _ in range(100):
        bad = out_of_bounds(out)
        if not bad.any():
            return out
        idx = np.flatnonzero(bad)
        out[idx] = base[idx] + rng.normal(size=(len(idx), 2)) * sigmas[idx, None]
    # Pathological sigma for this frame: keep the exact point instead.
    bad = out_of_bounds(out)
    out[bad] = base[bad]
    return out


def _pose_to_array(points: Mapping[KeypointId, Point]) -> np.ndarray:
    return np.array([[points[k].x, points[k].y] for k in KEYPOINTS])


def _array_to_pose(arr: np.ndarray) -> dict[KeypointId, Point]:
    return {k: Point(float(arr[i, 0]), float(arr[i, 1])) for i, k in enumerate(KEYPOINTS)}


def perturb_rater(
    gt: PoseAnnotation,
    frame: FrameMeta,
    profile: NoiseProfile,
    annotator_id: str,
) -> PoseAnnotation:
    """Simulate one rater's annotation of one frame."""
    rng = np.random.default_rng(_stream(profile.seed, annotator_id, gt.frame_id))
    jittered = _bounded_jitter(
        _pose_to_array(gt.points),
        profile.sigma_array(),
        frame.width,
        frame.height,
        rng,
    )
    return PoseAnnotation(gt.frame_id, annotator_id, _array_to_pose(jittered))


def make_raters(
    annotations: Sequence[PoseAnnotation],
    manifest: DatasetManifest,
    profile: NoiseProfile,
    rater_ids: Sequence[str],
) -> dict[str, list[PoseAnnotation]]:
    """Simulated annotations per rater over the given ground-truth poses."""
    return {
        rater: [
            perturb_rater(gt, manifest.frame(gt.frame_id), profile, rater)
            for gt in annotations
        ]
        for rater in rater_ids
    }


def perturb_model(
    annotations: Sequence[PoseAnnotation],
    manifest: DatasetManifest,
    profile: NoiseProfile,
    model_id: str = "synthetic",
) -> PredictionSet:
    """Simulate a predictor: jitter, then inversions, then misses.

    Inversions swap each symmetric left/right pair with probability
    ``inversion_rate`` (midline keypoints never swap); misses relocate a
    keypoint uniformly inside the frame with probability ``miss_rate``.
    """
    poses: dict[str, dict[KeypointId, Point]] = {}
    sigmas = profile.sigma_array()
    for gt in annotations:
        frame = manifest.frame(gt.frame_id)
        rng = np.random.default_rng(_stream(profile.seed, model_id, gt.frame_id))
        arr = _bounded_jitter(
            _pose_to_array(gt.points), sigmas, frame.width, frame.height, rng
        )
        if profile.inversion_rate > 0:
            for a, b in SYMMETRIC_PAIRS:
                if rng.random() < profile.inversion_rate:
                    ia, ib = a.value - 1, b.value - 1
                    arr[[ia, ib]] = arr[[ib, ia]]
        if profile.miss_rate > 0:
            for i in range(len(KEYPOINTS)):
                if rng.random() < profile.miss_rate:
                    arr[i] = [
                        rng.uniform(0.0, frame.width),
                        rng.uniform(0.0, frame.height),
                    ]
        poses[gt.frame_id] = _array_to_pose(arr)
    return PredictionSet(model_id, poses)
