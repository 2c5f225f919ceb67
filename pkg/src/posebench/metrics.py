"""Precision metrics for keypoint predictions against expert annotations.

Distances are Euclidean, normalized by the frame diagonal; millimeter
figures fix the diagonal at exactly 1000 mm. Head-relative thresholds
use the head length of the ground-truth pose (head top to upper neck).
All threshold comparisons are inclusive (error <= threshold counts as
correct). Frame sums run in canonical order (sorted frame_id) so results
are bit-stable regardless of input order or parallel scheduling.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

from .agreement import HumanBaseline, percentile
from .skeleton import KEYPOINTS, KeypointId
from .types import (
    DatasetManifest,
    FrameMeta,
    Point,
    PoseAnnotation,
    PredictionSet,
)

MM_PER_DIAGONAL = 1000.0

DEFAULT_TAUS = (1.0, 0.5, 0.3, 0.1)


class MissingPredictionError(KeyError):
    """A ground-truth frame has no prediction."""


class ErrorSample(NamedTuple):
    model_id: str
    frame_id: str
    keypoint: KeypointId
    d: float


@dataclass(frozen=True)
class PckConfig:
    taus: tuple[float, ...] = DEFAULT_TAUS

    def __post_init__(self) -> None:
        if not self.taus or any(t <= 0 for t in self.taus):
            raise ValueError(f"thresholds must be positive, got {self.taus}")


class KeypointMetrics(NamedTuple):
    me: float
    me_mm: float
    pckh: dict[float, float]
    pck_human95: float | None


@dataclass(frozen=True)
class MetricReport:
    """Per-keypoint and overall precision of one model.

    The overall record is the unweighted mean of the 19 per-keypoint
    values, the same convention the summary rows of the result tables use.
    """

    model_id: str
    per_keypoint: Mapping[KeypointId, KeypointMetrics]
    overall: KeypointMetrics
    n_frames: int


def normalized_distance(pred: Point, gt: Point, frame: FrameMeta) -> float:
    """Euclidean distance in units of the frame diagonal."""
    diagonal = frame.diagonal
    if diagonal <= 0:
        raise ValueError(f"frame {frame.frame_id!r} has zero diagonal")
    return math.hypot(pred.x - gt.x, pred.y - gt.y) / diagonal


def head_length(pose: Mapping[KeypointId, Point]) -> float:
    """Head-top to upper-neck distance in pixels; 0 means degenerate."""
    top = pose[KeypointId.HEAD_TOP]
    neck = pose[KeypointId.UPPER_NECK]
    return math.hypot(top.x - neck.x, top.y - neck.y)


def _sorted_gts(
    gts: Sequence[PoseAnnotation], preds: PredictionSet
) -> list[PoseAnnotation]:
    ordered = sorted(gts, key=lambda a: a.frame_id)
    missing = [a.frame_id for a in ordered if a.frame_id not in preds.poses]
    if missing:
        raise MissingPredictionError(
            f"model {preds.model_id!r} has no prediction for frames "
            f"{missing[:5]}{'...' if len(missing) > 5 else ''}"
        )
    return ordered


def error_samples(
    preds: PredictionSet,
    gts: Sequence[PoseAnnotation],
    manifest: DatasetManifest,
) -> list[ErrorSample]:
    """Normalized prediction errors, in canonical (frame, ordinal) order."""
    samples: list[ErrorSample] = []
    for gt in _sorted_gts(gts, preds):
        frame = manifest.frame(gt.frame_id)
        pose = preds.poses[gt.frame_id]
        for k in KEYPOINTS:
            d = normalized_distance(pose[k], gt.points[k], frame)
            samples.append(ErrorSample(preds.model_id, gt.frame_id, k, d))
    return samples


def mean_error(
    preds: PredictionSet,
    gts: Sequence[PoseAnnotation],
    manifest: DatasetManifest,
) -> tuple[dict[KeypointId, float], float]:
    """Per-keypoint mean normalized error and the unweighted overall mean."""
    ordered = _sorted_gts(gts, preds)
    if not ordered:
        raise ValueError("no ground-truth frames to evaluate")
    sums = {k: 0.0 for k in KEYPOINTS}
    for gt in ordered:
        frame = manifest.frame(gt.frame_id)
        pose = preds.poses[gt.frame_id]
        for k in KEYPOINTS:
            sums[k] += normalized_distance(pose[k], gt.points[k], frame)
    per_keypoint = {k: s / len(ordered) for k, s in sums.items()}
    overall = sum(per_keypoint.values()) / len(per_keypoint)
    return per_keypoint, overall


def pckh(
    preds: PredictionSet,
    gts: Sequence[PoseAnnotation],
    manifest: DatasetManifest,
    config: PckConfig = PckConfig(),
) -> tuple[dict[float, dict[KeypointId, float]], dict[float, float]]:
    """Percentage of predictions within tau * head length, per threshold.

    Frames with coincident head-top and upper-neck annotations have no
    head length; they are excluded here (with a warning) but still count
    toward the distance-normalized metrics.
    """
    ordered = _sorted_gts(gts, preds)
    counts = {tau: {k: 0 for k in KEYPOINTS} for tau in config.taus}
    evaluated = 0
    degenerate: list[str] = []
    for gt in ordered:
        l = head_length(gt.points)
        if l == 0.0:
            degenerate.append(gt.frame_id)
            continue
        evaluated += 1
        pose = preds.poses[gt.frame_id]
        for k in KEYPOINTS:
            p, g = pose[k], gt.points[k]
            err_px = math.hypot(p.x - g.x, p.y - g.y)
            for tau in config.taus:
                if err_px <= tau * l:
                    counts[tau][k] += 1
    if degenerate:
        warnings.warn(
            f"{len(degenerate)} frame(s) with degenerate head length "
            f"excluded from head-relative scoring: {degenerate[:3]}",
            stacklevel=2,
        )
    if evaluated == 0:
        raise ValueError("no frames with a usable head length")
    per_tau = {
        tau: {k: 100.0 * c / evaluated for k, c in by_kp.items()}
        for tau, by_kp in counts.items()
    }
    overall = {
        tau: sum(by_kp.values()) / len(by_kp) for tau, by_kp in per_tau.items()
    }
    return per_tau, overall


def pck_human(
    preds: PredictionSet,
    gts: Sequence[PoseAnnotation],
    manifest: DatasetManifest,
    baseline: HumanBaseline,
) -> tuple[dict[KeypointId, float], float]:
    """Percentage of predictions within the 95th-percentile human spread."""
    missing = [k.label for k in KEYPOINTS if k not in baseline.per_keypoint]
    if missing:
        raise ValueError(f"baseline missing keypoints: {', '.join(missing)}")
    ordered = _sorted_gts(gts, preds)
    if not ordered:
        raise ValueError("no ground-truth frames to evaluate")
    counts = {k: 0 for k in KEYPOINTS}
    for gt in ordered:
        frame = manifest.frame(gt.frame_id)
        pose = preds.poses[gt.frame_id]
        for k in KEYPOINTS:
            d = normalized_distance(pose[k], gt.points[k], frame)
            if d <= baseline.per_keypoint[k].h95:
                counts[k] += 1
    per_keypoint = {k: 100.0 * c / len(ordered) for k, c in counts.items()}
    overall = sum(per_keypoint.values()) / len(per_keypoint)
    return per_keypoint, overall


class DistributionSummary(NamedTuple):
    min: float
    p25: float
    median: float
    p75: float
    p95: float
    max: float


def error_distribution(
    preds: PredictionSet,
    gts: Sequence[PoseAnnotation],
    manifest: DatasetManifest,
) -> dict[KeypointId, DistributionSummary]:
    """Order statistics of the normalized errors, per keypoint."""
    samples = error_samples(preds, gts, manifest)
    if not samples:
        raise ValueError("no error samples")
    by_keypoint: dict[KeypointId, list[float]] = {k: [] for k in KEYPOINTS}
    for s in samples:
        by_keypoint[s.keypoint].append(s.d)
    return {
        k: DistributionSummary(
            min(d),
            percentile(d, 0.25),
            percentile(d, 0.50),
            percentile(d, 0.75),
            percentile(d, 0.95),
            max(d),
        )
        for k, d in by_keypoint.items()
    }


def spread_distribution(
    interrater: Mapping[str, Sequence[PoseAnnotation]],
    manifest: DatasetManifest,
) -> dict[KeypointId, DistributionSummary]:
    """Order statistics of the per-rater deviations on inter-rater frames."""
    from .agreement import consensus_pose

    by_keypoint: dict[KeypointId, list[float]] = {k: [] for k in KEYPOINTS}
    for frame_id in sorted(interrater):
        annotations = interrater[frame_id]
        diagonal = manifest.frame(frame_id).diagonal
        center = consensus_pose(list(annotations))
        for k in KEYPOINTS:
            cx, cy = center[k]
            for ann in sorted(annotations, key=lambda a: a.annotator_id):
                p = ann.points[k]
                by_keypoint[k].append(math.hypot(p.x - cx, p.y - cy) / diagonal)
    return {
        k: DistributionSummary(
            min(d),
            percentile(d, 0.25),
            percentile(d, 0.50),
            percentile(d, 0.75),
            percentile(d, 0.95),
            max(d),
        )
        for k, d in by_keypoint.items()
    }


def median_filter(trajectory: Sequence[Point], window: int) -> list[Point]:
    """Per-coordinate sliding median over a keypoint trajectory.

    The window must be odd; near the ends it shrinks symmetrically so the
    output has the same length as the input.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    if not trajectory:
        raise ValueError("empty trajectory")
    n = len(trajectory)
    half = window // 2
    out: list[Point] = []
    for i in range(n):
        reach = min(half, i, n - 1 - i)
        xs = sorted(p.x for p in trajectory[i - reach : i + reach + 1])
        ys = sorted(p.y for p in trajectory[i - reach : i + reach + 1])
        out.append(Point(xs[reach], ys[reach]))
    return out


def compute_metric_report(
    preds: PredictionSet,
    gts: Sequence[PoseAnnotation],
    manifest: DatasetManifest,
    baseline: HumanBaseline | None = None,
    config: PckConfig = PckConfig(),
) -> MetricReport:
    """Full per-keypoint precision record for one model."""
    me_kp, me_all = mean_error(preds, gts, manifest)
    pckh_kp, pckh_all = pckh(preds, gts, manifest, config)
    if baseline is not None:
        ph_kp, ph_all = pck_human(preds, gts, manifest, baseline)
    else:
        ph_kp, ph_all = {k: None for k in KEYPOINTS}, None
    per_keypoint = {
        k: KeypointMetrics(
            me=me_kp[k],
            me_mm=me_kp[k] * MM_PER_DIAGONAL,
            pckh={tau: pckh_kp[tau][k] for tau in config.taus},
            pck_human95=ph_kp[k],
        )
        for k in KEYPOINTS
    }
    overall = KeypointMetrics(
        me=me_all,
        me_mm=me_all * MM_PER_DIAGONAL,
        pckh=dict(pckh_all),
        pck_human95=ph_all,
    )
    return MetricReport(preds.model_id, per_keypoint, overall, len(gts))


def report_to_dict(report: MetricReport) -> dict:
    return {
        "model_id": report.model_id,
        "n_frames": report.n_frames,
        "per_keypoint": {
            k.label: {
                "me": m.me,
                "me_mm": m.me_mm,
                "pckh": {repr(t): v for t, v in m.pckh.items()},
                "pck_human95": m.pck_human95,
            }
            for k, m in report.per_keypoint.items()
        },
        "overall": {
            "me": report.overall.me,
            "me_mm": report.overall.me_mm,
            "pckh": {repr(t): v for t, v in report.overall.pckh.items()},
            "pck_human95": report.overall.pck_human95,
        },
    }


def report_from_dict(doc: dict) -> MetricReport:
    def metrics(entry: dict) -> KeypointMetrics:
        return KeypointMetrics(
            me=entry["me"],
            me_mm=entry["me_mm"],
            pckh={float(t): v for t, v in entry["pckh"].items()},
            pck_human95=entry.get("pck_human95"),
        )

    per_keypoint = {
        KeypointId.from_label(name): metrics(entry)
        for name, entry in doc["per_keypoint"].items()
    }
    return MetricReport(
        doc["model_id"], per_keypoint, metrics(doc["overall"]), doc.get("n_frames", 0)
    )
