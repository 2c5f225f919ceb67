"""Inter-rater statistics: annotation spread, percentiles, and ICC.

The spread of a keypoint is the mean distance of each rater's annotation
to the across-rater mean annotation, pooled over raters and frames, with
every distance normalized by its frame's diagonal. Deviations are taken
to the mean that includes the rater's own annotation, which carries the
usual sqrt((N-1)/N) shrinkage relative to rater-vs-truth error.

ICC coefficients follow the McGraw & Wong (1996) single-measure,
two-way definitions: ICC(A,1) for absolute agreement and ICC(C,1) for
consistency, with confidence intervals from the exact F pivot for
consistency and the Satterthwaite degrees-of-freedom approximation for
agreement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy import special

from .skeleton import KEYPOINTS, KeypointId
from .types import DatasetManifest, Point, PoseAnnotation


class DegenerateRatingsError(ValueError):
    """Ratings carry no usable variance (e.g. a constant matrix)."""


class SpreadStat(NamedTuple):
    h: float
    h95: float


@dataclass(frozen=True)
class HumanBaseline:
    """Per-keypoint spread (mean and 95th percentile), both normalized."""

    per_keypoint: Mapping[KeypointId, SpreadStat]
    n_raters: int
    n_frames: int

    def __post_init__(self) -> None:
        if self.n_raters < 2:
            raise ValueError("baseline needs at least 2 raters")
        if self.n_frames < 1:
            raise ValueError("baseline needs at least 1 frame")
        for k, stat in self.per_keypoint.items():
            if stat.h < 0 or stat.h95 < 0:
                raise ValueError(f"{k.label}: spread values must be non-negative")

    def overall(self) -> SpreadStat:
        """Unweighted mean over the 19 keypoints."""
        hs = [self.per_keypoint[k].h for k in KEYPOINTS]
        h95s = [self.per_keypoint[k].h95 for k in KEYPOINTS]
        return SpreadStat(sum(hs) / len(hs), sum(h95s) / len(h95s))


@dataclass(frozen=True)
class IccResult:
    icc_a1: float
    icc_c1: float
    ci_a1: tuple[float, float] | None
    ci_c1: tuple[float, float] | None
    ms_rows: float
    ms_cols: float
    ms_err: float
    n_subjects: int
    k_raters: int


def consensus_pose(
    annotations: Sequence[PoseAnnotation],
) -> dict[KeypointId, Point]:
    """Coordinate-wise mean across raters, per keypoint, for one frame."""
    if len(annotations) < 2:
        raise ValueError("consensus needs at least 2 annotations")
    frame_ids = {a.frame_id for a in annotations}
    if len(frame_ids) != 1:
        raise ValueError(f"mixed frame_ids in consensus input: {sorted(frame_ids)}")
    # canonical summation order keeps the mean bit-stable under permutation
    ordered = sorted(annotations, key=lambda a: a.annotator_id)
    n = len(ordered)
    consensus: dict[KeypointId, Point] = {}
    for k in KEYPOINTS:
        x = sum(a.points[k].x for a in ordered) / n
        y = sum(a.points[k].y for a in ordered) / n
        consensus[k] = Point(x, y)
    return consensus


def percentile(sample: Sequence[float], p: float) -> float:
    """Linear-interpolation percentile at rank p*(n-1) on the sorted sample."""
    if len(sample) == 0:
        raise ValueError("empty sample")
    if not 0 <= p <= 1:
        raise ValueError(f"p must be in [0, 1], got {p}")
    ordered = sorted(sample)
    rank = p * (len(ordered) - 1)
    lo = math.floor(rank)
    hi = math.ceil(rank)
    if lo == hi:
        return ordered[lo]
    weight = rank - lo
    return ordered[lo] * (1 - weight) + ordered[hi] * weight


def annotation_spread(
    interrater: Mapping[str, Sequence[PoseAnnotation]],
    manifest: DatasetManifest,
) -> HumanBaseline:
    """Per-keypoint spread over the inter-rater frames.

    Every frame must carry the same number of annotations (>= 2) from
    distinct raters. The 95th percentile is taken over the pooled N*S
    per-rater deviation distances of each keypoint, the same sample the
    mean is taken over.
    """
    if not interrater:
        raise ValueError("no inter-rater frames supplied")
    n_raters: int | None = None
    # distances[k] collects N*S normalized deviations in canonical frame order
    distances: dict[KeypointId, list[float]] = {k: [] for k in KEYPOINTS}
    for frame_id in sorted(interrater):
        annotations = interrater[frame_id]
        raters = {a.annotator_id for a in annotations}
        if len(raters) != len(annotations):
            raise ValueError(f"frame {frame_id!r}: duplicate annotator")
        if n_raters is None:
            n_raters = len(annotations)
            if n_raters < 2:
                raise ValueError("inter-rater frames need at least 2 raters")
        elif len(annotations) != n_raters:
            raise ValueError(
                f"frame {frame_id!r} has {len(annotations)} annotations, "
                f"expected {n_raters}"
            )
        diagonal = manifest.frame(frame_id).diagonal
        center = consensus_pose(list(annotations))
        for k in KEYPOINTS:
            cx, cy = center[k]
            for ann in sorted(annotations, key=lambda a: a.annotator_id):
                p = ann.points[k]
                distances[k].append(math.hypot(p.x - cx, p.y - cy) / diagonal)
    assert n_raters is not None
    per_keypoint = {
        k: SpreadStat(sum(d) / len(d), percentile(d, 0.95))
        for k, d in distances.items()
    }
    return HumanBaseline(per_keypoint, n_raters, len(interrater))


def _mean_squares(ratings: np.ndarray) -> tuple[float, float, float]:
    """Two-way ANOVA mean squares (rows=subjects, cols=raters)."""
    n, k = ratings.shape
    grand = ratings.mean()
    row_means = ratings.mean(axis=1)
    col_means = ratings.mean(axis=0)
    ss_rows = k * float(((row_means - grand) ** 2).sum())
    ss_cols = n * float(((col_means - grand) ** 2).sum())
    ss_total = float(((ratings - grand) ** 2).sum())
    ss_err = ss_total - ss_rows - ss_cols
    ms_rows = ss_rows / (n - 1)
    ms_cols = ss_cols / (k - 1)
    ms_err = max(ss_err, 0.0) / ((n - 1) * (k - 1))
    return ms_rows, ms_cols, ms_err


def icc(ratings) -> IccResult:
    """Point estimates of ICC(A,1) and ICC(C,1) for an n x k matrix."""
    m = np.asarray(ratings, dtype=float)
    if m.ndim != 2:
        raise ValueError("ratings must be a 2-D matrix")
    n, k = m.shape
    if n < 2 or k < 2:
        raise ValueError(f"need at least 2 subjects and 2 raters, got {n}x{k}")
    if not np.isfinite(m).all():
        raise ValueError("ratings contain non-finite cells")
    ms_rows, ms_cols, ms_err = _mean_squares(m)
    if ms_rows == 0 and ms_err == 0:
        raise DegenerateRatingsError(
            "ratings matrix has no subject or residual variance; ICC undefined"
        )
    icc_c1 = (ms_rows - ms_err) / (ms_rows + (k - 1) * ms_err)
    icc_a1 = (ms_rows - ms_err) / (
        ms_rows + (k - 1) * ms_err + (k / n) * (ms_cols - ms_err)
    )
    return IccResult(icc_a1, icc_c1, None, None, ms_rows, ms_cols, ms_err, n, k)


def f_quantile(p: float, df1: float, df2: float) -> float:
    """Quantile of the F(df1, df2) distribution.

    Computed by inverting the regularized incomplete beta function:
    if z = I^-1(df2/2, df1/2; 1-p) then the quantile is df2*(1-z)/(df1*z).
    """
    if not 0 < p < 1:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if df1 <= 0 or df2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    z = special.betaincinv(df2 / 2.0, df1 / 2.0, 1.0 - p)
    if z <= 0:
        return math.inf
    return df2 * (1.0 - z) / (df1 * z)


def icc_confidence(result: IccResult, alpha: float = 0.05) -> IccResult:
    """Attach two-sided (1 - alpha) confidence intervals to ICC estimates.

    alpha = 1 is the degenerate 0%-confidence limit: both intervals
    collapse to the point estimates.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if alpha == 1.0:
        return replace(
            result,
            ci_a1=(result.icc_a1, result.icc_a1),
            ci_c1=(result.icc_c1, result.icc_c1),
        )
    n, k = result.n_subjects, result.k_raters
    ms_rows, ms_cols, ms_err = result.ms_rows, result.ms_cols, result.ms_err
    df1 = n - 1
    df2 = (n - 1) * (k - 1)

    if ms_err == 0:
        # Perfect fit: the consistency pivot degenerates, both bounds hit 1.
        ci_c1 = (1.0, 1.0)
    else:
        f_obs = ms_rows / ms_err
        f_lo = f_obs / f_quantile(1 - alpha / 2, df1, df2)
        f_hi = f_obs * f_quantile(1 - alpha / 2, df2, df1)
        ci_c1 = ((f_lo - 1) / (f_lo + k - 1), (f_hi - 1) / (f_hi + k - 1))

    # Satterthwaite df for the agreement interval.
    r = result.icc_a1
    if r >= 1.0:
        ci_a1 = (1.0, 1.0)
    else:
        a = k * r / (n * (1 - r))
        b = 1 + k * r * (n - 1) / (n * (1 - r))
        numer = (a * ms_cols + b * ms_err) ** 2
        denom = (a * ms_cols) ** 2 / (k - 1) + (b * ms_err) ** 2 / ((n - 1) * (k - 1))
        if denom == 0:
            v = df2
        else:
            v = numer / denom
        f_lo = f_quantile(1 - alpha / 2, df1, v)
        f_hi = f_quantile(1 - alpha / 2, v, df1)
        shared = k * ms_cols + (k * n - k - n) * ms_err
        lower = n * (ms_rows - f_lo * ms_err) / (f_lo * shared + n * ms_rows)
        upper = n * (f_hi * ms_rows - ms_err) / (shared + n * f_hi * ms_rows)
        ci_a1 = (lower, upper)
    return replace(result, ci_a1=ci_a1, ci_c1=ci_c1)


def model_vs_human_icc(
    model_me: Mapping[KeypointId, float],
    human_h: Mapping[KeypointId, float],
    alpha: float = 0.05,
) -> IccResult:
    """ICC between a model's per-keypoint mean error and the human spread.

    Subjects are the 19 keypoints, the two raters are {model, human}.
    Both vectors must use the same (normalized) units; a gross scale
    difference is rejected as a likely millimeter/normalized mix-up.
    """
    missing = [k.label for k in KEYPOINTS if k not in model_me or k not in human_h]
    if missing:
        raise ValueError(f"vectors must cover all keypoints; missing {missing}")
    model_col = [model_me[k] for k in KEYPOINTS]
    human_col = [human_h[k] for k in KEYPOINTS]
    m_mean = sum(model_col) / len(model_col)
    h_mean = sum(human_col) / len(human_col)
    if m_mean > 0 and h_mean > 0:
        ratio = max(m_mean / h_mean, h_mean / m_mean)
        if ratio > 100:
            raise ValueError(
                f"unit mismatch suspected: mean ratio {ratio:.1f} between "
                "model and human columns (millimeters vs normalized?)"
            )
    matrix = np.column_stack([model_col, human_col])
    return icc_confidence(icc(matrix), alpha)
