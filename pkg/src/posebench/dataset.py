"""Dataset construction: stratified sampling, video-atomic splits, subsets.

Frames are stratified over recording setups (default 40/40/20) with a
fixed share of hand-tagged challenging poses (default 20%) per setup
class. Splits are assigned per video, never per frame, so no infant
appears in two of train/validation/test. All sampling is driven by a
64-bit seed and is fully deterministic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .types import (
    DatasetManifest,
    FrameMeta,
    Setup,
    Split,
    VideoInfo,
)

DEFAULT_SETUP_SHARES: dict[Setup, float] = {
    Setup.STANDARDIZED_HOSPITAL: 0.40,
    Setup.HOME_SMARTPHONE: 0.40,
    Setup.LESS_STANDARDIZED_HOSPITAL: 0.20,
}

DEFAULT_SPLIT_SHARES: dict[Split, float] = {
    Split.TRAIN: 0.72,
    Split.VALIDATION: 0.08,
    Split.TEST: 0.20,
}


class InsufficientFramesError(ValueError):
    pass


@dataclass(frozen=True)
class StratificationPlan:
    total_frames: int
    setup_shares: Mapping[Setup, float] = field(
        default_factory=lambda: dict(DEFAULT_SETUP_SHARES)
    )
    challenging_share: float = 0.20
    split_shares: Mapping[Split, float] = field(
        default_factory=lambda: dict(DEFAULT_SPLIT_SHARES)
    )
    interrater_count: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if abs(sum(self.setup_shares.values()) - 1.0) > 1e-12:
            raise ValueError("setup shares must sum to 1")
        if abs(sum(self.split_shares.values()) - 1.0) > 1e-12:
            raise ValueError("split shares must sum to 1")
        if not 0.0 <= self.challenging_share <= 1.0:
            raise ValueError("challenging share must be in [0, 1]")


def _sorted_video_frames(frames: Iterable[FrameMeta]) -> dict[str, list[FrameMeta]]:
    by_video: dict[str, list[FrameMeta]] = {}
    for f in sorted(frames, key=lambda f: f.frame_id):
        by_video.setdefault(f.video_id, []).append(f)
    return dict(sorted(by_video.items()))


def _largest_remainder(total: int, weights: Sequence[float]) -> list[int]:
    """Integer apportionment of ``total`` by weights; sums exactly."""
    raw = [total * w for w in weights]
    counts = [int(x) for x in raw]
    short = total - sum(counts)
    order = sorted(
        range(len(raw)), key=lambda i: (raw[i] - counts[i], -i), reverse=True
    )
    for i in order[:short]:
        counts[i] += 1
    return counts


def stratify_frames(
    pool: Sequence[FrameMeta], plan: StratificationPlan
) -> list[FrameMeta]:
    """Select plan.total_frames from the pool per the stratification rules.

    Per setup class the target is round(total * share); the random share
    is drawn with equal counts per video (remainder going to videos
    earliest in the seeded shuffle) and the challenging share from frames
    already tagged challenging.
    """
    rng = np.random.default_rng(plan.seed)
    selected: list[FrameMeta] = []
    for setup in Setup:
        share = plan.setup_shares.get(setup, 0.0)
        class_total = round(plan.total_frames * share)
        if class_total == 0:
            continue
        n_challenging = round(class_total * plan.challenging_share)
        n_random = class_total - n_challenging

        class_frames = [f for f in pool if f.setup is setup]
        random_pool = [f for f in class_frames if not f.pose_class.is_challenging]
        challenging_pool = [f for f in class_frames if f.pose_class.is_challenging]

        by_video = _sorted_video_frames(random_pool)
        if n_random > 0 and not by_video:
            raise InsufficientFramesError(f"{setup.value}: no random-pose frames")
        videos = list(by_video)
        shuffled = [videos[i] for i in rng.permutation(len(videos))]
        base, remainder = divmod(n_random, len(videos)) if videos else (0, 0)
        for rank, video_id in enumerate(shuffled):
            quota = base + (1 if rank < remainder else 0)
            available = by_video[video_id]
            if quota > len(available):
                raise InsufficientFramesError(
                    f"{setup.value}: video {video_id!r} has {len(available)} "
                    f"random-pose frames, needs {quota} for an equal draw"
                )
            picks = rng.choice(len(available), size=quota, replace=False)
            selected.extend(available[i] for i in sorted(picks))

        if n_challenging > len(challenging_pool):
            raise InsufficientFramesError(
                f"{setup.value}: {len(challenging_pool)} challenging-tagged "
                f"frames available, {n_challenging} requested"
            )
        if n_challenging > 0:
            ordered = sorted(challenging_pool, key=lambda f: f.frame_id)
            picks = rng.choice(len(ordered), size=n_challenging, replace=False)
            selected.extend(ordered[i] for i in sorted(picks))
    return sorted(selected, key=lambda f: f.frame_id)


def _select_interrater(
    frames: Sequence[FrameMeta],
    count: int,
    shares: Mapping[Setup, float],
    rng: np.random.Generator,
) -> frozenset[str]:
    """Seeded sample with the setup distribution of the stratification plan."""
    count = min(count, len(frames))
    if count == 0:
        return frozenset()
    by_setup = {
        s: sorted((f for f in frames if f.setup is s), key=lambda f: f.frame_id)
        for s in Setup
    }
    targets = dict(
        zip(Setup, _largest_remainder(count, [shares.get(s, 0.0) for s in Setup]))
    )
    # Classes short on frames hand their quota to the others.
    shortfall = 0
    for s in Setup:
        if targets[s] > len(by_setup[s]):
            shortfall += targets[s] - len(by_setup[s])
            targets[s] = len(by_setup[s])
    for s in Setup:
        if shortfall == 0:
            break
        spare = len(by_setup[s]) - targets[s]
        take = min(spare, shortfall)
        targets[s] += take
        shortfall -= take
    chosen: list[str] = []
    for s in Setup:
        if targets[s] == 0:
            continue
        picks = rng.choice(len(by_setup[s]), size=targets[s], replace=False)
        chosen.extend(by_setup[s][i].frame_id for i in sorted(picks))
    return frozenset(chosen)


def split_dataset(
    frames: Sequence[FrameMeta],
    plan: StratificationPlan,
    videos: Sequence[VideoInfo] | None = None,
) -> DatasetManifest:
    """Assign whole videos to splits, greedily filling the most-underfull.

    Videos are visited in seeded-shuffle order; each goes to the split
    whose frame-count deficit against its share target is largest. The
    realized deviation per split is bounded by the largest video. With
    fewer than three videos some split stays empty; that is reported as
    a warning, not an error.
    """
    if not frames:
        raise ValueError("no frames to split")
    by_video = _sorted_video_frames(frames)
    rng = np.random.default_rng(plan.seed)
    video_ids = list(by_video)
    shuffled = [video_ids[i] for i in rng.permutation(len(video_ids))]

    total = len(frames)
    split_order = list(Split)
    deficits = {s: plan.split_shares.get(s, 0.0) * total for s in split_order}
    assignment: dict[str, Split] = {}
    for video_id in shuffled:
        target = max(split_order, key=lambda s: deficits[s])
        assignment[video_id] = target
        deficits[target] -= len(by_video[video_id])

    splits = {f.frame_id: assignment[f.video_id] for f in frames}
    empty = [s.value for s in split_order if s not in set(assignment.values())]
    if empty:
        warnings.warn(
            f"only {len(by_video)} video(s): split(s) left empty: {', '.join(empty)}",
            stacklevel=2,
        )

    if videos is None:
        video_info = tuple(
            VideoInfo(video_id, setup=by_video[video_id][0].setup)
            for video_id in video_ids
        )
    else:
        known = {v.video_id: v for v in videos}
        video_info = tuple(
            known.get(video_id, VideoInfo(video_id, setup=by_video[video_id][0].setup))
            for video_id in video_ids
        )

    ordered_frames = tuple(sorted(frames, key=lambda f: f.frame_id))
    interrater = _select_interrater(
        ordered_frames, plan.interrater_count, plan.setup_shares, rng
    )
    return DatasetManifest(video_info, ordered_frames, splits, interrater)


@dataclass(frozen=True)
class SplitReport:
    """Findings of a split audit; ``violations`` empty means a clean split."""

    violations: tuple[tuple[str, tuple[str, ...]], ...]
    empty_splits: tuple[Split, ...]
    share_deviation: Mapping[Split, float]
    setup_shares: Mapping[Setup, float]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_split(
    manifest: DatasetManifest,
    split_shares: Mapping[Split, float] | None = None,
) -> SplitReport:
    """Audit video atomicity, empty splits and realized shares."""
    shares = split_shares or DEFAULT_SPLIT_SHARES
    video_splits: dict[str, set[Split]] = {}
    split_counts = {s: 0 for s in Split}
    setup_counts = {s: 0 for s in Setup}
    for f in manifest.frames:
        video_splits.setdefault(f.video_id, set()).add(manifest.splits[f.frame_id])
        split_counts[manifest.splits[f.frame_id]] += 1
        setup_counts[f.setup] += 1
    violations = tuple(
        (video_id, tuple(sorted(s.value for s in assigned)))
        for video_id, assigned in sorted(video_splits.items())
        if len(assigned) > 1
    )
    total = len(manifest.frames) or 1
    deviation = {
        s: split_counts[s] - shares.get(s, 0.0) * len(manifest.frames) for s in Split
    }
    realized_setup = {s: setup_counts[s] / total for s in Setup}
    empty = tuple(s for s in Split if split_counts[s] == 0)
    return SplitReport(violations, empty, deviation, realized_setup)


def build_training_subsets(
    train: Sequence[FrameMeta], sizes: Sequence[int], seed: int = 0
) -> dict[int, frozenset[str]]:
    """Nested-free random subsets of the training set, one per size.

    Each subset is an independent seeded draw preserving the training
    set's setup distribution to within one frame per class.
    """
    total = len(train)
    by_setup = {
        s: sorted((f for f in train if f.setup is s), key=lambda f: f.frame_id)
        for s in Setup
    }
    weights = [len(by_setup[s]) / total if total else 0.0 for s in Setup]
    subsets: dict[int, frozenset[str]] = {}
    for size in sizes:
        if size > total:
            raise InsufficientFramesError(
                f"subset size {size} exceeds training set size {total}"
            )
        rng = np.random.default_rng([seed, size])
        targets = _largest_remainder(size, weights)
        chosen: list[str] = []
        for s, target in zip(Setup, targets):
            if target == 0:
                continue
            pool = by_setup[s]
            picks = rng.choice(len(pool), size=target, replace=False)
            chosen.extend(pool[i].frame_id for i in sorted(picks))
        subsets[size] = frozenset(chosen)
    return subsets
