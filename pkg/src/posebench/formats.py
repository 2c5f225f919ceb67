"""Canonical file formats: annotation/prediction tables, manifests, baselines.

Annotation table
    Comma-separated text, header ``frame_id,annotator_id,keypoint,x,y``.
    Coordinates are decimal pixels, keypoints are named. Parsing is
    fail-fast: the whole stream is rejected on the first malformed row,
    with the 1-based row number in the error.

Prediction table
    Same layout with ``model_id`` in place of ``annotator_id``. Leading
    ``# key=value`` comment lines may declare model metadata
    (``params``, ``flops``, ``resolution``).

Manifest
    JSON document with ``videos``, ``frames``, ``splits`` and
    ``interrater`` sections. Frame diagonals are never stored.

Baseline table
    Comma-separated, header ``keypoint,h,h95,n,s``; one row per keypoint.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import IO, Iterable, Mapping

from .skeleton import KEYPOINTS, KeypointId
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
)

ANNOTATION_HEADER = ("frame_id", "annotator_id", "keypoint", "x", "y")
PREDICTION_HEADER = ("frame_id", "model_id", "keypoint", "x", "y")
BASELINE_HEADER = ("keypoint", "h", "h95", "n", "s")


class FormatError(ValueError):
    """Malformed input stream; ``row`` is the 1-based data row number."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        prefix = f"row {row}: " if row is not None else ""
        super().__init__(prefix + message)


def _text(source: bytes | str | IO) -> io.TextIOBase:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, str):
        return io.StringIO(source)
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8")


def _parse_rows(
    source, header: tuple[str, ...], actor_field: str
) -> tuple[dict[tuple[str, str], dict[KeypointId, Point]], dict[str, str]]:
    """Shared row reader for annotation and prediction tables.

    Returns (grouped points keyed by (frame_id, actor_id), metadata from
    leading comment lines).
    """
    stream = _text(source)
    metadata: dict[str, str] = {}
    lines = []
    for line in stream:
        if not lines and line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                metadata[key.strip()] = value.strip()
            continue
        lines.append(line)
    reader = csv.reader(lines)
    try:
        first = next(reader)
    except StopIteration:
        raise FormatError(f"missing header, expected {','.join(header)}")
    if tuple(h.strip() for h in first) != header:
        raise FormatError(
            f"bad header {','.join(first)!r}, expected {','.join(header)!r}"
        )
    grouped: dict[tuple[str, str], dict[KeypointId, Point]] = {}
    for row_no, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != 5:
            raise FormatError(f"expected 5 columns, got {len(row)}", row_no)
        frame_id, actor_id, keypoint_name, x_text, y_text = (c.strip() for c in row)
        if not frame_id or not actor_id:
            raise FormatError(f"empty frame_id or {actor_field}", row_no)
        try:
            keypoint = KeypointId.from_label(keypoint_name)
        except KeyError:
            raise FormatError(f"unknown keypoint name {keypoint_name!r}", row_no)
        try:
            x, y = float(x_text), float(y_text)
        except ValueError:
            raise FormatError(
                f"non-numeric coordinate ({x_text!r}, {y_text!r})", row_no
            )
        if not (math.isfinite(x) and math.isfinite(y)):
            raise FormatError(f"non-finite coordinate ({x}, {y})", row_no)
        pose = grouped.setdefault((frame_id, actor_id), {})
        if keypoint in pose:
            raise FormatError(
                f"duplicate {keypoint.label} for frame {frame_id!r}, "
                f"{actor_field} {actor_id!r}",
                row_no,
            )
        pose[keypoint] = Point(x, y)
    return grouped, metadata


def _check_complete_and_bounded(
    grouped: Mapping[tuple[str, str], Mapping[KeypointId, Point]],
    actor_field: str,
    manifest: DatasetManifest | None,
) -> None:
    for (frame_id, actor_id), points in grouped.items():
        missing = [k.label for k in KEYPOINTS if k not in points]
        if missing:
            raise FormatError(
                f"incomplete pose for frame {frame_id!r}, {actor_field} "
                f"{actor_id!r}: missing {', '.join(missing)}"
            )
        if manifest is not None:
            frame = manifest.frame(frame_id)
            for k in KEYPOINTS:
                if not frame.contains(points[k]):
                    p = points[k]
                    raise FormatError(
                        f"{k.label} at ({p.x}, {p.y}) outside frame "
                        f"{frame_id!r} ({frame.width}x{frame.height})"
                    )


def parse_annotations(
    source, manifest: DatasetManifest | None = None
) -> list[PoseAnnotation]:
    """Parse an annotation table into complete poses.

    When a manifest is supplied, every referenced frame must exist in it
    and every point must lie inside its frame.
    """
    grouped, _ = _parse_rows(source, ANNOTATION_HEADER, "annotator_id")
    _check_complete_and_bounded(grouped, "annotator_id", manifest)
    return [
        PoseAnnotation(frame_id, annotator_id, points)
        for (frame_id, annotator_id), points in grouped.items()
    ]


def write_annotations(records: Iterable[PoseAnnotation]) -> bytes:
    """Serialize poses; rows sorted by (frame_id, annotator_id, ordinal).

    ``parse_annotations(write_annotations(r))`` reproduces ``r`` exactly:
    coordinates are written with shortest round-trip float formatting.
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ANNOTATION_HEADER)
    for ann in sorted(records, key=lambda a: (a.frame_id, a.annotator_id)):
        for k in KEYPOINTS:
            p = ann.points[k]
            writer.writerow([ann.frame_id, ann.annotator_id, k.label, repr(p.x), repr(p.y)])
    return out.getvalue().encode("utf-8")


def parse_predictions(
    source, manifest: DatasetManifest | None = None
) -> list[PredictionSet]:
    """Parse a prediction table into one PredictionSet per model."""
    grouped, metadata = _parse_rows(source, PREDICTION_HEADER, "model_id")
    _check_complete_and_bounded(grouped, "model_id", manifest)
    by_model: dict[str, dict[str, Mapping[KeypointId, Point]]] = {}
    for (frame_id, model_id), points in grouped.items():
        by_model.setdefault(model_id, {})[frame_id] = points
    params = int(metadata["params"]) if "params" in metadata else None
    flops = int(metadata["flops"]) if "flops" in metadata else None
    resolution = None
    if "resolution" in metadata:
        w, _, h = metadata["resolution"].partition("x")
        resolution = (int(w), int(h))
    return [
        PredictionSet(model_id, poses, params, flops, resolution)
        for model_id, poses in sorted(by_model.items())
    ]


def write_predictions(predictions: PredictionSet) -> bytes:
    out = io.StringIO()
    if predictions.declared_params is not None:
        out.write(f"# params={predictions.declared_params}\n")
    if predictions.declared_flops is not None:
        out.write(f"# flops={predictions.declared_flops}\n")
    if predictions.declared_resolution is not None:
        w, h = predictions.declared_resolution
        out.write(f"# resolution={w}x{h}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(PREDICTION_HEADER)
    for frame_id in sorted(predictions.poses):
        points = predictions.poses[frame_id]
        for k in KEYPOINTS:
            p = points[k]
            writer.writerow(
                [frame_id, predictions.model_id, k.label, repr(p.x), repr(p.y)]
            )
    return out.getvalue().encode("utf-8")


def manifest_to_dict(manifest: DatasetManifest) -> dict:
    return {
        "videos": [
            {
                "video_id": v.video_id,
                "site": v.site,
                "country": v.country,
                "setup": v.setup.value,
            }
            for v in manifest.videos
        ],
        "frames": [
            {
                "frame_id": f.frame_id,
                "video_id": f.video_id,
                "width": f.width,
                "height": f.height,
                "setup": f.setup.value,
                "pose_class": str(f.pose_class),
                **({"image_path": f.image_path} if f.image_path else {}),
            }
            for f in manifest.frames
        ],
        "splits": {fid: split.value for fid, split in sorted(manifest.splits.items())},
        "interrater": sorted(manifest.interrater_frames),
    }


def manifest_from_dict(doc: dict) -> DatasetManifest:
    videos = tuple(
        VideoInfo(
            v["video_id"],
            v.get("site", ""),
            v.get("country", ""),
            Setup(v.get("setup", Setup.STANDARDIZED_HOSPITAL.value)),
        )
        for v in doc["videos"]
    )
    frames = tuple(
        FrameMeta(
            frame_id=f["frame_id"],
            video_id=f["video_id"],
            width=int(f["width"]),
            height=int(f["height"]),
            setup=Setup(f.get("setup", Setup.STANDARDIZED_HOSPITAL.value)),
            pose_class=PoseClass.parse(f.get("pose_class", "random")),
            image_path=f.get("image_path"),
        )
        for f in doc["frames"]
    )
    splits = {fid: Split(s) for fid, s in doc["splits"].items()}
    return DatasetManifest(videos, frames, splits, frozenset(doc.get("interrater", ())))


def write_manifest(manifest: DatasetManifest) -> bytes:
    return json.dumps(manifest_to_dict(manifest), indent=2).encode("utf-8")


def parse_manifest(source) -> DatasetManifest:
    data = source if isinstance(source, (bytes, str)) else source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest is not valid JSON: {exc}") from None
    for section in ("videos", "frames", "splits"):
        if section not in doc:
            raise FormatError(f"manifest missing {section!r} section")
    return manifest_from_dict(doc)


def write_baseline(baseline) -> bytes:
    """Serialize a HumanBaseline (see the agreement module) as a table."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(BASELINE_HEADER)
    for k in KEYPOINTS:
        h, h95 = baseline.per_keypoint[k]
        writer.writerow(
            [k.label, repr(h), repr(h95), baseline.n_raters, baseline.n_frames]
        )
    return out.getvalue().encode("utf-8")


def parse_baseline(source):
    from .agreement import HumanBaseline, SpreadStat

    stream = _text(source)
    reader = csv.reader(stream)
    try:
        first = next(reader)
    except StopIteration:
        raise FormatError("empty baseline table")
    if tuple(h.strip() for h in first) != BASELINE_HEADER:
        raise FormatError(
            f"bad header {','.join(first)!r}, expected {','.join(BASELINE_HEADER)!r}"
        )
    per_keypoint: dict[KeypointId, SpreadStat] = {}
    n_raters: int | None = None
    n_frames: int | None = None
    for row_no, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != 5:
            raise FormatError(f"expected 5 columns, got {len(row)}", row_no)
        name, h_text, h95_text, n_text, s_text = (c.strip() for c in row)
        try:
            keypoint = KeypointId.from_label(name)
        except KeyError:
            raise FormatError(f"unknown keypoint name {name!r}", row_no)
        try:
            stat = SpreadStat(float(h_text), float(h95_text))
            n, s = int(n_text), int(s_text)
        except ValueError:
            raise FormatError("non-numeric baseline value", row_no)
        if keypoint in per_keypoint:
            raise FormatError(f"duplicate keypoint {name!r}", row_no)
        if n_raters is not None and (n != n_raters or s != n_frames):
            raise FormatError("inconsistent rater/frame counts", row_no)
        per_keypoint[keypoint] = stat
        n_raters, n_frames = n, s
    if len(per_keypoint) != len(KEYPOINTS):
        missing = [k.label for k in KEYPOINTS if k not in per_keypoint]
        raise FormatError(f"baseline missing keypoints: {', '.join(missing)}")
    assert n_raters is not None and n_frames is not None
    return HumanBaseline(per_keypoint, n_raters, n_frames)
