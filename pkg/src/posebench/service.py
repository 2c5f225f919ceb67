"""Annotation collection service: task assignment, durable storage, stats.

State lives in an append-only JSONL log under the data directory; every
acknowledged submission is flushed (and fsynced by default) before the
ack, and a restart replays the log to reconstruct identical state. The
latest submission per (frame, annotator) wins; history stays on disk for
audit.

Assignment rules: every registered annotator gets a task for every
inter-rater frame; a regular frame is owned by the first annotator it is
assigned to and is never given to anyone else. Assignment is idempotent
until the task is submitted.

The HTTP layer is a thin JSON/CSV facade over the core service; a single
lock serializes mutations, so concurrent annotators are safe.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Mapping
from urllib.parse import parse_qs, urlparse

from . import formats
from .agreement import HumanBaseline, annotation_spread
from .skeleton import KEYPOINTS, SKELETON_EDGES, KeypointId
from .types import DatasetManifest, Point, PoseAnnotation, validate_pose

LOG_NAME = "annotations.log"


class UnknownAnnotatorError(KeyError):
    pass


class UnknownTaskError(KeyError):
    pass


class SubmissionRejected(ValueError):
    def __init__(self, violations):
        self.violations = violations
        super().__init__(
            "; ".join(v.message for v in violations) or "submission rejected"
        )


class NoCompleteFramesError(RuntimeError):
    def __init__(self, partial_frames: int):
        self.partial_frames = partial_frames
        super().__init__(
            f"no inter-rater frame has submissions from every annotator yet "
            f"({partial_frames} partially annotated)"
        )


@dataclass(frozen=True)
class AnnotationTask:
    frame_id: str
    annotator_id: str
    status: str  # pending | submitted
    assigned_at: float
    interrater: bool
    width: int
    height: int


class AnnotationService:
    """Core task/submission state machine, independent of the transport."""

    def __init__(
        self,
        manifest: DatasetManifest,
        roster: list[str],
        data_dir: str | Path,
        fsync: bool = True,
        image_root: str | Path | None = None,
    ):
        if not roster:
            raise ValueError("empty annotator roster")
        if len(set(roster)) != len(roster):
            raise ValueError("duplicate annotator ids in roster")
        self.manifest = manifest
        self.roster = list(roster)
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        # relative image paths in the manifest resolve against this root
        self.image_root = Path(image_root) if image_root is not None else self.data_dir
        self.fsync = fsync
        self._lock = threading.Lock()
        self._log_path = self.data_dir / LOG_NAME
        # frame order drives "oldest task first"
        self._frame_order = [f.frame_id for f in manifest.frames]
        self._interrater = [
            fid for fid in self._frame_order if fid in manifest.interrater_frames
        ]
        self._regular = [
            fid for fid in self._frame_order if fid not in manifest.interrater_frames
        ]
        # (frame_id, annotator_id) -> points of the latest submission
        self._submissions: dict[tuple[str, str], dict[KeypointId, Point]] = {}
        # regular frame -> owning annotator, in assignment order
        self._owner: dict[str, str] = {}
        self._assigned_at: dict[tuple[str, str], float] = {}
        self._replay()
        self._log = open(self._log_path, "ab")

    # -- persistence ------------------------------------------------------

    def _replay(self) -> None:
        if not self._log_path.exists():
            return
        with open(self._log_path, "rb") as fh:
            for line_no, raw in enumerate(fh, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    event = json.loads(raw)
                except json.JSONDecodeError:
                    raise ValueError(
                        f"{self._log_path}: corrupt log line {line_no}"
                    ) from None
                self._apply(event)

    def _apply(self, event: Mapping) -> None:
        kind = event["type"]
        if kind == "assign":
            self._owner[event["frame_id"]] = event["annotator_id"]
            self._assigned_at[(event["frame_id"], event["annotator_id"])] = event["ts"]
        elif kind == "submit":
            points = {
                KeypointId.from_label(name): Point(x, y)
                for name, (x, y) in event["points"].items()
            }
            self._submissions[(event["frame_id"], event["annotator_id"])] = points
        else:
            raise ValueError(f"unknown log event type {kind!r}")

    def _append(self, event: dict) -> None:
        data = json.dumps(event, separators=(",", ":")).encode("utf-8") + b"\n"
        self._log.write(data)
        self._log.flush()
        if self.fsync:
            os.fsync(self._log.fileno())

    def close(self) -> None:
        self._log.close()

    # -- assignment and submission ----------------------------------------

    def _check_annotator(self, annotator_id: str) -> None:
        if annotator_id not in self.roster:
            raise UnknownAnnotatorError(f"annotator {annotator_id!r} not in roster")

    def _task(self, frame_id: str, annotator_id: str, interrater: bool) -> AnnotationTask:
        frame = self.manifest.frame(frame_id)
        submitted = (frame_id, annotator_id) in self._submissions
        return AnnotationTask(
            frame_id=frame_id,
            annotator_id=annotator_id,
            status="submitted" if submitted else "pending",
            assigned_at=self._assigned_at.get((frame_id, annotator_id), 0.0),
            interrater=interrater,
            width=frame.width,
            height=frame.height,
        )

    def assign_next_frame(self, annotator_id: str) -> AnnotationTask | None:
        """The annotator's oldest pending task, inter-rater frames first."""
        with self._lock:
            self._check_annotator(annotator_id)
            for frame_id in self._interrater:
                if (frame_id, annotator_id) not in self._submissions:
                    return self._task(frame_id, annotator_id, True)
            for frame_id in self._regular:
                owner = self._owner.get(frame_id)
                if owner == annotator_id:
                    if (frame_id, annotator_id) not in self._submissions:
                        return self._task(frame_id, annotator_id, False)
                elif owner is None:
                    now = time.time()
                    self._owner[frame_id] = annotator_id
                    self._assigned_at[(frame_id, annotator_id)] = now
                    self._append(
                        {
                            "type": "assign",
                            "frame_id": frame_id,
                            "annotator_id": annotator_id,
                            "ts": now,
                        }
                    )
                    return self._task(frame_id, annotator_id, False)
            return None

    def submit_annotation(self, pose: PoseAnnotation) -> AnnotationTask:
        """Validate and durably record a submission; latest one wins."""
        with self._lock:
            self._check_annotator(pose.annotator_id)
            frame_id = pose.frame_id
            if frame_id in self.manifest.interrater_frames:
                interrater = True
            elif frame_id in self._owner:
                if self._owner[frame_id] != pose.annotator_id:
                    raise UnknownTaskError(
                        f"frame {frame_id!r} belongs to another annotator"
                    )
                interrater = False
            else:
                raise UnknownTaskError(
                    f"no task for frame {frame_id!r} and annotator "
                    f"{pose.annotator_id!r}; call assign first"
                )
            frame = self.manifest.frame(frame_id)
            violations = validate_pose(pose, frame)
            if violations:
                raise SubmissionRejected(violations)
            self._append(
                {
                    "type": "submit",
                    "frame_id": frame_id,
                    "annotator_id": pose.annotator_id,
                    "ts": time.time(),
                    "points": {
                        k.label: [pose.points[k].x, pose.points[k].y]
                        for k in KEYPOINTS
                    },
                }
            )
            self._submissions[(frame_id, pose.annotator_id)] = dict(pose.points)
            return self._task(frame_id, pose.annotator_id, interrater)

    # -- read side ----------------------------------------------------------

    def agreement_snapshot(self) -> tuple[HumanBaseline, int, int]:
        """Baseline over inter-rater frames annotated by the whole roster.

        Returns (baseline, complete frame count, partial frame count).
        """
        with self._lock:
            complete: dict[str, list[PoseAnnotation]] = {}
            partial = 0
            for frame_id in self._interrater:
                present = [
                    PoseAnnotation(frame_id, annotator, self._submissions[(frame_id, annotator)])
                    for annotator in self.roster
                    if (frame_id, annotator) in self._submissions
                ]
                if len(present) == len(self.roster):
                    complete[frame_id] = present
                elif present:
                    partial += 1
            if not complete:
                raise NoCompleteFramesError(partial)
            baseline = annotation_spread(complete, self.manifest)
            return baseline, len(complete), partial

    def export_annotations(self) -> bytes:
        """Latest-wins view of the log in the annotation-table format."""
        with self._lock:
            records = [
                PoseAnnotation(frame_id, annotator_id, points)
                for (frame_id, annotator_id), points in self._submissions.items()
            ]
        return formats.write_annotations(records)

    def progress(self) -> dict:
        with self._lock:
            interrater_total = len(self._interrater) * len(self.roster)
            interrater_done = sum(
                1
                for (fid, _a) in self._submissions
                if fid in self.manifest.interrater_frames
            )
            regular_done = len(
                {fid for (fid, _a) in self._submissions if fid not in self.manifest.interrater_frames}
            )
            per_annotator = {
                annotator: sum(
                    1 for (_f, a) in self._submissions if a == annotator
                )
                for annotator in self.roster
            }
            return {
                "frames": len(self._frame_order),
                "interrater_frames": len(self._interrater),
                "regular_frames": len(self._regular),
                "annotators": len(self.roster),
                "interrater_submitted": interrater_done,
                "interrater_expected": interrater_total,
                "regular_submitted": regular_done,
                "per_annotator": per_annotator,
            }


# -- HTTP facade ------------------------------------------------------------


def _task_json(task: AnnotationTask) -> dict:
    return {
        "frame_id": task.frame_id,
        "annotator_id": task.annotator_id,
        "status": task.status,
        "assigned_at": task.assigned_at,
        "interrater": task.interrater,
        "width": task.width,
        "height": task.height,
        "image_url": f"/frames/{task.frame_id}/image",
    }


def _baseline_json(baseline: HumanBaseline, complete: int, partial: int) -> dict:
    return {
        "n_raters": baseline.n_raters,
        "complete_frames": complete,
        "partial_frames": partial,
        "per_keypoint": {
            k.label: {
                "h": baseline.per_keypoint[k].h,
                "h95": baseline.per_keypoint[k].h95,
            }
            for k in KEYPOINTS
        },
    }


class _Handler(BaseHTTPRequestHandler):
    service: AnnotationService  # set by the server
    static_dir: Path | None = None
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, code: int, body: bytes, content_type: str) -> None:
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _json(self, code: int, payload) -> None:
        self._send(code, json.dumps(payload).encode("utf-8"), "application/json")

    def do_GET(self) -> None:  # noqa: N802 (http.server API)
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        try:
            if url.path == "/frames/next":
                annotator = parse_qs(url.query).get("annotator", [""])[0]
                task = self.service.assign_next_frame(annotator)
                if task is None:
                    self._json(200, {"task": None})
                else:
                    self._json(200, {"task": _task_json(task)})
            elif len(parts) == 3 and parts[0] == "frames" and parts[2] == "image":
                self._serve_image(parts[1])
            elif len(parts) == 2 and parts[0] == "frames":
                frame = self.service.manifest.frame(parts[1])
                self._json(
                    200,
                    {
                        "frame_id": frame.frame_id,
                        "video_id": frame.video_id,
                        "width": frame.width,
                        "height": frame.height,
                        "interrater": frame.frame_id
                        in self.service.manifest.interrater_frames,
                    },
                )
            elif url.path == "/agreement":
                baseline, complete, partial = self.service.agreement_snapshot()
                self._json(200, _baseline_json(baseline, complete, partial))
            elif url.path == "/progress":
                self._json(200, self.service.progress())
            elif url.path == "/export":
                self._send(200, self.service.export_annotations(), "text/csv")
            elif url.path == "/schema":
                self._json(
                    200,
                    {
                        "keypoints": [
                            {"ordinal": k.value, "name": k.label} for k in KEYPOINTS
                        ],
                        "edges": [[a.label, b.label] for a, b in SKELETON_EDGES],
                    },
                )
            elif self.static_dir is not None:
                self._serve_static(url.path)
            else:
                self._json(404, {"error": f"no route for {url.path}"})
        except UnknownAnnotatorError as exc:
            self._json(403, {"error": str(exc)})
        except NoCompleteFramesError as exc:
            self._json(
                409, {"error": str(exc), "complete_frames": 0, "partial_frames": exc.partial_frames}
            )
        except KeyError as exc:
            self._json(404, {"error": str(exc)})

    def _serve_image(self, frame_id: str) -> None:
        frame = self.service.manifest.frame(frame_id)
        if not frame.image_path:
            self._json(404, {"error": f"frame {frame_id!r} has no image on record"})
            return
        path = Path(frame.image_path)
        if not path.is_absolute():
            path = self.service.image_root / path
        if not path.exists():
            self._json(404, {"error": f"image file missing: {path}"})
            return
        suffix = path.suffix.lower().lstrip(".")
        content_type = {"png": "image/png", "jpg": "image/jpeg", "jpeg": "image/jpeg"}.get(
            suffix, "application/octet-stream"
        )
        self._send(200, path.read_bytes(), content_type)

    def _serve_static(self, path: str) -> None:
        assert self.static_dir is not None
        rel = path.lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            self._json(404, {"error": f"no route for {path}"})
            return
        content_type = {
            ".html": "text/html",
            ".js": "text/javascript",
            ".css": "text/css",
        }.get(target.suffix, "application/octet-stream")
        self._send(200, target.read_bytes(), content_type)

    def do_POST(self) -> None:  # noqa: N802
        url = urlparse(self.path)
        if url.path != "/annotations":
            self._json(404, {"error": f"no route for {url.path}"})
            return
        length = int(self.headers.get("Content-Length", "0"))
        body = self.rfile.read(length)
        try:
            poses = formats.parse_annotations(self._with_header(body))
        except formats.FormatError as exc:
            self._json(400, {"error": str(exc)})
            return
        if len(poses) != 1:
            self._json(400, {"error": f"expected exactly one pose, got {len(poses)}"})
            return
        try:
            task = self.service.submit_annotation(poses[0])
        except UnknownAnnotatorError as exc:
            self._json(403, {"error": str(exc)})
            return
        except UnknownTaskError as exc:
            self._json(404, {"error": str(exc)})
            return
        except SubmissionRejected as exc:
            self._json(
                422,
                {
                    "error": "validation failed",
                    "violations": [
                        {
                            "kind": v.kind,
                            "keypoint": v.keypoint.label if v.keypoint else None,
                            "message": v.message,
                        }
                        for v in exc.violations
                    ],
                },
            )
            return
        self._json(200, {"status": "ok", "task": _task_json(task)})

    @staticmethod
    def _with_header(body: bytes) -> bytes:
        header = ",".join(formats.ANNOTATION_HEADER).encode("utf-8")
        stripped = body.lstrip()
        if stripped.startswith(header):
            return body
        return header + b"\n" + body


class AnnotationServer:
    """HTTP server wrapper; start()/stop() make in-process testing easy."""

    def __init__(
        self,
        service: AnnotationService,
        host: str = "127.0.0.1",
        port: int = 0,
        static_dir: str | Path | None = None,
    ):
        handler = type(
            "BoundHandler",
            (_Handler,),
            {
                "service": service,
                "static_dir": Path(static_dir) if static_dir else None,
            },
        )
        self.service = service
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "AnnotationServer":
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
        self.service.close()

    def serve_forever(self) -> None:
        try:
            self.httpd.serve_forever()
        finally:
            self.httpd.server_close()
            self.service.close()
