"""Inference-latency harness for external keypoint predictors.

The predictor speaks a line protocol: the harness sends
``PREDICT <batch_id> <n>`` followed by n frame paths, one per line; the
predictor answers ``RESULT <batch_id>`` followed by n lines of 38
space-separated decimals (x y for keypoints 1-19 in ordinal order).

Each run sends the supplied frames once, in batches; the clock spans the
first request to the last response of the run, so wire overhead is
included in the figure. Warmup runs never appear in the statistics. The
reported number is the median per-image latency over the measured runs
(even run counts take the mean of the two central values).
"""

from __future__ import annotations

import os
import select
import shlex
import socket
import statistics
import subprocess
import time
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

from .skeleton import N_KEYPOINTS

VALUES_PER_POSE = 2 * N_KEYPOINTS

PredictorFn = Callable[[Sequence[str]], Sequence[Sequence[float]]]


class PredictorError(RuntimeError):
    pass


@dataclass(frozen=True)
class BenchConfig:
    predictor: str | PredictorFn
    batch_size: int = 10
    runs: int = 10
    warmup_runs: int = 1
    timeout_s: float = 60.0

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.warmup_runs < 0:
            raise ValueError("warmup_runs must be >= 0")


@dataclass(frozen=True)
class BenchResult:
    median_latency_ms_per_image: float
    per_run_ms: tuple[float, ...]
    images_per_run: int


class Transport(Protocol):
    def predict(self, batch_id: int, paths: Sequence[str]) -> list[list[float]]: ...
    def close(self) -> None: ...


def _check_header(batch_id: int, header: str) -> None:
    parts = header.split()
    if len(parts) != 2 or parts[0] != "RESULT":
        raise PredictorError(f"malformed response header: {header!r}")
    if parts[1] != str(batch_id):
        raise PredictorError(
            f"batch id mismatch: sent {batch_id}, predictor answered {parts[1]!r}"
        )


def _parse_pose_rows(rows: Sequence[str], n: int) -> list[list[float]]:
    if len(rows) != n:
        raise PredictorError(f"expected {n} pose rows, got {len(rows)}")
    poses = []
    for row in rows:
        fields = row.split()
        if len(fields) != VALUES_PER_POSE:
            raise PredictorError(
                f"expected {VALUES_PER_POSE} values per pose, got {len(fields)}"
            )
        try:
            poses.append([float(v) for v in fields])
        except ValueError:
            raise PredictorError(f"non-numeric value in pose row: {row!r}") from None
    return poses


class _LineTransport:
    """Shared request/response logic over a readline/write pair."""

    def __init__(self, timeout_s: float):
        self.timeout_s = timeout_s

    def _write(self, data: bytes) -> None:
        raise NotImplementedError

    def _readline(self) -> str:
        raise NotImplementedError

    def predict(self, batch_id: int, paths: Sequence[str]) -> list[list[float]]:
        request = f"PREDICT {batch_id} {len(paths)}\n" + "".join(
            p + "\n" for p in paths
        )
        self._write(request.encode("utf-8"))
        _check_header(batch_id, self._readline())
        rows = [self._readline() for _ in paths]
        return _parse_pose_rows(rows, len(paths))


class SubprocessPredictor(_LineTransport):
    def __init__(self, command: str, timeout_s: float = 60.0):
        super().__init__(timeout_s)
        try:
            self.proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=False,
            )
        except OSError as exc:
            raise PredictorError(f"cannot start predictor {command!r}: {exc}") from None
        self._deadline = 0.0
        self._buffer = b""

    def _write(self, data: bytes) -> None:
        if self.proc.poll() is not None:
            raise PredictorError("predictor process exited")
        assert self.proc.stdin is not None
        # The per-batch deadline starts at the request.
        self._deadline = time.monotonic() + self.timeout_s
        try:
            self.proc.stdin.write(data)
            self.proc.stdin.flush()
        except BrokenPipeError:
            raise PredictorError("predictor closed its input") from None

    def _readline(self) -> str:
        assert self.proc.stdout is not None
        fd = self.proc.stdout.fileno()
        while True:
            newline = self._buffer.find(b"\n")
            if newline >= 0:
                line, self._buffer = self._buffer[:newline], self._buffer[newline + 1 :]
                return line.decode("utf-8")
            remaining = self._deadline - time.monotonic()
            if remaining <= 0:
                raise PredictorError(f"predictor exceeded {self.timeout_s}s per batch")
            ready, _, _ = select.select([fd], [], [], min(remaining, 0.5))
            if ready:
                chunk = os.read(fd, 65536)
                if not chunk:
                    raise PredictorError("predictor closed its output mid-response")
                self._buffer += chunk
            elif self.proc.poll() is not None:
                raise PredictorError("predictor process exited mid-response")

    def close(self) -> None:
        if self.proc.poll() is None:
            if self.proc.stdin is not None:
                try:
                    self.proc.stdin.close()
                except BrokenPipeError:
                    pass
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()


class SocketPredictor(_LineTransport):
    def __init__(self, address: str, timeout_s: float = 60.0):
        super().__init__(timeout_s)
        host, _, port_text = address.rpartition(":")
        try:
            self.sock = socket.create_connection(
                (host or "127.0.0.1", int(port_text)), timeout=timeout_s
            )
        except OSError as exc:
            raise PredictorError(f"cannot reach predictor at {address}: {exc}") from None
        self.reader = self.sock.makefile("rb")

    def _write(self, data: bytes) -> None:
        try:
            self.sock.sendall(data)
        except OSError as exc:
            raise PredictorError(f"send failed: {exc}") from None

    def _readline(self) -> str:
        try:
            line = self.reader.readline()
        except socket.timeout:
            raise PredictorError(f"predictor exceeded {self.timeout_s}s per batch") from None
        if not line:
            raise PredictorError("predictor closed the connection mid-response")
        return line.decode("utf-8").rstrip("\n")

    def close(self) -> None:
        self.reader.close()
        self.sock.close()


class CallablePredictor:
    """In-process predictor; useful for deterministic harness tests."""

    def __init__(self, fn: PredictorFn):
        self.fn = fn

    def predict(self, batch_id: int, paths: Sequence[str]) -> list[list[float]]:
        rows = self.fn(paths)
        return _parse_pose_rows(
            [" ".join(repr(float(v)) for v in row) for row in rows], len(paths)
        )

    def close(self) -> None:
        pass


def open_predictor(endpoint: str | PredictorFn, timeout_s: float = 60.0) -> Transport:
    """tcp://host:port connects a socket; a callable runs in-process;
    anything else is treated as a subprocess command line."""
    if callable(endpoint):
        return CallablePredictor(endpoint)
    if endpoint.startswith("tcp://"):
        return SocketPredictor(endpoint[len("tcp://") :], timeout_s)
    return SubprocessPredictor(endpoint, timeout_s)


def measure_latency(
    frames: Sequence[str],
    config: BenchConfig,
    clock: Callable[[], float] = time.perf_counter,
) -> BenchResult:
    """Benchmark a predictor over the given frame references.

    The clock is sampled exactly twice per run: before the first request
    and after the last response.
    """
    if len(frames) < config.batch_size:
        raise ValueError(
            f"need at least batch_size={config.batch_size} frames, got {len(frames)}"
        )
    batches = [
        list(frames[i : i + config.batch_size])
        for i in range(0, len(frames), config.batch_size)
    ]
    transport = open_predictor(config.predictor, config.timeout_s)
    per_run_ms: list[float] = []
    try:
        batch_id = 0
        for run in range(config.warmup_runs + config.runs):
            start = clock()
            for batch in batches:
                transport.predict(batch_id, batch)
                batch_id += 1
            elapsed_ms = (clock() - start) * 1000.0
            if run >= config.warmup_runs:
                per_run_ms.append(elapsed_ms)
    finally:
        transport.close()
    median_run = statistics.median(per_run_ms)
    return BenchResult(
        median_latency_ms_per_image=median_run / len(frames),
        per_run_ms=tuple(per_run_ms),
        images_per_run=len(frames),
    )
