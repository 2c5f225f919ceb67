"""Mock predictor speaking the latency-harness wire protocol.

Reads PREDICT requests from stdin (or a TCP socket with --listen) and
answers with zero poses after an optional sleep. --sleep-schedule sleeps
a different amount per request, cycling through the list; handy for
planting known per-run times.

    python -m posebench.mock_predictor --sleep-ms 50
    python -m posebench.mock_predictor --sleep-schedule 10,20,30
"""

from __future__ import annotations

import argparse
import socket
import sys
import time

from .bench import VALUES_PER_POSE

ZERO_POSE = " ".join(["0.0"] * VALUES_PER_POSE)


def serve(reader, writer, sleeps: list[float]) -> None:
    request_index = 0
    while True:
        header = reader.readline()
        if not header:
            return
        parts = header.split()
        if len(parts) != 3 or parts[0] != "PREDICT":
            raise SystemExit(f"unexpected request header: {header!r}")
        batch_id, n = parts[1], int(parts[2])
        for _ in range(n):
            if not reader.readline():
                raise SystemExit("request truncated")
        if sleeps:
            time.sleep(sleeps[request_index % len(sleeps)] / 1000.0)
        request_index += 1
        writer.write(f"RESULT {batch_id}\n")
        for _ in range(n):
            writer.write(ZERO_POSE + "\n")
        writer.flush()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sleep-ms", type=float, default=0.0)
    parser.add_argument(
        "--sleep-schedule",
        type=str,
        default="",
        help="comma-separated per-request sleeps in ms, cycled",
    )
    parser.add_argument("--listen", type=str, default="", help="host:port TCP mode")
    args = parser.parse_args(argv)

    if args.sleep_schedule:
        sleeps = [float(v) for v in args.sleep_schedule.split(",")]
    elif args.sleep_ms > 0:
        sleeps = [args.sleep_ms]
    else:
        sleeps = []

    if args.listen:
        host, _, port = args.listen.rpartition(":")
        server = socket.create_server((host or "127.0.0.1", int(port)))
        conn, _ = server.accept()
        with conn:
            serve(conn.makefile("r"), conn.makefile("w"), sleeps)
        server.close()
        return 0
    serve(sys.stdin, sys.stdout, sleeps)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
