"""Benchmark: batched vs single-request scene synchronization latency.

One iteration is a full scene sync against a world holding N objects: get
all N model states, then set all N model states. BATCHED mode does that with
one get request and one set request; SINGLE mode emulates the legacy
one-state-per-request interface with N get round trips followed by N set
round trips on one benchmarking thread.

The timer covers request send to final response; request lines are built
before the clock starts, and response payloads are sanity-checked outside
the timed region. The same poses are written every iteration so iterations
are directly comparable. Warm-up iterations run first and are excluded from
the statistics.

CLI:  bench --mode batched|single --counts 10..100:10 --iterations 500
            --addr host:port --out results.csv [--reconnect-per-request]
"""

from __future__ import annotations

import argparse
import gc
import json
import socket
import statistics
import sys
import time
from dataclasses import dataclass

from . import DEFAULT_PORT
from .protocol import OK

BENCH_XML = (
    '<model name="bench_box"><link name="body"><visual name="v">'
    '<geometry><box size="0.5 0.5 0.5"/></geometry></visual></link></model>'
)

_WARMUP_DEFAULT = 50


class BenchAborted(RuntimeError):
    """Connection lost mid-run; carries the results gathered so far."""

    def __init__(self, message: str, partial: list["BenchResult"]):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class BenchConfig:
    mode: str = "batched"  # "batched" | "single"
    object_counts: tuple[int, ...] = (10, 20, 30, 40, 50, 60, 70, 80, 90, 100)
    iterations: int = 500
    warmup: int = _WARMUP_DEFAULT
    address: tuple[str, int] = ("127.0.0.1", DEFAULT_PORT)
    reconnect_per_request: bool = False
    cleanup: bool = True
    # Testing hook: administer (spawn/delete) via a different address than the
    # measured connection, e.g. to route only measured traffic via a proxy.
    measure_address: tuple[str, int] | None = None

    def __post_init__(self):
        if self.mode not in ("batched", "single"):
            raise ValueError("mode must be 'batched' or 'single'")
        if not self.object_counts or any(n < 1 for n in self.object_counts):
            raise ValueError("object counts must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.warmup < 0:
            raise ValueError("warmup must be >= 0")


@dataclass(frozen=True)
class BenchResult:
    mode: str
    n_objects: int
    iterations: int
    mean_us: float
    std_us: float
    min_us: float
    max_us: float

    def __post_init__(self):
        assert self.std_us >= 0 and self.min_us <= self.mean_us <= self.max_us


class BlockingWire:
    """Minimal single-threaded request/response connection."""

    def __init__(self, address: tuple[str, int], timeout: float = 30.0):
        try:
            self._sock = socket.create_connection(address, timeout=timeout)
        except OSError as exc:
            raise ConnectionError(f"cannot connect to {address[0]}:{address[1]}: {exc}") from None
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._sock.settimeout(timeout)
        self._rf = self._sock.makefile("rb")
        self.next_id = 1

    def roundtrip(self, line: bytes) -> bytes:
        self._sock.sendall(line)
        reply = self._rf.readline()
        if not reply:
            raise ConnectionError("server closed the connection")
        return reply

    def request(self, op: str, body: dict) -> dict:
        rid = self.next_id
        self.next_id += 1
        line = json.dumps({"id": rid, "op": op, "body": body}, separators=(",", ":")).encode() + b"\n"
        reply = json.loads(self.roundtrip(line))
        if not reply.get("ok"):
            raise RuntimeError(f"{op} failed: {reply.get('error')}")
        return reply["body"]

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


def _object_names(n: int) -> list[str]:
    return [f"b{i:03d}" for i in range(n)]


def _object_state(name: str, index: int) -> dict:
    return {
        "name": name,
        "pose": {
            "position": {"x": float(index), "y": 0.5, "z": 0.25},
            "orientation": {"x": 0.0, "y": 0.0, "z": 0.0, "w": 1.0},
        },
        "twist": {
            "linear": {"x": 0.0, "y": 0.0, "z": 0.0},
            "angular": {"x": 0.0, "y": 0.0, "z": 0.0},
        },
        "reference_frame": "world",
    }


class SyncBenchmark:
    """One (mode, N) measurement: spawn objects, time iterations, clean up."""

    def __init__(self, cfg: BenchConfig, n_objects: int):
        self.cfg = cfg
        self.n = n_objects
        self.names = _object_names(n_objects)
        self._admin: BlockingWire | None = None

    # -- phases ----------------------------------------------------------------

    def setup(self) -> None:
        self._admin = BlockingWire(self.cfg.address)
        for i, name in enumerate(self.names):
            body = {"name": name, "xml": BENCH_XML, "initial_pose": _object_state(name, i)["pose"]}
            try:
                self._admin.request("spawn_model", body)
            except RuntimeError as exc:
                if "DUPLICATE_NAME" not in str(exc):
                    raise
                self._admin.request("delete_model", {"name": name})
                self._admin.request("spawn_model", body)

    def cleanup(self) -> None:
        if self._admin is None:
            return
        if self.cfg.cleanup:
            for name in self.names:
                try:
                    self._admin.request("delete_model", {"name": name})
                except (RuntimeError, ConnectionError):
                    pass
        self._admin.close()
        self._admin = None

    def measure(self) -> BenchResult:
        cfg = self.cfg
        address = cfg.measure_address or cfg.address
        samples_us: list[float] = []
        iterate = self._iterate_batched if cfg.mode == "batched" else self._iterate_single
        wire = None
        gc_was_enabled = gc.isenabled()
        try:
            if not cfg.reconnect_per_request:
                wire = BlockingWire(address)
            # Always at least one unmeasured verifying iteration, then the rest
            # of the warm-up, then the timed iterations (with the collector
            # paused so its pauses do not pollute the samples).
            iterate(wire, address, verify=True)
            for _ in range(max(cfg.warmup, 1) - 1):
                iterate(wire, address)
            gc.collect()
            gc.disable()
            for _ in range(cfg.iterations):
                samples_us.append(iterate(wire, address) / 1000.0)
        except (ConnectionError, OSError, socket.timeout) as exc:
            raise BenchAborted(f"connection lost during {cfg.mode} N={self.n}: {exc}", []) from None
        finally:
            if gc_was_enabled:
                gc.enable()
            if wire is not None:
                wire.close()
        return BenchResult(
            cfg.mode,
            self.n,
            cfg.iterations,
            statistics.mean(samples_us),
            statistics.stdev(samples_us) if len(samples_us) > 1 else 0.0,
            min(samples_us),
            max(samples_us),
        )

    # -- iteration bodies ---------------------------------------------------------

    def _get_line(self, rid: int) -> bytes:
        body = json.dumps({"names": self.names}, separators=(",", ":"))
        return f'{{"id":{rid},"op":"get_model_states","body":{body}}}'.encode() + b"\n"

    def _set_line(self, rid: int) -> bytes:
        states = [_object_state(n, i) for i, n in enumerate(self.names)]
        body = json.dumps({"states": states}, separators=(",", ":"))
        return f'{{"id":{rid},"op":"set_model_states","body":{body}}}'.encode() + b"\n"

    def _roundtrip(self, wire: BlockingWire | None, address, line: bytes) -> bytes:
        if wire is not None:
            return wire.roundtrip(line)
        one_shot = BlockingWire(address)
        try:
            return one_shot.roundtrip(line)
        finally:
            one_shot.close()

    def _take_id(self, wire: BlockingWire | None) -> int:
        if wire is None:
            return 1  # fresh connection per request restarts the id sequence
        rid = wire.next_id
        wire.next_id += 1
        return rid

    def _iterate_batched(self, wire, address, verify: bool = False) -> int:
        get_line = self._get_line(self._take_id(wire))
        set_line = self._set_line(self._take_id(wire))
        t0 = time.perf_counter_ns()
        get_reply = self._roundtrip(wire, address, get_line)
        set_reply = self._roundtrip(wire, address, set_line)
        elapsed = time.perf_counter_ns() - t0
        if verify:
            results = json.loads(get_reply)["body"]["results"]
            if len(results) != self.n or any(r is None for r in results):
                raise RuntimeError("benchmark world is missing objects")
            statuses = json.loads(set_reply)["body"]["statuses"]
            if statuses != [OK] * self.n:
                raise RuntimeError(f"benchmark set rejected: {statuses[:5]}...")
        return elapsed

    def _iterate_single(self, wire, address, verify: bool = False) -> int:
        get_lines = []
        set_lines = []
        for i, name in enumerate(self.names):
            gb = json.dumps({"name": name}, separators=(",", ":"))
            get_lines.append((f'{{"id":{self._take_id(wire)},"op":"get_model_state","body":{gb}}}').encode() + b"\n")
        for i, name in enumerate(self.names):
            sb = json.dumps({"state": _object_state(name, i)}, separators=(",", ":"))
            set_lines.append((f'{{"id":{self._take_id(wire)},"op":"set_model_state","body":{sb}}}').encode() + b"\n")
        replies = []
        t0 = time.perf_counter_ns()
        for line in get_lines:
            replies.append(self._roundtrip(wire, address, line))
        for line in set_lines:
            replies.append(self._roundtrip(wire, address, line))
        elapsed = time.perf_counter_ns() - t0
        if verify:
            for reply in replies[: self.n]:
                if json.loads(reply)["body"]["state"] is None:
                    raise RuntimeError("benchmark world is missing objects")
            for reply in replies[self.n:]:
                if json.loads(reply)["body"]["status"] != OK:
                    raise RuntimeError("benchmark single set rejected")
        return elapsed


def run_sync_benchmark(cfg: BenchConfig) -> list[BenchResult]:
    """Run the configured mode across all object counts."""
    results: list[BenchResult] = []
    for n in cfg.object_counts:
        bench = SyncBenchmark(cfg, n)
        bench.setup()
        try:
            results.append(bench.measure())
        except BenchAborted as exc:
            raise BenchAborted(str(exc), results) from None
        finally:
            bench.cleanup()
    return results


def emit_report(results: list[BenchResult], path: str) -> None:
    """Write a CSV (one row per mode/count) and print a summary table."""
    if not results:
        raise ValueError("no benchmark results to report")
    ordered = sorted(results, key=lambda r: (r.mode, r.n_objects))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("mode,n_objects,iterations,mean_us,std_us,min_us,max_us\n")
        for r in ordered:
            fh.write(f"{r.mode},{r.n_objects},{r.iterations},{r.mean_us!r},{r.std_us!r},{r.min_us!r},{r.max_us!r}\n")
    print(f"{'mode':>8} {'N':>4} {'iters':>6} {'mean_us':>10} {'std_us':>10} {'min_us':>10} {'max_us':>10}")
    for r in ordered:
        print(f"{r.mode:>8} {r.n_objects:>4} {r.iterations:>6} "
              f"{r.mean_us:>10.1f} {r.std_us:>10.1f} {r.min_us:>10.1f} {r.max_us:>10.1f}")


def parse_counts(spec: str) -> tuple[int, ...]:
    """Accepts 'a..b:step', a comma list, or a single count."""
    spec = spec.strip()
    if ".." in spec:
        span, _, step_text = spec.partition(":")
        start_text, _, stop_text = span.partition("..")
        start, stop = int(start_text), int(stop_text)
        step = int(step_text) if step_text else 10
        if step < 1 or stop < start:
            raise ValueError(f"bad counts range {spec!r}")
        return tuple(range(start, stop + 1, step))
    if "," in spec:
        return tuple(int(part) for part in spec.split(","))
    return (int(spec),)


def _parse_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    return (host or "127.0.0.1", int(port))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bench", description=__doc__.splitlines()[0])
    parser.add_argument("--mode", choices=("batched", "single"), required=True)
    parser.add_argument("--counts", default="10..100:10", type=parse_counts,
                        help="object counts: 'a..b:step', comma list, or one value")
    parser.add_argument("--iterations", type=int, default=500)
    parser.add_argument("--warmup", type=int, default=_WARMUP_DEFAULT)
    parser.add_argument("--addr", default=f"127.0.0.1:{DEFAULT_PORT}", type=_parse_addr, metavar="HOST:PORT")
    parser.add_argument("--out", default="results.csv")
    parser.add_argument("--reconnect-per-request", action="store_true",
                        help="open a fresh connection for every request (emulates non-persistent proxies)")
    args = parser.parse_args(argv)

    cfg = BenchConfig(
        mode=args.mode,
        object_counts=args.counts,
        iterations=args.iterations,
        warmup=args.warmup,
        address=args.addr,
        reconnect_per_request=args.reconnect_per_request,
    )
    try:
        results = run_sync_benchmark(cfg)
    except BenchAborted as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        if exc.partial:
            print("writing partial results", file=sys.stderr)
            emit_report(exc.partial, args.out)
        return 2
    except ConnectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    emit_report(results, args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
