import csv
import socket
import threading

import pytest

from simsync.bench import (
    BenchAborted,
    BenchConfig,
    BenchResult,
    BlockingWire,
    SyncBenchmark,
    emit_report,
    parse_counts,
    run_sync_benchmark,
)


class CountingProxy:
    """TCP forwarder counting complete request lines from client to server."""

    def __init__(self, upstream):
        self.upstream = upstream
        self.request_lines = 0
        self.connections = 0
        self._listener = socket.socket()
        self._listener.bind(("127.0.0.1", 0))
        self._listener.listen(8)
        self._listener.settimeout(0.25)
        self.address = self._listener.getsockname()
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._thread.start()

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                client, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            self.connections += 1
            server = socket.create_connection(self.upstream)
            server.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            client.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            threading.Thread(target=self._pump_requests, args=(client, server), daemon=True).start()
            threading.Thread(target=self._pump_raw, args=(server, client), daemon=True).start()

    def _pump_requests(self, src, dst):
        reader = src.makefile("rb")
        try:
            for line in reader:
                self.request_lines += 1
                dst.sendall(line)
        except OSError:
            pass
        finally:
            for s in (src, dst):
                try:
                    s.shutdown(socket.SHUT_RDWR)
                except OSError:
                    pass

    def _pump_raw(self, src, dst):
        try:
            while True:
                chunk = src.recv(65536)
                if not chunk:
                    return
                dst.sendall(chunk)
        except OSError:
            pass

    def close(self):
        self._stop.set()
        self._listener.close()


class TestParseCounts:
    def test_range(self):
        assert parse_counts("10..100:10") == (10, 20, 30, 40, 50, 60, 70, 80, 90, 100)

    def test_range_default_step(self):
        assert parse_counts("10..30") == (10, 20, 30)

    def test_list_and_single(self):
        assert parse_counts("5,7,9") == (5, 7, 9)
        assert parse_counts("50") == (50,)

    def test_bad_range(self):
        with pytest.raises(ValueError):
            parse_counts("50..10:10")


class TestEmitReport:
    def test_csv_round_trips_full_precision(self, tmp_path):
        results = [
            BenchResult("single", 20, 5, 123.456789012345, 1.5, 100.0, 150.0),
            BenchResult("batched", 10, 5, 42.25, 0.125, 40.0, 44.0),
        ]
        path = tmp_path / "out.csv"
        emit_report(results, str(path))
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert [r["mode"] for r in rows] == ["batched", "single"]  # sorted by mode then N
        assert float(rows[1]["mean_us"]) == 123.456789012345
        assert rows[0]["n_objects"] == "10"

    def test_empty_results_error(self, tmp_path):
        with pytest.raises(ValueError):
            emit_report([], str(tmp_path / "x.csv"))

    def test_result_invariants(self):
        with pytest.raises(AssertionError):
            BenchResult("batched", 1, 1, 5.0, 0.1, 6.0, 7.0)  # min > mean


class TestBenchRuns:
    def test_batched_small_run(self, server):
        cfg = BenchConfig(mode="batched", object_counts=(3,), iterations=5, warmup=2,
                          address=server.address)
        (result,) = run_sync_benchmark(cfg)
        assert result.mode == "batched" and result.n_objects == 3
        assert result.iterations == 5
        assert result.min_us <= result.mean_us <= result.max_us
        assert server.world.model_names() == []  # cleaned up

    def test_single_small_run(self, server):
        cfg = BenchConfig(mode="single", object_counts=(2,), iterations=4, warmup=1,
                          address=server.address)
        (result,) = run_sync_benchmark(cfg)
        assert result.mode == "single"
        assert result.mean_us > 0

    def test_reruns_reuse_names(self, server):
        cfg = BenchConfig(mode="batched", object_counts=(2,), iterations=2, warmup=1,
                          address=server.address, cleanup=False)
        run_sync_benchmark(cfg)
        run_sync_benchmark(cfg)  # spawns collide with leftovers; must recover

    def test_reconnect_per_request_smoke(self, server):
        cfg = BenchConfig(mode="single", object_counts=(1,), iterations=2, warmup=1,
                          address=server.address, reconnect_per_request=True)
        (result,) = run_sync_benchmark(cfg)
        assert result.mean_us > 0

    def test_aborted_when_server_gone(self, server):
        address = server.address
        cfg = BenchConfig(mode="batched", object_counts=(2,), iterations=3, warmup=1,
                          address=address)
        bench = SyncBenchmark(cfg, 2)
        bench.setup()
        server.stop()
        with pytest.raises(BenchAborted):
            bench.measure()


class TestRequestCounts:
    def test_batched_exactly_2_per_iteration(self, server):
        proxy = CountingProxy(server.address)
        try:
            iterations, warmup, n = 6, 3, 4
            cfg = BenchConfig(mode="batched", object_counts=(n,), iterations=iterations,
                              warmup=warmup, address=server.address,
                              measure_address=proxy.address)
            bench = SyncBenchmark(cfg, n)
            bench.setup()
            result = bench.measure()
            bench.cleanup()
            assert proxy.request_lines == (warmup + iterations) * 2
            assert proxy.connections == 1
            assert result.iterations == iterations
        finally:
            proxy.close()

    def test_single_exactly_2n_per_iteration(self, server):
        proxy = CountingProxy(server.address)
        try:
            iterations, warmup, n = 4, 2, 5
            cfg = BenchConfig(mode="single", object_counts=(n,), iterations=iterations,
                              warmup=warmup, address=server.address,
                              measure_address=proxy.address)
            bench = SyncBenchmark(cfg, n)
            bench.setup()
            bench.measure()
            bench.cleanup()
            assert proxy.request_lines == (warmup + iterations) * 2 * n
        finally:
            proxy.close()


class TestCli:
    def test_main_writes_csv(self, server, tmp_path, capsys):
        from simsync.bench import main

        out = tmp_path / "results.csv"
        code = main([
            "--mode", "batched", "--counts", "2,3", "--iterations", "3",
            "--warmup", "1", "--addr", f"127.0.0.1:{server.port}", "--out", str(out),
        ])
        assert code == 0
        rows = list(csv.DictReader(open(out)))
        assert [int(r["n_objects"]) for r in rows] == [2, 3]
        assert "mean_us" in capsys.readouterr().out

    def test_main_exit_2_when_unreachable(self, tmp_path):
        from simsync.bench import main

        code = main(["--mode", "batched", "--counts", "2", "--iterations", "1",
                     "--addr", "127.0.0.1:1", "--out", str(tmp_path / "x.csv")])
        assert code == 2


class TestBlockingWire:
    def test_request_and_error(self, server):
        wire = BlockingWire(server.address)
        body = wire.request("advance_clock", {"ticks": 2})
        assert body["sim_time_ns"] == 2_000_000
        with pytest.raises(RuntimeError):
            wire.request("delete_model", {"name": "ghost"})
        wire.close()
