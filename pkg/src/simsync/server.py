"""TCP world server: serves the line protocol, fans out topics, runs the clock.

Request handling and clock ticks serialize through the world lock (responses
that reference live state are encoded under it, so a reader never observes a
half-applied batch). Topic fan-out goes through a bounded per-session queue
drained by a writer thread; when a subscriber falls behind, messages are
dropped and counted rather than ever blocking the mutator.
"""

from __future__ import annotations

import argparse
import logging
import os
import queue
import socket
import threading

from . import DEFAULT_PORT, PORT_ENV_VAR
from .fastpath import (
    classify,
    fast_get_model_state,
    fast_get_model_states,
    fast_set_model_state,
    fast_set_model_states,
)
from .math3d import Pose
from .modelxml import parse_model_xml
from .protocol import (
    DecodeError,
    Envelope,
    Response,
    TOPICS,
    decode_message,
    encode_body_line,
    encode_message,
)
from .states import pose_from_wire, WireFormatError
from .world import ClockConfig, SpawnError, World

logger = logging.getLogger(__name__)

_TOPIC_QUEUE_SIZE = 4096


def default_port() -> int:
    return int(os.environ.get(PORT_ENV_VAR, DEFAULT_PORT))


class _RequestError(Exception):
    """Turned into an ok:false response for the offending request."""


class _Session:
    def __init__(self, server: "WorldServer", sock: socket.socket, peer):
        self.server = server
        self.sock = sock
        self.peer = peer
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.reader = sock.makefile("rb")
        self.subscriptions: set[str] = set()
        self.dropped: dict[str, int] = {}
        self.last_id = 0
        self._write_lock = threading.Lock()
        self._outbox: queue.Queue[bytes | None] = queue.Queue(maxsize=_TOPIC_QUEUE_SIZE)
        self._closed = False
        self._reader_thread = threading.Thread(target=self._read_loop, daemon=True)
        self._writer_thread = threading.Thread(target=self._write_loop, daemon=True)

    def start(self) -> None:
        self._writer_thread.start()
        self._reader_thread.start()

    def send_line(self, line: bytes) -> None:
        try:
            with self._write_lock:
                self.sock.sendall(line)
        except OSError:
            self.close()

    def offer_topic(self, line: bytes) -> None:
        """Non-blocking enqueue; drops (and counts) when the queue is full."""
        try:
            self._outbox.put_nowait(line)
        except queue.Full:
            self.dropped["total"] = self.dropped.get("total", 0) + 1

    def _write_loop(self) -> None:
        while True:
            line = self._outbox.get()
            if line is None:
                return
            try:
                with self._write_lock:
                    self.sock.sendall(line)
            except OSError:
                self.close()
                return

    def _read_loop(self) -> None:
        try:
            for line in self.reader:
                self._handle_line(line)
        except OSError:
            pass
        finally:
            self.close()

    def _handle_line(self, line: bytes) -> None:
        hot = classify(line)
        if hot is not None:
            op, id_digits, span = hot
            request_id = int(id_digits)
            if request_id <= self.last_id:
                reply = Response(request_id, False, error=f"protocol_error: id {request_id} is not increasing")
                self.send_line(encode_message(reply))
                return
            world = self.server.world
            handler = {"get": fast_get_model_states, "set": fast_set_model_states,
                       "get_one": fast_get_model_state, "set_one": fast_set_model_state}[op]
            body = handler(world, span)
            if body is not None:
                self.last_id = request_id
                self.send_line(b'{"id":' + id_digits + b',"ok":true,"body":' + body + b"}\n")
                return
            # non-canonical payload: fall through to the generic path
        try:
            message = decode_message(line)
        except DecodeError as exc:
            if b'"topic"' in line:
                logger.warning("dropping undecodable topic message from %s: %s", self.peer, exc)
                return
            reply = Response(exc.request_id or 0, False, error=f"protocol_error: {exc} (offset {exc.offset})")
            self.send_line(encode_message(reply))
            return
        if not isinstance(message, Envelope):
            logger.warning("ignoring non-request message from %s", self.peer)
            return
        if message.id <= self.last_id:
            reply = Response(message.id, False, error=f"protocol_error: id {message.id} is not increasing")
            self.send_line(encode_message(reply))
            return
        self.last_id = message.id
        self.send_line(self.server.dispatch(self, message))

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            self._outbox.put_nowait(None)
        except queue.Full:
            pass
        # shutdown wakes any thread blocked on this socket and sends FIN even
        # while the buffered reader still holds the fd
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass
        self.server._forget(self)


class WorldServer:
    def __init__(self, world: World | None = None, host: str = "127.0.0.1", port: int | None = None):
        self.world = world or World()
        self.host = host
        self.port = default_port() if port is None else port
        self._listener: socket.socket | None = None
        self._sessions: list[_Session] = []
        self._sessions_lock = threading.Lock()
        self._stop = threading.Event()
        self._accept_thread: threading.Thread | None = None
        self._clock_thread: threading.Thread | None = None
        self.world.publish = self._publish

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> "WorldServer":
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.host, self.port))
        listener.listen(64)
        self._listener = listener
        self.port = listener.getsockname()[1]
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()
        if self.world.clock.rate > 0:
            self._clock_thread = threading.Thread(target=self._clock_loop, daemon=True)
            self._clock_thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._sessions_lock:
            sessions = list(self._sessions)
        for session in sessions:
            session.close()
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=2.0)
        if self._clock_thread is not None:
            self._clock_thread.join(timeout=2.0)

    def __enter__(self) -> "WorldServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    @property
    def address(self) -> tuple[str, int]:
        return (self.host, self.port)

    def _accept_loop(self) -> None:
        assert self._listener is not None
        self._listener.settimeout(0.25)  # closing a listener does not wake accept()
        while not self._stop.is_set():
            try:
                sock, peer = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            sock.settimeout(None)
            session = _Session(self, sock, peer)
            with self._sessions_lock:
                self._sessions.append(session)
            session.start()

    def _forget(self, session: _Session) -> None:
        with self._sessions_lock:
            if session in self._sessions:
                self._sessions.remove(session)

    def _clock_loop(self) -> None:
        interval = 1.0 / self.world.clock.rate
        while not self._stop.wait(interval):
            self.world.tick(1)

    # -- topics ---------------------------------------------------------------

    def _publish(self, topic: str, body: dict) -> None:
        with self._sessions_lock:
            targets = [s for s in self._sessions if topic in s.subscriptions]
        if not targets:
            return
        line = encode_body_line({"topic": topic, "body": body})
        for session in targets:
            session.offer_topic(line)

    # -- request dispatch ------------------------------------------------------

    def dispatch(self, session: _Session, request: Envelope) -> bytes:
        """Handle one request and return the encoded response line.

        Runs under the world lock so that bodies referencing live state are
        serialized before any later mutation.
        """
        with self.world.lock:
            try:
                body = self._handle(session, request.op, request.body)
                return encode_body_line({"id": request.id, "ok": True, "body": body})
            except _RequestError as exc:
                return encode_message(Response(request.id, False, error=str(exc)))
            except Exception as exc:  # pragma: no cover - defensive
                logger.exception("handler failure for op %s", request.op)
                return encode_message(Response(request.id, False, error=f"internal_error: {exc}"))

    def _handle(self, session: _Session, op: str, body: dict) -> dict:
        world = self.world
        if op == "get_model_states":
            return {"results": world.get_model_states(_list_field(body, "names"))}
        if op == "set_model_states":
            return {"statuses": world.set_model_states(_list_field(body, "states"))}
        if op == "get_model_state":
            name = body.get("name")
            state = world.get_model_state(name) if isinstance(name, str) else None
            if state is None:
                raise _RequestError(f"NOT_FOUND: {name!r}")
            return {"state": state}
        if op == "set_model_state":
            if "state" not in body:
                raise _RequestError("missing field 'state'")
            return {"status": world.set_model_state(body["state"])}
        if op == "get_link_states":
            return {"results": world.get_link_states(_list_field(body, "names"))}
        if op == "set_link_states":
            return {"statuses": world.set_link_states(_list_field(body, "states"))}
        if op == "get_visual_states":
            return {"results": world.get_visual_states(_list_field(body, "names"))}
        if op == "set_visual_states":
            return {"statuses": world.set_visual_states(_list_field(body, "states"))}
        if op == "get_light_states":
            return {"results": world.get_light_states(_list_field(body, "names"))}
        if op == "set_light_states":
            return {"statuses": world.set_light_states(_list_field(body, "states"))}
        if op == "spawn_model":
            name = body.get("name")
            xml = body.get("xml")
            if not isinstance(name, str) or not name or not isinstance(xml, str):
                raise _RequestError("spawn_model requires 'name' and 'xml' strings")
            try:
                pose = pose_from_wire(body.get("initial_pose") or {}, "initial_pose")
            except WireFormatError as exc:
                raise _RequestError(str(exc)) from None
            try:
                world.spawn(name, xml, pose)
            except SpawnError as exc:
                raise _RequestError(str(exc)) from None
            return {"status": "OK"}
        if op == "delete_model":
            name = body.get("name")
            if not isinstance(name, str) or not name:
                raise _RequestError("delete_model requires a 'name' string")
            if not world.delete(name):
                raise _RequestError(f"NOT_FOUND: {name!r}")
            return {"status": "OK"}
        if op == "subscribe":
            topics = _list_field(body, "topics")
            for t in topics:
                if t not in TOPICS:
                    raise _RequestError(f"unknown topic {t!r}")
            session.subscriptions = set(topics)
            return {"topics": sorted(session.subscriptions)}
        if op == "advance_clock":
            ticks = body.get("ticks")
            if isinstance(ticks, bool) or not isinstance(ticks, int) or ticks < 0:
                raise _RequestError("advance_clock requires a non-negative integer 'ticks'")
            if world.clock.rate > 0:
                raise _RequestError("clock is free-running; explicit stepping requires a paused clock")
            return {"sim_time_ns": world.tick(ticks)}
        raise _RequestError(f"unsupported operation {op!r}")  # pragma: no cover


def _list_field(body: dict, key: str) -> list:
    value = body.get(key)
    if not isinstance(value, list):
        raise _RequestError(f"missing list field {key!r}")
    return value


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="simsync-server", description="Run the world server.")
    parser.add_argument("--port", type=int, default=default_port(), help="listen port (0 = ephemeral)")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--step-ns", type=int, default=1_000_000, help="simulation step size in nanoseconds")
    parser.add_argument("--rate", type=float, default=0.0, help="free-running ticks per second; 0 = paused")
    parser.add_argument("--publish-every", type=int, default=10, help="state-topic cadence in ticks")
    parser.add_argument("--seed-world", action="append", default=[], metavar="FILE",
                        help="model-XML file to preload (repeatable)")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    world = World(ClockConfig(rate=args.rate, step_ns=args.step_ns, publish_every=args.publish_every))
    for path in args.seed_world:
        with open(path, "r", encoding="utf-8") as fh:
            xml = fh.read()
        doc = parse_model_xml(xml)
        world.spawn(doc.name, xml, Pose())

    server = WorldServer(world, host=args.host, port=args.port)
    server.start()
    print(f"listening on {server.host}:{server.port}", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
