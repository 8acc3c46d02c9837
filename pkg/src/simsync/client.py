"""Blocking client session for the world-server wire protocol.

One background thread reads the socket, correlating responses with pending
requests and dispatching topic messages to registered handlers. Topic
handlers run on the receive thread and must not block; hand off to a queue
or worker when real work is needed.
"""

from __future__ import annotations

import logging
import socket
import threading
from collections import Counter

from . import DEFAULT_PORT
from .math3d import Pose
from .protocol import (
    DecodeError,
    Envelope,
    PendingRequests,
    Response,
    TOPICS,
    TopicMessage,
    decode_message,
    encode_message,
)
from .states import (
    LightState,
    LinkState,
    ModelState,
    VisualState,
    light_state_from_wire,
    light_state_to_wire,
    link_state_from_wire,
    link_state_to_wire,
    model_state_from_wire,
    model_state_to_wire,
    pose_to_wire,
    visual_state_from_wire,
    visual_state_to_wire,
)

logger = logging.getLogger(__name__)


class SessionClosed(ConnectionError):
    pass


class RequestTimeout(TimeoutError):
    pass


class RequestFailed(RuntimeError):
    """The server answered ok:false."""

    def __init__(self, op: str, error: str):
        super().__init__(f"{op}: {error}")
        self.op = op
        self.error = error


class Session:
    def __init__(self, address: tuple[str, int] | None = None, *,
                 connect_timeout: float = 5.0, request_timeout: float = 5.0):
        host, port = address or ("127.0.0.1", DEFAULT_PORT)
        self.address = (host, port)
        self.request_timeout = request_timeout
        try:
            self._sock = socket.create_connection(self.address, timeout=connect_timeout)
        except OSError as exc:
            raise ConnectionError(f"cannot connect to {host}:{port}: {exc}") from None
        self._sock.settimeout(None)
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._reader = self._sock.makefile("rb")
        self._lock = threading.Lock()
        self._next_id = 1
        self._pending = PendingRequests()
        self._completions: dict[int, threading.Event] = {}
        self._handlers: dict[str, list] = {t: [] for t in TOPICS}
        self._closed = False
        self.request_counts: Counter[str] = Counter()
        self._thread = threading.Thread(target=self._receive_loop, daemon=True)
        self._thread.start()

    # -- plumbing -------------------------------------------------------------

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
        # shutdown wakes the receive thread; plain close would leave it
        # blocked because the buffered reader still holds the fd
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._sock.close()
        except OSError:
            pass

    def __enter__(self) -> "Session":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _receive_loop(self) -> None:
        try:
            for line in self._reader:
                try:
                    message = decode_message(line)
                except DecodeError as exc:
                    logger.warning("dropping undecodable line from server: %s", exc)
                    continue
                if isinstance(message, Response):
                    with self._lock:
                        waiter = self._pending.match(message)
                        event = self._completions.pop(message.id, None) if waiter else None
                    if event is not None:
                        event.set()
                elif isinstance(message, TopicMessage):
                    for handler in list(self._handlers.get(message.topic, ())):
                        try:
                            handler(message)
                        except Exception:
                            logger.exception("topic handler failed for %r", message.topic)
                else:
                    logger.warning("ignoring request-shaped message from server")
        except OSError:
            pass
        finally:
            with self._lock:
                self._closed = True
                failed = self._pending.fail_all("connection closed")
                events = list(self._completions.values())
                self._completions.clear()
            for event in events:
                event.set()
            del failed

    def request(self, op: str, body: dict, timeout: float | None = None) -> Response:
        """Send one request and block for its response."""
        event = threading.Event()
        with self._lock:
            if self._closed:
                raise SessionClosed(f"session to {self.address} is closed")
            request_id = self._next_id
            self._next_id += 1
            waiter = self._pending.issue(request_id)
            self._completions[request_id] = event
            self.request_counts[op] += 1
            line = encode_message(Envelope(request_id, op, body))
            try:
                self._sock.sendall(line)
            except OSError as exc:
                self._pending.abandon(request_id)
                self._completions.pop(request_id, None)
                raise SessionClosed(f"send failed: {exc}") from None
        if not event.wait(timeout if timeout is not None else self.request_timeout):
            with self._lock:
                self._pending.abandon(request_id)
                self._completions.pop(request_id, None)
            raise RequestTimeout(f"no response for {op} (id {request_id})")
        assert waiter.response is not None
        return waiter.response

    def call(self, op: str, body: dict, timeout: float | None = None) -> dict:
        """Like :meth:`request` but raises :class:`RequestFailed` on ok:false."""
        response = self.request(op, body, timeout)
        if not response.ok:
            raise RequestFailed(op, response.error or "unknown error")
        assert response.body is not None
        return response.body

    # -- topics ---------------------------------------------------------------

    def subscribe(self, *topics: str) -> list[str]:
        """Replace this session's server-side subscription set."""
        body = self.call("subscribe", {"topics": list(topics)})
        return body["topics"]

    def on_topic(self, topic: str, handler) -> None:
        if topic not in self._handlers:
            raise ValueError(f"unknown topic {topic!r}")
        self._handlers[topic].append(handler)

    def remove_topic_handler(self, topic: str, handler) -> None:
        self._handlers[topic].remove(handler)

    # -- typed helpers ---------------------------------------------------------

    def get_model_states(self, names: list[str]) -> list[ModelState | None]:
        body = self.call("get_model_states", {"names": list(names)})
        return [model_state_from_wire(r) if r is not None else None for r in body["results"]]

    def set_model_states(self, model_states: list[ModelState]) -> list[str]:
        body = self.call("set_model_states", {"states": [model_state_to_wire(s) for s in model_states]})
        return body["statuses"]

    def get_model_state(self, name: str) -> ModelState:
        body = self.call("get_model_state", {"name": name})
        return model_state_from_wire(body["state"])

    def set_model_state(self, state: ModelState) -> str:
        body = self.call("set_model_state", {"state": model_state_to_wire(state)})
        return body["status"]

    def get_link_states(self, keys: list[tuple[str, str]]) -> list[LinkState | None]:
        names = [{"model_name": m, "link_name": l} for m, l in keys]
        body = self.call("get_link_states", {"names": names})
        return [link_state_from_wire(r) if r is not None else None for r in body["results"]]

    def set_link_states(self, link_states: list[LinkState]) -> list[str]:
        body = self.call("set_link_states", {"states": [link_state_to_wire(s) for s in link_states]})
        return body["statuses"]

    def get_visual_states(self, keys: list[tuple[str, str, str]]) -> list[VisualState | None]:
        names = [{"model_name": m, "link_name": l, "visual_name": v} for m, l, v in keys]
        body = self.call("get_visual_states", {"names": names})
        return [visual_state_from_wire(r) if r is not None else None for r in body["results"]]

    def set_visual_states(self, visual_states: list[VisualState]) -> list[str]:
        body = self.call("set_visual_states", {"states": [visual_state_to_wire(s) for s in visual_states]})
        return body["statuses"]

    def get_light_states(self, names: list[str]) -> list[LightState | None]:
        body = self.call("get_light_states", {"names": list(names)})
        return [light_state_from_wire(r) if r is not None else None for r in body["results"]]

    def set_light_states(self, light_states: list[LightState]) -> list[str]:
        body = self.call("set_light_states", {"states": [light_state_to_wire(s) for s in light_states]})
        return body["statuses"]

    def spawn_model(self, name: str, model_xml: str, initial_pose: Pose | None = None) -> None:
        self.call("spawn_model", {
            "name": name,
            "xml": model_xml,
            "initial_pose": pose_to_wire(initial_pose or Pose()),
        })

    def delete_model(self, name: str) -> None:
        self.call("delete_model", {"name": name})

    def advance_clock(self, ticks: int) -> int:
        body = self.call("advance_clock", {"ticks": ticks})
        return body["sim_time_ns"]
