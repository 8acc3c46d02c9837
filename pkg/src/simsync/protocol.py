"""Wire protocol: one UTF-8 JSON object per LF-terminated line over TCP.

Three message kinds share the stream:
  request   {"id":N,"op":"<op>","body":{...}}
  response  {"id":N,"ok":true,"body":{...}}  |  {"id":N,"ok":false,"error":"..."}
  topic     {"topic":"<topic>","body":{...}}

Requests carry a per-session id that must be strictly increasing; responses
may arrive out of order and are correlated by id. Topic messages carry no id
and never expect a reply. Key order and number formatting are canonical
(shortest round-trip floats, no whitespace), pinned by the golden corpus in
``golden/``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Union

logger = logging.getLogger(__name__)

MAX_ID = 2**64 - 1

REQUEST_OPS = (
    "get_model_states",
    "set_model_states",
    "get_model_state",
    "set_model_state",
    "get_link_states",
    "set_link_states",
    "get_visual_states",
    "set_visual_states",
    "get_light_states",
    "set_light_states",
    "spawn_model",
    "delete_model",
    "subscribe",
    "advance_clock",
)
_REQUEST_OP_SET = frozenset(REQUEST_OPS)

TOPICS = ("clock", "model_states", "link_states", "visual_states")
_TOPIC_SET = frozenset(TOPICS)

# Per-entry statuses for batched set operations.
OK = "OK"
NOT_FOUND = "NOT_FOUND"
INVALID = "INVALID"


@dataclass(frozen=True, slots=True)
class Envelope:
    id: int
    op: str
    body: dict


@dataclass(frozen=True, slots=True)
class Response:
    id: int
    ok: bool
    body: dict | None = None
    error: str | None = None


@dataclass(frozen=True, slots=True)
class TopicMessage:
    topic: str
    body: dict


Message = Union[Envelope, Response, TopicMessage]


class EncodeError(ValueError):
    """The message violates the protocol and must not be sent."""


class DecodeError(ValueError):
    """A received line could not be decoded.

    ``offset`` is the character offset within the line when known; ``request_id``
    carries a salvaged request id so the peer can still be answered with a
    protocol-error response.
    """

    def __init__(self, message: str, offset: int = 0, request_id: int | None = None):
        super().__init__(message)
        self.offset = offset
        self.request_id = request_id


def _check_id(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= MAX_ID:
        raise EncodeError("id must be an unsigned 64-bit integer")
    return value


def encode_message(m: Message) -> bytes:
    """Encode a message as exactly one LF-terminated UTF-8 line."""
    if isinstance(m, Envelope):
        _check_id(m.id)
        if m.op not in _REQUEST_OP_SET:
            raise EncodeError(f"unknown op {m.op!r}")
        if not isinstance(m.body, dict):
            raise EncodeError("request body must be an object")
        obj = {"id": m.id, "op": m.op, "body": m.body}
    elif isinstance(m, Response):
        _check_id(m.id)
        if m.ok:
            if not isinstance(m.body, dict):
                raise EncodeError("ok response requires an object body")
            obj = {"id": m.id, "ok": True, "body": m.body}
        else:
            if not isinstance(m.error, str) or not m.error:
                raise EncodeError("error response requires a message")
            obj = {"id": m.id, "ok": False, "error": m.error}
    elif isinstance(m, TopicMessage):
        if m.topic not in _TOPIC_SET:
            raise EncodeError(f"unknown topic {m.topic!r}")
        if not isinstance(m.body, dict):
            raise EncodeError("topic body must be an object")
        obj = {"topic": m.topic, "body": m.body}
    else:
        raise EncodeError(f"not a protocol message: {type(m).__name__}")
    try:
        text = json.dumps(obj, separators=(",", ":"), allow_nan=False)
    except (TypeError, ValueError) as exc:
        raise EncodeError(f"unserializable payload: {exc}") from None
    return text.encode("utf-8") + b"\n"


def encode_body_line(prefix_obj: dict) -> bytes:
    """Encode an already-shaped wire object (used by the server's hot path)."""
    return json.dumps(prefix_obj, separators=(",", ":"), allow_nan=False).encode("utf-8") + b"\n"


def decode_message(line: bytes | str) -> Message:
    """Decode one complete line; inverse of :func:`encode_message`."""
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"not valid UTF-8: {exc}", offset=exc.start) from None
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"not valid JSON: {exc.msg}", offset=exc.pos) from None
    if not isinstance(obj, dict):
        raise DecodeError("message must be a JSON object")

    if "topic" in obj:
        topic = obj.get("topic")
        body = obj.get("body")
        if topic not in _TOPIC_SET:
            raise DecodeError(f"unknown topic {topic!r}")
        if not isinstance(body, dict):
            raise DecodeError("topic body must be an object")
        return TopicMessage(topic, body)

    raw_id = obj.get("id")
    if isinstance(raw_id, bool) or not isinstance(raw_id, int) or not 0 <= raw_id <= MAX_ID:
        raise DecodeError("id must be an unsigned 64-bit integer")

    if "ok" in obj:
        ok = obj.get("ok")
        if not isinstance(ok, bool):
            raise DecodeError("ok must be a boolean", request_id=raw_id)
        if ok:
            body = obj.get("body")
            if not isinstance(body, dict):
                raise DecodeError("ok response requires an object body", request_id=raw_id)
            return Response(raw_id, True, body=body)
        error = obj.get("error")
        if not isinstance(error, str) or not error:
            raise DecodeError("error response requires a message", request_id=raw_id)
        return Response(raw_id, False, error=error)

    op = obj.get("op")
    if not isinstance(op, str):
        raise DecodeError("request requires an op", request_id=raw_id)
    if op not in _REQUEST_OP_SET:
        raise DecodeError(f"unsupported operation {op!r}", request_id=raw_id)
    body = obj.get("body")
    if not isinstance(body, dict):
        raise DecodeError("request body must be an object", request_id=raw_id)
    return Envelope(raw_id, op, body)


@dataclass
class _Waiter:
    response: Response | None = None
    done: bool = False


@dataclass
class PendingRequests:
    """Correlates out-of-order responses with issued request ids.

    Not thread-safe on its own; the owning session serializes access.
    """

    _waiters: dict[int, _Waiter] = field(default_factory=dict)

    def issue(self, request_id: int) -> _Waiter:
        if request_id in self._waiters:
            raise ValueError(f"request id {request_id} already pending")
        w = _Waiter()
        self._waiters[request_id] = w
        return w

    def match(self, response: Response) -> _Waiter | None:
        """Complete the waiter for ``response.id``.

        Unknown or already-completed ids are discarded with a diagnostic (they
        signal a peer bug, never an exception on the receive path).
        """
        w = self._waiters.pop(response.id, None)
        if w is None:
            logger.warning("discarding response for unknown request id %d", response.id)
            return None
        w.response = response
        w.done = True
        return w

    def abandon(self, request_id: int) -> None:
        self._waiters.pop(request_id, None)

    def fail_all(self, error: str) -> list[_Waiter]:
        """Complete every pending waiter with an error response (connection loss)."""
        failed = []
        for request_id, w in self._waiters.items():
            w.response = Response(request_id, False, error=error)
            w.done = True
            failed.append(w)
        self._waiters.clear()
        return failed

    def __len__(self) -> int:
        return len(self._waiters)
