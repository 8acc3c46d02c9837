"""Authoritative scene state plus the simulation clock.

Model states are kept in up to two interchangeable representations per
record: a parsed wire dict and/or its canonical encoded text. Batched
handlers work on whichever side is cheaper (the protocol fast path stores
request bytes directly; ticks and typed accessors materialize the dict),
and the other side is derived lazily. A record always has at least one
representation, and a stored record is always valid.

All mutations and clock ticks serialize through one lock, which also gives
batched writes atomicity with respect to readers.

Motion is kinematic only: each tick integrates every model's pose from its
twist (no contacts, gravity, or collision response).
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from typing import Callable

from . import modelxml, states
from .math3d import Pose, Quaternion, Twist, Vector3, pose_compose, quat_from_axis_angle, quat_mul
from .protocol import INVALID, NOT_FOUND, OK
from .states import (
    LightState,
    LinkState,
    ModelState,
    VisualState,
    link_invalid_reason,
    light_invalid_reason,
    model_invalid_reason,
    visual_invalid_reason,
)

__all__ = ["ClockConfig", "SpawnError", "World"]

DEFAULT_STEP_NS = 1_000_000  # 1 ms

# Record slots: a model is [doc, text] with doc a parsed wire dict or None
# and text its canonical JSON bytes or None (never both None).
_DOC = 0
_TEXT = 1


@dataclass(frozen=True)
class ClockConfig:
    """rate == 0 means paused (ticks advance only on explicit request);
    rate > 0 free-runs at that many ticks per second."""

    rate: float = 0.0
    step_ns: int = DEFAULT_STEP_NS
    publish_every: int = 10

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("rate must be >= 0")
        if self.step_ns <= 0:
            raise ValueError("step_ns must be positive")
        if self.publish_every < 1:
            raise ValueError("publish_every must be >= 1")


class SpawnError(ValueError):
    """Spawn rejected; ``code`` is DUPLICATE_NAME or PARSE_ERROR."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


def _zero_twist() -> dict:
    return {
        "linear": {"x": 0.0, "y": 0.0, "z": 0.0},
        "angular": {"x": 0.0, "y": 0.0, "z": 0.0},
    }


def _doc_of(rec: list) -> dict:
    doc = rec[_DOC]
    if doc is None:
        doc = json.loads(rec[_TEXT])
        rec[_DOC] = doc
    return doc


def _text_of(rec: list) -> bytes:
    text = rec[_TEXT]
    if text is None:
        text = json.dumps(rec[_DOC], separators=(",", ":")).encode("utf-8")
        rec[_TEXT] = text
    return text


class World:
    def __init__(self, clock: ClockConfig | None = None):
        self.clock = clock or ClockConfig()
        self.lock = threading.RLock()
        self._models: dict[str, list] = {}
        # Parallel bytes-keyed index sharing the same record lists, plus a
        # memo of parsed get-request name spans; both serve fastpath.py.
        self._models_b: dict[bytes, list] = {}
        self._names_cache: dict[bytes, list[bytes]] = {}
        self._links: dict[tuple[str, str], dict] = {}
        self._visuals: dict[tuple[str, str, str], dict] = {}
        self._lights: dict[str, dict] = {}
        self._sim_time_ns = 0
        self._tick_index = 0
        # Bumped on every observable state mutation; lets byte-identical hot
        # requests replay memoized responses while nothing has changed.
        self._version = 0
        self._get_memo: dict[bytes, tuple[int, bytes]] = {}
        self._set_memo: dict[bytes, tuple[int, bytes]] = {}
        # publish(topic, body) is wired by the transport layer; it is invoked
        # under the world lock and must never block.
        self.publish: Callable[[str, dict], None] | None = None

    # -- introspection -------------------------------------------------------

    @property
    def sim_time_ns(self) -> int:
        return self._sim_time_ns

    def model_names(self) -> list[str]:
        with self.lock:
            return list(self._models)

    def model_state(self, name: str) -> ModelState | None:
        with self.lock:
            rec = self._models.get(name)
            return states.model_state_from_wire(_doc_of(rec)) if rec else None

    def link_state(self, model: str, link: str) -> LinkState | None:
        with self.lock:
            d = self._links.get((model, link))
            return states.link_state_from_wire(d) if d else None

    def visual_state(self, model: str, link: str, visual: str) -> VisualState | None:
        with self.lock:
            d = self._visuals.get((model, link, visual))
            return states.visual_state_from_wire(d) if d else None

    def light_state(self, name: str) -> LightState | None:
        with self.lock:
            d = self._lights.get(name)
            return states.light_state_from_wire(d) if d else None

    # -- fast-path hooks (bytes side; see fastpath.py) -------------------------

    def store_model_text(self, name: str, text: bytes) -> None:
        """Replace a model's state with pre-validated canonical bytes."""
        rec = [None, text]
        self._models[name] = rec
        self._models_b[name.encode("utf-8")] = rec
        self._version += 1

    # -- batched model ops ---------------------------------------------------

    def get_model_states(self, names: list) -> list[dict | None]:
        """One entry per requested name in request order: the state, or null."""
        results = []
        with self.lock:
            models = self._models
            for name in names:
                rec = models.get(name) if isinstance(name, str) else None
                results.append(_doc_of(rec) if rec is not None else None)
            return results

    def set_model_states(self, entries: list) -> list[str]:
        """Apply entries in order (duplicates: last wins); per-entry status."""
        statuses = []
        with self.lock:
            models = self._models
            for entry in entries:
                reason = model_invalid_reason(entry)
                if reason is not None:
                    statuses.append(INVALID)
                    continue
                name = entry["name"]
                if name not in models:
                    statuses.append(NOT_FOUND)
                    continue
                entry.setdefault("reference_frame", states.DEFAULT_FRAME)
                rec = [entry, None]
                models[name] = rec
                self._models_b[name.encode("utf-8")] = rec
                self._version += 1
                statuses.append(OK)
        return statuses

    def get_model_state(self, name: str) -> dict | None:
        with self.lock:
            rec = self._models.get(name)
            return _doc_of(rec) if rec is not None else None

    def set_model_state(self, entry) -> str:
        return self.set_model_states([entry])[0]

    # -- batched link/visual/light ops ---------------------------------------

    @staticmethod
    def _pair(key) -> tuple | None:
        if isinstance(key, dict):
            m, l = key.get("model_name"), key.get("link_name")
            if isinstance(m, str) and isinstance(l, str):
                return (m, l)
        return None

    @staticmethod
    def _triple(key) -> tuple | None:
        if isinstance(key, dict):
            m, l, v = key.get("model_name"), key.get("link_name"), key.get("visual_name")
            if isinstance(m, str) and isinstance(l, str) and isinstance(v, str):
                return (m, l, v)
        return None

    def get_link_states(self, keys: list) -> list[dict | None]:
        with self.lock:
            return [self._links.get(k) if (k := self._pair(key)) else None for key in keys]

    def set_link_states(self, entries: list) -> list[str]:
        statuses = []
        with self.lock:
            for entry in entries:
                reason = link_invalid_reason(entry)
                if reason is not None:
                    statuses.append(INVALID)
                    continue
                key = (entry["model_name"], entry["link_name"])
                if key not in self._links:
                    statuses.append(NOT_FOUND)
                    continue
                self._links[key] = entry
                self._version += 1
                statuses.append(OK)
        return statuses

    def get_visual_states(self, keys: list) -> list[dict | None]:
        with self.lock:
            return [self._visuals.get(k) if (k := self._triple(key)) else None for key in keys]

    def set_visual_states(self, entries: list) -> list[str]:
        statuses = []
        with self.lock:
            for entry in entries:
                reason = visual_invalid_reason(entry)
                if reason is not None:
                    statuses.append(INVALID)
                    continue
                key = (entry["model_name"], entry["link_name"], entry["visual_name"])
                if key not in self._visuals:
                    statuses.append(NOT_FOUND)
                    continue
                states.normalize_visual_wire(entry)
                self._visuals[key] = entry
                self._version += 1
                statuses.append(OK)
        return statuses

    def get_light_states(self, names: list) -> list[dict | None]:
        with self.lock:
            return [self._lights.get(name) if isinstance(name, str) else None for name in names]

    def set_light_states(self, entries: list) -> list[str]:
        statuses = []
        with self.lock:
            for entry in entries:
                reason = light_invalid_reason(entry)
                if reason is not None:
                    statuses.append(INVALID)
                    continue
                name = entry["name"]
                if name not in self._lights:
                    statuses.append(NOT_FOUND)
                    continue
                states.normalize_light_wire(entry)
                self._lights[name] = entry
                self._version += 1
                statuses.append(OK)
        return statuses

    def add_light(self, light: LightState) -> None:
        with self.lock:
            self._lights[light.name] = states.light_state_to_wire(light)
            self._version += 1

    # -- spawn / delete ------------------------------------------------------

    def spawn(self, name: str, model_xml: str, initial_pose: Pose) -> None:
        """Register a model plus its links/visuals; twist starts at zero."""
        if not name:
            raise SpawnError("PARSE_ERROR", "model name must be nonempty")
        try:
            doc = modelxml.parse_model_xml(model_xml)
        except modelxml.ModelXmlError as exc:
            raise SpawnError("PARSE_ERROR", str(exc)) from None
        with self.lock:
            if name in self._models:
                raise SpawnError("DUPLICATE_NAME", f"model {name!r} already exists")
            rec = [
                {
                    "name": name,
                    "pose": states.pose_to_wire(initial_pose),
                    "twist": _zero_twist(),
                    "reference_frame": states.DEFAULT_FRAME,
                },
                None,
            ]
            self._models[name] = rec
            self._models_b[name.encode("utf-8")] = rec
            self._version += 1
            for link in doc.links:
                link_world = pose_compose(initial_pose, link.pose)
                self._links[(name, link.name)] = states.link_state_to_wire(
                    LinkState(name, link.name, link_world, Twist())
                )
                for visual in link.visuals:
                    material = visual.material or states.Material()
                    self._visuals[(name, link.name, visual.name)] = states.visual_state_to_wire(
                        VisualState(name, link.name, visual.name, material)
                    )

    def delete(self, name: str) -> bool:
        """Remove the model and every dependent link/visual record."""
        with self.lock:
            if name not in self._models:
                return False
            del self._models[name]
            self._models_b.pop(name.encode("utf-8"), None)
            self._version += 1
            self._links = {k: v for k, v in self._links.items() if k[0] != name}
            self._visuals = {k: v for k, v in self._visuals.items() if k[0] != name}
            return True

    # -- clock ---------------------------------------------------------------

    def tick(self, n: int = 1) -> int:
        """Advance n ticks: integrate twists, publish clock and state topics."""
        if n < 0:
            raise ValueError("tick count must be >= 0")
        step_ns = self.clock.step_ns
        dt = step_ns * 1e-9
        with self.lock:
            for _ in range(n):
                self._sim_time_ns += step_ns
                self._tick_index += 1
                for rec in self._models.values():
                    if self._integrate(rec, dt):
                        self._version += 1
                if self.publish is not None:
                    self.publish("clock", {"sim_time_ns": self._sim_time_ns})
                    if self._tick_index % self.clock.publish_every == 0:
                        self._publish_states()
            return self._sim_time_ns

    @staticmethod
    def _integrate(rec: list, dt: float) -> bool:
        d = _doc_of(rec)
        twist = d["twist"]
        lin = twist["linear"]
        lx, ly, lz = lin["x"], lin["y"], lin["z"]
        moved = False
        if lx or ly or lz:
            pos = d["pose"]["position"]
            pos["x"] += lx * dt
            pos["y"] += ly * dt
            pos["z"] += lz * dt
            moved = True
        ang = twist["angular"]
        ax, ay, az = ang["x"], ang["y"], ang["z"]
        if ax or ay or az:
            speed = math.sqrt(ax * ax + ay * ay + az * az)
            dq = quat_from_axis_angle(Vector3(ax, ay, az), speed * dt)
            o = d["pose"]["orientation"]
            q = quat_mul(dq, Quaternion(o["x"], o["y"], o["z"], o["w"])).normalized()
            o["x"], o["y"], o["z"], o["w"] = q.x, q.y, q.z, q.w
            moved = True
        if moved:
            rec[_TEXT] = None  # cached encoding is stale
        return moved

    def _publish_states(self) -> None:
        self.publish("model_states", {"states": [_doc_of(rec) for rec in self._models.values()]})
        self.publish("link_states", {"states": list(self._links.values())})
        self.publish("visual_states", {"states": list(self._visuals.values())})
