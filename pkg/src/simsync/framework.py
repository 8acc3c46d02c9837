"""Client-side sync framework: prioritized per-tick trackers, transforms that
mirror server models in both directions, behaviours with lifecycle control,
and spawners.

The update cycle runs getter trackers (HIGH), behaviour fixed_update and
effects (NORMAL), then setter trackers (LOW). Getters issue one batched get
per record kind for everything tracked; setters pack all dirty mirrors into
one batched set per kind. Locally written fields stay authoritative until
they are flushed (dirty wins over an incoming get in the same cycle).
"""

from __future__ import annotations

import logging
import threading
from abc import ABC, abstractmethod
from dataclasses import replace
from enum import IntEnum

from .client import RequestFailed, RequestTimeout, Session, SessionClosed
from .effects import EffectManager
from .math3d import Pose, Twist
from .modelxml import ModelXmlDocument, document_to_xml, load_model_xml
from .protocol import OK
from .states import LightState, Material, ModelState, VisualState

logger = logging.getLogger(__name__)

_TRANSPORT_ERRORS = (SessionClosed, RequestTimeout, RequestFailed, ConnectionError, OSError)


class LifecycleError(RuntimeError):
    """Operation not valid for the behaviour's current lifecycle state."""


class DuplicateRegistrationError(ValueError):
    pass


class TrackerPriority(IntEnum):
    HIGH = 0
    NORMAL = 1
    LOW = 2


class Tracker(ABC):
    """Per-tick callback; subclasses implement :meth:`update_tracker`."""

    def __init__(self, name: str):
        self.name = name

    @abstractmethod
    def update_tracker(self, sim_time_ns: int) -> None:
        ...


class FunctionTracker(Tracker):
    def __init__(self, name: str, fn):
        super().__init__(name)
        self._fn = fn

    def update_tracker(self, sim_time_ns: int) -> None:
        self._fn(sim_time_ns)


class TrackerHandle:
    def __init__(self, manager: "TrackerManager", tracker: Tracker):
        self._manager = manager
        self.tracker = tracker
        self.active = True

    def deregister(self) -> None:
        self._manager.deregister(self)


class TrackerManager:
    """Invokes registered trackers once per tick, HIGH then NORMAL then LOW;
    same-priority trackers run in registration order."""

    def __init__(self):
        self._lock = threading.RLock()
        self._groups: dict[TrackerPriority, list[Tracker]] = {p: [] for p in TrackerPriority}

    def register(self, tracker: Tracker, priority: TrackerPriority = TrackerPriority.NORMAL) -> TrackerHandle:
        with self._lock:
            for group in self._groups.values():
                if tracker in group:
                    raise DuplicateRegistrationError(f"tracker {tracker.name!r} already registered")
            self._groups[TrackerPriority(priority)].append(tracker)
        return TrackerHandle(self, tracker)

    def deregister(self, handle: TrackerHandle) -> None:
        with self._lock:
            if not handle.active:
                return
            handle.active = False
            for group in self._groups.values():
                if handle.tracker in group:
                    group.remove(handle.tracker)
                    return

    def run_tick(self, sim_time_ns: int) -> None:
        """One full cycle. Tracker failures are isolated and logged."""
        with self._lock:
            snapshot = [list(self._groups[p]) for p in TrackerPriority]
        for group in snapshot:
            for tracker in group:
                try:
                    tracker.update_tracker(sim_time_ns)
                except Exception:
                    logger.exception("tracker %r failed", tracker.name)


class ClockPump:
    """Feeds clock-topic ticks into a tracker manager on a worker thread.

    A tick arriving while a cycle runs is queued; queued ticks coalesce so at
    most one follow-up cycle happens after a burst.
    """

    def __init__(self, run_tick):
        self._run_tick = run_tick
        self._cond = threading.Condition()
        self._pending: int | None = None
        self._stopped = False
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    def push(self, sim_time_ns: int) -> None:
        with self._cond:
            self._pending = sim_time_ns
            self._cond.notify()

    def stop(self) -> None:
        with self._cond:
            self._stopped = True
            self._cond.notify()
        self._thread.join(timeout=2.0)

    def _loop(self) -> None:
        while True:
            with self._cond:
                while self._pending is None and not self._stopped:
                    self._cond.wait()
                if self._stopped:
                    return
                sim_time = self._pending
                self._pending = None
            try:
                self._run_tick(sim_time)
            except Exception:
                logger.exception("tick cycle failed")


class _Mirror:
    """Locally cached copy of one server record with per-group dirty flags."""

    __slots__ = ("state", "dirty", "stale")

    def __init__(self, state):
        self.state = state
        self.dirty: set[str] = set()
        self.stale = False


class Transform:
    """Client-side mirror of a model's pose and twist.

    Reads are local and immediate. Writes are local and immediate too, mark
    the field group dirty, and reach the server at the end of the next update
    cycle. Until a behaviour is spawned (or after it is deleted) the
    transform is inert and rejects writes.
    """

    def __init__(self, model_name: str):
        self.model_name = model_name
        self._mirror = _Mirror(ModelState(model_name))
        self._alive = False
        self._lock = threading.RLock()  # replaced by the framework lock on spawn

    @property
    def state(self) -> ModelState:
        return self._mirror.state

    @property
    def pose(self) -> Pose:
        return self._mirror.state.pose

    @property
    def twist(self) -> Twist:
        return self._mirror.state.twist

    @property
    def stale(self) -> bool:
        return self._mirror.stale

    def set_pose(self, pose: Pose) -> None:
        self._write("pose", pose)

    def set_twist(self, twist: Twist) -> None:
        self._write("twist", twist)

    def _write(self, group: str, value) -> None:
        with self._lock:
            if not self._alive:
                raise LifecycleError(f"transform {self.model_name!r} is not live (behaviour not spawned or deleted)")
            self._mirror.state = replace(self._mirror.state, **{group: value})
            self._mirror.dirty.add(group)


class Behaviour:
    """A named, tagged entity mirroring one server model.

    Subclasses override :meth:`update` (driven manually or by an environment
    step) and :meth:`fixed_update` (driven every simulation tick).
    """

    def __init__(self, name: str, tag: str, spawner: "Spawner"):
        if not name or not tag:
            raise ValueError("behaviour requires a nonempty name and tag")
        self.name = name
        self.tag = tag
        self.spawner = spawner
        self.transform = Transform(name)
        self.track_links = False
        self.spawned = False
        self.deleted = False

    def update(self, *args, **kwargs) -> None:
        pass

    def fixed_update(self, sim_time_ns: int) -> None:
        pass


class BehaviourManager:
    """Name/tag registry over all live behaviours, in registration order."""

    def __init__(self):
        self._lock = threading.RLock()
        self._by_name: dict[str, Behaviour] = {}

    def register(self, behaviour: Behaviour) -> None:
        with self._lock:
            if behaviour.name in self._by_name:
                raise DuplicateRegistrationError(f"behaviour {behaviour.name!r} already registered")
            self._by_name[behaviour.name] = behaviour

    def deregister(self, behaviour: Behaviour) -> None:
        with self._lock:
            self._by_name.pop(behaviour.name, None)

    def get(self, name: str) -> Behaviour | None:
        with self._lock:
            return self._by_name.get(name)

    def get_by_tag(self, tag: str) -> list[Behaviour]:
        with self._lock:
            return [b for b in self._by_name.values() if b.tag == tag]

    def snapshot(self) -> list[Behaviour]:
        with self._lock:
            return list(self._by_name.values())

    def dispatch_update(self, behaviours: list[Behaviour] | None = None, *args, **kwargs) -> None:
        for b in behaviours if behaviours is not None else self.snapshot():
            try:
                b.update(*args, **kwargs)
            except Exception:
                logger.exception("behaviour %r update failed", b.name)

    def dispatch_fixed_update(self, behaviours: list[Behaviour], sim_time_ns: int) -> None:
        for b in behaviours:
            try:
                b.fixed_update(sim_time_ns)
            except Exception:
                logger.exception("behaviour %r fixed_update failed", b.name)


class Spawner(ABC):
    """Creates and removes a behaviour's model on the server."""

    @abstractmethod
    def spawn(self, name: str, initial_pose: Pose) -> None:
        ...

    @abstractmethod
    def delete(self, name: str) -> None:
        ...

    def visual_keys(self, name: str) -> list[tuple[str, str, str]]:
        return []

    def initial_visual_state(self, key: tuple[str, str, str]) -> VisualState:
        return VisualState(*key)


class ModelSpawner(Spawner):
    """Spawns models from a model-XML document (text, file path, or parsed)."""

    def __init__(self, session: Session, source: str | ModelXmlDocument):
        self.session = session
        if isinstance(source, ModelXmlDocument):
            self.document = source
            self._xml = document_to_xml(source)
        else:
            self.document = load_model_xml(source)
            self._xml = source if source.lstrip().startswith("<") else document_to_xml(self.document)

    def spawn(self, name: str, initial_pose: Pose) -> None:
        self.session.spawn_model(name, self._xml, initial_pose)

    def delete(self, name: str) -> None:
        self.session.delete_model(name)

    def visual_keys(self, name: str) -> list[tuple[str, str, str]]:
        return [(name, link.name, visual.name) for link in self.document.links for visual in link.visuals]

    def initial_visual_state(self, key: tuple[str, str, str]) -> VisualState:
        _, link_name, visual_name = key
        for link in self.document.links:
            if link.name != link_name:
                continue
            for visual in link.visuals:
                if visual.name == visual_name:
                    return VisualState(*key, material=visual.material or Material())
        return VisualState(*key)


class _GetterTracker(Tracker):
    def __init__(self, fw: "Framework"):
        super().__init__("state_getter")
        self._fw = fw

    def update_tracker(self, sim_time_ns: int) -> None:
        self._fw._refresh_from_server()


class _FixedUpdateTracker(Tracker):
    def __init__(self, fw: "Framework"):
        super().__init__("behaviour_fixed_update")
        self._fw = fw

    def update_tracker(self, sim_time_ns: int) -> None:
        self._fw.behaviours.dispatch_fixed_update(self._fw._cycle_behaviours, sim_time_ns)


class _SetterTracker(Tracker):
    def __init__(self, fw: "Framework"):
        super().__init__("state_setter")
        self._fw = fw

    def update_tracker(self, sim_time_ns: int) -> None:
        self._fw._flush_to_server()


class Framework:
    """Wires a session to the tracker loop, behaviours, and effects.

    Drive it either synchronously against a paused server clock with
    :meth:`advance`, or from the server's clock topic with
    :meth:`attach_clock`.
    """

    def __init__(self, session: Session, step_ns: int = 1_000_000):
        self.session = session
        self.step_ns = step_ns
        self.lock = threading.RLock()
        self.trackers = TrackerManager()
        self.behaviours = BehaviourManager()
        self.effects = EffectManager(self, step_ns)
        self._transforms: dict[str, Transform] = {}
        self._link_mirrors: dict[tuple[str, str], _Mirror] = {}
        self._visual_mirrors: dict[tuple[str, str, str], _Mirror] = {}
        self._light_mirrors: dict[str, _Mirror] = {}
        self._cycle_behaviours: list[Behaviour] = []
        self._cycle_lock = threading.Lock()  # one update cycle at a time
        self._pump: ClockPump | None = None
        self.trackers.register(_GetterTracker(self), TrackerPriority.HIGH)
        self.trackers.register(_FixedUpdateTracker(self), TrackerPriority.NORMAL)
        self.trackers.register(self.effects, TrackerPriority.NORMAL)
        self.trackers.register(_SetterTracker(self), TrackerPriority.LOW)

    # -- driving the loop ------------------------------------------------------

    def tick(self, sim_time_ns: int) -> None:
        """Run one full update cycle for the given simulation time."""
        with self._cycle_lock:
            self._cycle_behaviours = self.behaviours.snapshot()
            self.trackers.run_tick(sim_time_ns)

    def advance(self, ticks: int) -> int:
        """Step a paused server clock tick by tick, running a cycle per tick."""
        sim_time = self.session.advance_clock(0) if ticks == 0 else 0
        for _ in range(ticks):
            sim_time = self.session.advance_clock(1)
            self.tick(sim_time)
        return sim_time

    def attach_clock(self) -> ClockPump:
        """Subscribe to the server clock topic and run cycles asynchronously."""
        if self._pump is None:
            self._pump = ClockPump(self.tick)
            self.session.on_topic("clock", lambda msg: self._pump.push(msg.body["sim_time_ns"]))
            self.session.subscribe("clock")
        return self._pump

    def close(self) -> None:
        if self._pump is not None:
            self._pump.stop()
            self._pump = None

    def dispatch_update(self, *args, **kwargs) -> None:
        self.behaviours.dispatch_update(None, *args, **kwargs)

    # -- behaviour lifecycle ----------------------------------------------------

    def register(self, behaviour: Behaviour) -> Behaviour:
        self.behaviours.register(behaviour)
        return behaviour

    def spawn_behaviour(self, behaviour: Behaviour, initial_pose: Pose | None = None) -> None:
        if behaviour.spawned:
            raise LifecycleError(f"behaviour {behaviour.name!r} already spawned")
        if behaviour.deleted:
            raise LifecycleError(f"behaviour {behaviour.name!r} was deleted")
        pose = initial_pose or Pose()
        behaviour.spawner.spawn(behaviour.name, pose)
        with self.lock:
            t = behaviour.transform
            t._lock = self.lock
            t._mirror.state = ModelState(behaviour.name, pose)
            t._alive = True
            behaviour.spawned = True
            self._transforms[behaviour.name] = t
            for key in behaviour.spawner.visual_keys(behaviour.name):
                self._visual_mirrors[key] = _Mirror(behaviour.spawner.initial_visual_state(key))

    def delete_behaviour(self, behaviour: Behaviour) -> None:
        if not behaviour.spawned or behaviour.deleted:
            raise LifecycleError(f"behaviour {behaviour.name!r} is not spawned")
        behaviour.spawner.delete(behaviour.name)
        with self.lock:
            behaviour.transform._alive = False
            behaviour.spawned = False
            behaviour.deleted = True
            self._transforms.pop(behaviour.name, None)
            for key in list(self._visual_mirrors):
                if key[0] == behaviour.name:
                    del self._visual_mirrors[key]
            for key in list(self._link_mirrors):
                if key[0] == behaviour.name:
                    del self._link_mirrors[key]
        self.behaviours.deregister(behaviour)

    # -- mirror access (effects, randomizers, tests) ----------------------------

    def transform(self, model_name: str) -> Transform | None:
        with self.lock:
            return self._transforms.get(model_name)

    def visual_keys(self, model_name: str, link_filter=None, visual_filter=None) -> list[tuple[str, str, str]]:
        with self.lock:
            keys = [k for k in self._visual_mirrors if k[0] == model_name]
        if link_filter is not None:
            keys = [k for k in keys if k[1] in link_filter]
        if visual_filter is not None:
            keys = [k for k in keys if k[2] in visual_filter]
        return keys

    def all_visual_keys(self) -> list[tuple[str, str, str]]:
        with self.lock:
            return list(self._visual_mirrors)

    def read_visual(self, key: tuple[str, str, str]) -> VisualState | None:
        with self.lock:
            mirror = self._visual_mirrors.get(key)
            return mirror.state if mirror else None

    def write_visual(self, key: tuple[str, str, str], *, material=None, transparency=None, visible=None) -> None:
        with self.lock:
            mirror = self._visual_mirrors.get(key)
            if mirror is None:
                raise KeyError(f"visual {key!r} is not tracked")
            changes = {}
            if material is not None:
                changes["material"] = material
            if transparency is not None:
                changes["transparency"] = transparency
            if visible is not None:
                changes["visible"] = visible
            if changes:
                mirror.state = replace(mirror.state, **changes)
                mirror.dirty.add("all")

    def track_link(self, key: tuple[str, str], initial=None) -> None:
        from .states import LinkState

        with self.lock:
            if key not in self._link_mirrors:
                self._link_mirrors[key] = _Mirror(initial or LinkState(*key))

    def write_light(self, state: LightState) -> None:
        with self.lock:
            mirror = self._light_mirrors.get(state.name)
            if mirror is None:
                self._light_mirrors[state.name] = mirror = _Mirror(state)
            else:
                mirror.state = state
            mirror.dirty.add("all")

    def read_light(self, name: str) -> LightState | None:
        with self.lock:
            mirror = self._light_mirrors.get(name)
            return mirror.state if mirror else None

    def track_light(self, state: LightState) -> None:
        with self.lock:
            if state.name not in self._light_mirrors:
                self._light_mirrors[state.name] = _Mirror(state)

    # -- tick phases -------------------------------------------------------------

    def _refresh_from_server(self) -> None:
        with self.lock:
            model_names = list(self._transforms)
            link_keys = list(self._link_mirrors)
            visual_keys = list(self._visual_mirrors)
            light_names = list(self._light_mirrors)
        try:
            got_models = self.session.get_model_states(model_names) if model_names else []
            got_links = self.session.get_link_states(link_keys) if link_keys else []
            got_visuals = self.session.get_visual_states(visual_keys) if visual_keys else []
            got_lights = self.session.get_light_states(light_names) if light_names else []
        except _TRANSPORT_ERRORS as exc:
            logger.warning("getter tick failed, caches marked stale: %s", exc)
            with self.lock:
                for t in self._transforms.values():
                    t._mirror.stale = True
                for m in (*self._link_mirrors.values(), *self._visual_mirrors.values(), *self._light_mirrors.values()):
                    m.stale = True
            return
        with self.lock:
            for name, got in zip(model_names, got_models):
                t = self._transforms.get(name)
                if t is None:
                    continue
                if got is None:
                    t._mirror.stale = True
                    logger.warning("model %r not found on server during refresh", name)
                    continue
                state = t._mirror.state
                if "pose" not in t._mirror.dirty:
                    state = replace(state, pose=got.pose)
                if "twist" not in t._mirror.dirty:
                    state = replace(state, twist=got.twist)
                t._mirror.state = replace(state, reference_frame=got.reference_frame)
                t._mirror.stale = False
            for key, got in zip(link_keys, got_links):
                self._merge_simple(self._link_mirrors.get(key), got)
            for key, got in zip(visual_keys, got_visuals):
                self._merge_simple(self._visual_mirrors.get(key), got)
            for name, got in zip(light_names, got_lights):
                self._merge_simple(self._light_mirrors.get(name), got)

    @staticmethod
    def _merge_simple(mirror: _Mirror | None, got) -> None:
        if mirror is None:
            return
        if got is None:
            mirror.stale = True
            return
        if not mirror.dirty:
            mirror.state = got
        mirror.stale = False

    def _flush_to_server(self) -> None:
        with self.lock:
            dirty_transforms = [(t._mirror, t._mirror.state) for t in self._transforms.values() if t._mirror.dirty]
            dirty_links = [(m, m.state) for m in self._link_mirrors.values() if m.dirty]
            dirty_visuals = [(m, m.state) for m in self._visual_mirrors.values() if m.dirty]
            dirty_lights = [(m, m.state) for m in self._light_mirrors.values() if m.dirty]
        self._flush_kind(dirty_transforms, self.session.set_model_states)
        self._flush_kind(dirty_links, self.session.set_link_states)
        self._flush_kind(dirty_visuals, self.session.set_visual_states)
        self._flush_kind(dirty_lights, self.session.set_light_states)

    def _flush_kind(self, captured, set_fn) -> None:
        if not captured:
            return
        try:
            statuses = set_fn([state for _, state in captured])
        except _TRANSPORT_ERRORS as exc:
            logger.warning("setter flush failed, dirty state retained: %s", exc)
            return
        with self.lock:
            for (mirror, state), status in zip(captured, statuses):
                if status == OK:
                    if mirror.state is state:
                        mirror.dirty.clear()
                else:
                    logger.warning("server rejected write for %r: %s",
                                   getattr(state, "name", getattr(state, "key", state)), status)
