"""Tick-driven visual effects and their manager.

Attached effects are advanced once per simulation tick by the effect manager
(a NORMAL-priority tracker registered after the behaviour dispatcher).
Durations are measured in simulation time; an effect whose elapsed time
reaches its duration detaches itself at the end of that manager update, and
detaching always restores the visibility captured at attach time.

Writes go through the framework's visual mirrors, so they reach the server
with the regular end-of-cycle batched flush. Custom effects subclass
:class:`Effect` and implement the three hooks.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod

logger = logging.getLogger(__name__)


class EffectError(RuntimeError):
    pass


class Effect(ABC):
    """Base class for visual effects targeting one behaviour's visuals."""

    def __init__(self, behaviour_name: str, duration_s: float = math.inf,
                 link_filter=None, visual_filter=None):
        if not duration_s > 0:
            raise ValueError("duration must be positive (math.inf for unlimited)")
        self.behaviour_name = behaviour_name
        self.duration_s = duration_s
        self.link_filter = link_filter
        self.visual_filter = visual_filter
        self.attached = False
        self._keys: list[tuple[str, str, str]] = []
        self._saved_visibility: dict[tuple[str, str, str], bool] = {}
        self._ticks = 0
        self._duration_ticks: int | None = None

    # -- hooks ------------------------------------------------------------------

    @abstractmethod
    def on_attach(self, fw) -> None:
        ...

    @abstractmethod
    def on_update(self, fw, sim_time_ns: int) -> None:
        ...

    def on_detach(self, fw) -> None:
        for key, visible in self._saved_visibility.items():
            try:
                fw.write_visual(key, visible=visible)
            except KeyError:
                pass

    # -- shared plumbing ----------------------------------------------------------

    def _bind(self, fw, step_ns: int) -> None:
        self._ticks = 0
        if math.isfinite(self.duration_s):
            self._duration_ticks = max(1, math.ceil(self.duration_s * 1e9 / step_ns))
        else:
            self._duration_ticks = None
        self._keys = fw.visual_keys(self.behaviour_name, self.link_filter, self.visual_filter)
        if not self._keys:
            logger.warning("effect on %r matches no visuals", self.behaviour_name)
        self._saved_visibility = {}
        for key in self._keys:
            state = fw.read_visual(key)
            if state is not None:
                self._saved_visibility[key] = state.visible

    @property
    def expired(self) -> bool:
        return self._duration_ticks is not None and self._ticks >= self._duration_ticks

    def _set_visibility(self, fw, visible: bool) -> None:
        for key in self._keys:
            try:
                fw.write_visual(key, visible=visible)
            except KeyError:
                pass


class BlinkEffect(Effect):
    """Toggles visibility every half interval, starting visible."""

    def __init__(self, behaviour_name: str, interval_s: float, duration_s: float = math.inf,
                 link_filter=None, visual_filter=None):
        super().__init__(behaviour_name, duration_s, link_filter, visual_filter)
        if not interval_s > 0:
            raise ValueError("interval must be positive")
        self.interval_s = interval_s
        self._half_period_ticks = 1
        self._visible = True

    def on_attach(self, fw) -> None:
        self._half_period_ticks = max(1, math.floor(self.interval_s / 2 * 1e9 / fw.step_ns))
        self._visible = True
        self._set_visibility(fw, True)

    def on_update(self, fw, sim_time_ns: int) -> None:
        self._ticks += 1
        if self._ticks % self._half_period_ticks == 0:
            self._visible = not self._visible
            self._set_visibility(fw, self._visible)


class InvisibleEffect(Effect):
    """Holds the target's visuals hidden until detached."""

    def on_attach(self, fw) -> None:
        self._set_visibility(fw, False)

    def on_update(self, fw, sim_time_ns: int) -> None:
        self._ticks += 1
        for key in self._keys:
            state = fw.read_visual(key)
            if state is not None and state.visible:
                fw.write_visual(key, visible=False)


class EffectManager:
    """Tracker advancing all attached effects once per tick."""

    name = "effect_manager"

    def __init__(self, fw, step_ns: int):
        self._fw = fw
        self._step_ns = step_ns
        self._effects: list[Effect] = []

    def attach(self, effect: Effect) -> None:
        if effect.attached:
            raise EffectError("effect already attached")
        effect._bind(self._fw, self._step_ns)
        effect.on_attach(self._fw)
        effect.attached = True
        self._effects.append(effect)

    def detach(self, effect: Effect) -> None:
        if not effect.attached:
            raise EffectError("effect not attached")
        self._effects.remove(effect)
        effect.attached = False
        effect.on_detach(self._fw)

    def attached_effects(self) -> list[Effect]:
        return list(self._effects)

    def update_tracker(self, sim_time_ns: int) -> None:
        expired = []
        for effect in list(self._effects):
            try:
                effect.on_update(self._fw, sim_time_ns)
            except Exception:
                logger.exception("effect on %r failed", effect.behaviour_name)
                continue
            if effect.expired:
                expired.append(effect)
        for effect in expired:
            try:
                self.detach(effect)
            except EffectError:
                pass
