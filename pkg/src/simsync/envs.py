"""Agent/area interfaces and the environment wrapper exposing reset/step.

An area describes one scene: its agents, scene-level info, spaces, and how
to reset it. The environment wraps an area and drives the sync framework:
each step delivers actions, dispatches behaviour ``update`` hooks once, then
advances the simulation clock ``ticks_per_step`` ticks so trackers and
``fixed_update`` hooks run.

step() returns a five-field result (state, reward, done, action, info) that
also unpacks as a tuple; the first four are keyed by agent name. Agents
missing from the submitted action map receive None, the documented no-op
action, which is echoed in the result.
"""

from __future__ import annotations

import random
from abc import ABC, abstractmethod
from dataclasses import dataclass

__all__ = [
    "AbstractAgent",
    "AreaInterface",
    "Discrete",
    "Box",
    "StepResult",
    "Environment",
    "UnknownAgentError",
    "InvalidActionError",
    "EpisodeDoneError",
    "ResetRequiredError",
]

_module_rng = random.Random()


class UnknownAgentError(KeyError):
    pass


class InvalidActionError(ValueError):
    pass


class EpisodeDoneError(RuntimeError):
    """All agents are done; call reset() before stepping again."""


class ResetRequiredError(RuntimeError):
    pass


class AbstractAgent(ABC):
    """One controllable entity in an area."""

    @property
    @abstractmethod
    def name(self) -> str:
        ...

    @abstractmethod
    def get_next_state(self):
        """Current observation for this agent."""

    @abstractmethod
    def on_action_received(self, action) -> None:
        """Act on a received action; None is the no-op action."""

    @abstractmethod
    def get_reward(self) -> float:
        ...

    @abstractmethod
    def is_done(self) -> bool:
        ...


class AreaInterface(ABC):
    """Scene-level contract wrapped by :class:`Environment`."""

    @abstractmethod
    def get_agents(self) -> list[AbstractAgent]:
        ...

    @abstractmethod
    def get_info(self) -> dict:
        ...

    @abstractmethod
    def reset(self) -> None:
        ...

    @abstractmethod
    def observation_space(self) -> dict:
        ...

    @abstractmethod
    def action_space(self) -> dict:
        ...


class Discrete:
    """Integer actions 0..n-1."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n

    def sample(self, rng: random.Random | None = None) -> int:
        return (rng or _module_rng).randrange(self.n)

    def contains(self, value) -> bool:
        return isinstance(value, int) and not isinstance(value, bool) and 0 <= value < self.n

    def __repr__(self):
        return f"Discrete({self.n})"


class Box:
    """Flat box of floats with elementwise closed bounds."""

    def __init__(self, low, high, shape: int | None = None):
        if shape is None:
            if isinstance(low, (int, float)):
                shape = 1
            else:
                shape = len(low)
        self.shape = shape
        self.low = tuple([float(low)] * shape) if isinstance(low, (int, float)) else tuple(float(v) for v in low)
        self.high = tuple([float(high)] * shape) if isinstance(high, (int, float)) else tuple(float(v) for v in high)
        if len(self.low) != shape or len(self.high) != shape:
            raise ValueError("low/high lengths must match shape")
        if any(lo > hi for lo, hi in zip(self.low, self.high)):
            raise ValueError("low must be <= high elementwise")

    def sample(self, rng: random.Random | None = None) -> tuple[float, ...]:
        r = rng or _module_rng
        return tuple(r.uniform(lo, hi) for lo, hi in zip(self.low, self.high))

    def contains(self, value) -> bool:
        if not isinstance(value, (tuple, list)) or len(value) != self.shape:
            return False
        return all(
            isinstance(v, (int, float)) and not isinstance(v, bool) and lo <= v <= hi
            for v, lo, hi in zip(value, self.low, self.high)
        )

    def __repr__(self):
        return f"Box(low={self.low}, high={self.high})"


@dataclass
class StepResult:
    state: dict
    reward: dict
    done: dict
    action: dict
    info: dict

    def __iter__(self):
        return iter((self.state, self.reward, self.done, self.action, self.info))


class Environment:
    """reset/step wrapper over an area.

    ``loop`` is the sync framework driving the simulation (anything with
    ``dispatch_update()`` and ``advance(ticks)``); pass None for pure-logic
    areas that do not talk to a world server.
    """

    def __init__(self, area: AreaInterface, loop=None, ticks_per_step: int = 10):
        if ticks_per_step < 0:
            raise ValueError("ticks_per_step must be >= 0")
        self.area = area
        self.loop = loop
        self.ticks_per_step = ticks_per_step
        self._has_reset = False
        self._episode_done = False
        self._check_spaces()

    def _agents(self) -> list[AbstractAgent]:
        return list(self.area.get_agents())

    def _check_spaces(self) -> None:
        names = {a.name for a in self._agents()}
        for label, space_map in (("observation", self.area.observation_space()),
                                 ("action", self.area.action_space())):
            if set(space_map) != names:
                raise ValueError(f"{label} space keys {set(space_map)} do not match agents {names}")

    @property
    def observation_space(self) -> dict:
        return self.area.observation_space()

    @property
    def action_space(self) -> dict:
        return self.area.action_space()

    def reset(self) -> dict:
        self.area.reset()
        self._has_reset = True
        self._episode_done = False
        return {a.name: a.get_next_state() for a in self._agents()}

    def step(self, actions: dict) -> StepResult:
        if not self._has_reset:
            raise ResetRequiredError("call reset() before step()")
        if self._episode_done:
            raise EpisodeDoneError("episode finished; call reset() to start a new one")
        agents = self._agents()
        names = [a.name for a in agents]
        unknown = set(actions) - set(names)
        if unknown:
            raise UnknownAgentError(f"unknown agent keys: {sorted(unknown)}")
        spaces = self.area.action_space()
        applied = {}
        for name in names:
            action = actions.get(name)
            if action is not None and not spaces[name].contains(action):
                raise InvalidActionError(f"action {action!r} outside {spaces[name]!r} for {name!r}")
            applied[name] = action

        for agent in agents:
            agent.on_action_received(applied[agent.name])
        if self.loop is not None:
            self.loop.dispatch_update()
            if self.ticks_per_step:
                self.loop.advance(self.ticks_per_step)

        state = {a.name: a.get_next_state() for a in agents}
        reward = {a.name: a.get_reward() for a in agents}
        done = {a.name: a.is_done() for a in agents}
        if all(done.values()):
            self._episode_done = True
        return StepResult(state, reward, done, applied, self.area.get_info())
