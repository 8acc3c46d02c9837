"""Lightweight behaviour-tree library.

Trees are built from three node classes: leaves (no children), decorators
(exactly one child), and composites (one or more children). Every tick of a
node returns one of four statuses; an execution is the span of ticks from a
node's fresh state until it returns SUCCESS or FAILURE, at which point its
per-execution state (counters, latches, shuffle order) clears.

Semantics chosen where multiple conventions exist:
  - Selector/Sequence are memoryless: a RUNNING result stops the tick and the
    next tick restarts from the first child.
  - Limit returns FAILURE once its cap is reached (completing the execution).
  - Repeater counts FAILURE completions toward its total and returns RUNNING
    between repetitions.
  - Succeeder passes RUNNING through; only SUCCESS/FAILURE collapse to
    SUCCESS.
  - INVALID marks a structural violation found at tick time (for example a
    decorator with no child); built-in nodes never remap a child's INVALID.

This module depends only on the standard library and can be used on its own.
"""

from __future__ import annotations

import random
from enum import Enum

__all__ = [
    "Status",
    "Node",
    "Leaf",
    "Success",
    "Failure",
    "Running",
    "Decorator",
    "Condition",
    "Limit",
    "Repeater",
    "Inverter",
    "Succeeder",
    "UntilFail",
    "RunningIsFailure",
    "RunningIsSuccess",
    "FailureIsSuccess",
    "FailureIsRunning",
    "SuccessIsRunning",
    "SuccessIsFailure",
    "Composite",
    "Selector",
    "Sequence",
    "ParallelSelector",
    "ParallelSequence",
    "RandomSelector",
    "RandomSequence",
    "build",
]


class Status(Enum):
    SUCCESS = "SUCCESS"
    FAILURE = "FAILURE"
    RUNNING = "RUNNING"
    INVALID = "INVALID"


_DONE = (Status.SUCCESS, Status.FAILURE)


class Node:
    """Base behaviour-tree node. Subclass and override :meth:`tick`."""

    def tick(self) -> Status:
        raise NotImplementedError

    def reset(self) -> None:
        """Clear per-execution state recursively; the next tick starts fresh."""


class Leaf(Node):
    """Node without children; typically an action or a status check."""


class Success(Leaf):
    def tick(self) -> Status:
        return Status.SUCCESS


class Failure(Leaf):
    def tick(self) -> Status:
        return Status.FAILURE


class Running(Leaf):
    def tick(self) -> Status:
        return Status.RUNNING


class Decorator(Node):
    """Node with exactly one child. A missing child ticks as INVALID."""

    def __init__(self, child: Node | None = None):
        if child is not None and not isinstance(child, Node):
            raise TypeError("decorator child must be a Node")
        self.child = child

    def tick(self) -> Status:
        if not isinstance(self.child, Node):
            return Status.INVALID
        return self._decorate()

    def _decorate(self) -> Status:
        raise NotImplementedError

    def reset(self) -> None:
        self._reset_self()
        if isinstance(self.child, Node):
            self.child.reset()

    def _reset_self(self) -> None:
        pass


class Condition(Decorator):
    """SUCCESS when the child returns the target status, else FAILURE."""

    def __init__(self, target: Status, child: Node | None = None):
        super().__init__(child)
        if not isinstance(target, Status) or target is Status.INVALID:
            raise ValueError("target must be SUCCESS, FAILURE, or RUNNING")
        self.target = target

    def _decorate(self) -> Status:
        status = self.child.tick()
        if status is Status.INVALID:
            return status
        return Status.SUCCESS if status is self.target else Status.FAILURE


class Limit(Decorator):
    """Allows the child at most ``max_ticks`` ticks per execution.

    While under the cap the child's own status is returned; reaching the cap
    returns FAILURE without ticking the child. Either completion resets the
    counter.
    """

    def __init__(self, max_ticks: int, child: Node | None = None):
        super().__init__(child)
        if max_ticks < 1:
            raise ValueError("max_ticks must be >= 1")
        self.max_ticks = max_ticks
        self._count = 0

    def _decorate(self) -> Status:
        if self._count >= self.max_ticks:
            self._count = 0
            return Status.FAILURE
        status = self.child.tick()
        self._count += 1
        if status in _DONE:
            self._count = 0
        return status

    def _reset_self(self) -> None:
        self._count = 0


class Repeater(Decorator):
    """Runs the child to completion ``count`` times, then returns SUCCESS.

    FAILURE completions count too; RUNNING passes through between ticks.
    """

    def __init__(self, count: int, child: Node | None = None):
        super().__init__(child)
        if count < 1:
            raise ValueError("count must be >= 1")
        self.count = count
        self._completed = 0

    def _decorate(self) -> Status:
        status = self.child.tick()
        if status is Status.INVALID:
            return status
        if status in _DONE:
            self._completed += 1
            if self._completed >= self.count:
                self._completed = 0
                return Status.SUCCESS
        return Status.RUNNING

    def _reset_self(self) -> None:
        self._completed = 0


class Inverter(Decorator):
    def _decorate(self) -> Status:
        status = self.child.tick()
        if status is Status.SUCCESS:
            return Status.FAILURE
        if status is Status.FAILURE:
            return Status.SUCCESS
        return status


class Succeeder(Decorator):
    def _decorate(self) -> Status:
        status = self.child.tick()
        if status in _DONE:
            return Status.SUCCESS
        return status


class UntilFail(Decorator):
    """RUNNING until the child returns FAILURE, then SUCCESS."""

    def _decorate(self) -> Status:
        status = self.child.tick()
        if status is Status.FAILURE:
            return Status.SUCCESS
        if status is Status.INVALID:
            return status
        return Status.RUNNING


class _StatusRemap(Decorator):
    SOURCE: Status
    TARGET: Status

    def _decorate(self) -> Status:
        status = self.child.tick()
        return self.TARGET if status is self.SOURCE else status


class RunningIsFailure(_StatusRemap):
    SOURCE, TARGET = Status.RUNNING, Status.FAILURE


class RunningIsSuccess(_StatusRemap):
    SOURCE, TARGET = Status.RUNNING, Status.SUCCESS


class FailureIsSuccess(_StatusRemap):
    SOURCE, TARGET = Status.FAILURE, Status.SUCCESS


class FailureIsRunning(_StatusRemap):
    SOURCE, TARGET = Status.FAILURE, Status.RUNNING


class SuccessIsRunning(_StatusRemap):
    SOURCE, TARGET = Status.SUCCESS, Status.RUNNING


class SuccessIsFailure(_StatusRemap):
    SOURCE, TARGET = Status.SUCCESS, Status.FAILURE


class Composite(Node):
    """Node with one or more children."""

    def __init__(self, *children: Node):
        if not children:
            raise ValueError("composite requires at least one child")
        for child in children:
            if not isinstance(child, Node):
                raise TypeError("composite children must be Nodes")
        self.children = list(children)

    def tick(self) -> Status:
        if not self.children or any(not isinstance(c, Node) for c in self.children):
            return Status.INVALID
        return self._tick_children(self.children)

    def _tick_children(self, children: list[Node]) -> Status:
        raise NotImplementedError

    def reset(self) -> None:
        self._reset_self()
        for child in self.children:
            child.reset()

    def _reset_self(self) -> None:
        pass


def _selector_pass(children: list[Node]) -> Status:
    for child in children:
        status = child.tick()
        if status is not Status.FAILURE:
            return status
    return Status.FAILURE


def _sequence_pass(children: list[Node]) -> Status:
    for child in children:
        status = child.tick()
        if status is not Status.SUCCESS:
            return status
    return Status.SUCCESS


class Selector(Composite):
    """First child SUCCESS wins; all FAILURE fails; RUNNING stops the tick."""

    def _tick_children(self, children: list[Node]) -> Status:
        return _selector_pass(children)


class Sequence(Composite):
    """All children must SUCCEED; first FAILURE fails; RUNNING stops the tick."""

    def _tick_children(self, children: list[Node]) -> Status:
        return _sequence_pass(children)


class _Parallel(Composite):
    """Advances every not-yet-completed child once per tick (child order);
    completed children latch their status for the rest of the execution."""

    def __init__(self, *children: Node):
        super().__init__(*children)
        self._latched: dict[int, Status] = {}

    def _tick_children(self, children: list[Node]) -> Status:
        latched = self._latched
        for i, child in enumerate(children):
            if i in latched:
                continue
            status = child.tick()
            if status is Status.INVALID:
                return status
            if status in _DONE:
                latched[i] = status
        result = self._evaluate(len(children))
        if result in _DONE:
            latched.clear()
        return result

    def _evaluate(self, n: int) -> Status:
        raise NotImplementedError

    def _reset_self(self) -> None:
        self._latched.clear()


class ParallelSequence(_Parallel):
    """FAILURE as soon as any child fails; SUCCESS when all succeed."""

    def _evaluate(self, n: int) -> Status:
        statuses = self._latched.values()
        if any(s is Status.FAILURE for s in statuses):
            return Status.FAILURE
        if len(self._latched) == n:
            return Status.SUCCESS
        return Status.RUNNING


class ParallelSelector(_Parallel):
    """SUCCESS as soon as any child succeeds; FAILURE when all fail."""

    def _evaluate(self, n: int) -> Status:
        statuses = self._latched.values()
        if any(s is Status.SUCCESS for s in statuses):
            return Status.SUCCESS
        if len(self._latched) == n:
            return Status.FAILURE
        return Status.RUNNING


_NODE_KINDS: dict[str, type] = {}


def build(spec) -> Node:
    """Build a tree from a JSON-style description (dict, or JSON text).

    Each node is {"kind": <name>, ...params, "children": [...]}; decorators
    take exactly one child entry. Kinds are the snake_case class names, e.g.

        {"kind": "selector", "children": [
            {"kind": "condition", "target": "RUNNING",
             "children": [{"kind": "running"}]},
            {"kind": "limit", "max_ticks": 2,
             "children": [{"kind": "failure"}]}]}

    Random composites accept an integer "seed". This format exists for test
    fixtures; trees are normally built in code.
    """
    if isinstance(spec, str):
        import json

        spec = json.loads(spec)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("node spec must be an object with a 'kind'")
    kind = spec["kind"]
    cls = _NODE_KINDS.get(kind)
    if cls is None:
        raise ValueError(f"unknown node kind {kind!r}")
    children = [build(child) for child in spec.get("children", [])]
    if issubclass(cls, Decorator):
        if len(children) != 1:
            raise ValueError(f"{kind} takes exactly one child")
        if cls is Condition:
            return Condition(Status(spec["target"]), children[0])
        if cls is Limit:
            return Limit(int(spec["max_ticks"]), children[0])
        if cls is Repeater:
            return Repeater(int(spec["count"]), children[0])
        return cls(children[0])
    if issubclass(cls, Composite):
        if issubclass(cls, _RandomComposite):
            return cls(*children, rng=spec.get("seed"))
        return cls(*children)
    if children:
        raise ValueError(f"{kind} takes no children")
    return cls()


class _RandomComposite(Composite):
    """Selector/sequence over a permutation drawn at each execution start and
    held while the execution is RUNNING."""

    def __init__(self, *children: Node, rng: random.Random | int | None = None):
        super().__init__(*children)
        if isinstance(rng, random.Random):
            self.rng = rng
        else:
            self.rng = random.Random(rng)
        self._order: list[int] | None = None

    def _tick_children(self, children: list[Node]) -> Status:
        if self._order is None or len(self._order) != len(children):
            self._order = list(range(len(children)))
            self.rng.shuffle(self._order)
        status = self._pass([children[i] for i in self._order])
        if status in _DONE:
            self._order = None
        return status

    def _pass(self, ordered: list[Node]) -> Status:
        raise NotImplementedError

    def _reset_self(self) -> None:
        self._order = None


class RandomSelector(_RandomComposite):
    def _pass(self, ordered: list[Node]) -> Status:
        return _selector_pass(ordered)


class RandomSequence(_RandomComposite):
    def _pass(self, ordered: list[Node]) -> Status:
        return _sequence_pass(ordered)


_NODE_KINDS.update({
    "success": Success,
    "failure": Failure,
    "running": Running,
    "condition": Condition,
    "limit": Limit,
    "repeater": Repeater,
    "inverter": Inverter,
    "succeeder": Succeeder,
    "until_fail": UntilFail,
    "running_is_failure": RunningIsFailure,
    "running_is_success": RunningIsSuccess,
    "failure_is_success": FailureIsSuccess,
    "failure_is_running": FailureIsRunning,
    "success_is_running": SuccessIsRunning,
    "success_is_failure": SuccessIsFailure,
    "selector": Selector,
    "sequence": Sequence,
    "parallel_selector": ParallelSelector,
    "parallel_sequence": ParallelSequence,
    "random_selector": RandomSelector,
    "random_sequence": RandomSequence,
})
