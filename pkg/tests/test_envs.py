import random

import pytest

from simsync.envs import (
    AbstractAgent,
    AreaInterface,
    Box,
    Discrete,
    Environment,
    EpisodeDoneError,
    InvalidActionError,
    ResetRequiredError,
    StepResult,
    UnknownAgentError,
)


class ScriptedAgent(AbstractAgent):
    def __init__(self, name, done_after=None):
        self._name = name
        self.received = []
        self.steps = 0
        self.done_after = done_after

    @property
    def name(self):
        return self._name

    def get_next_state(self):
        return (self.steps, self._name)

    def on_action_received(self, action):
        self.received.append(action)
        self.steps += 1

    def get_reward(self):
        return float(self.steps)

    def is_done(self):
        return self.done_after is not None and self.steps >= self.done_after


class ScriptedArea(AreaInterface):
    def __init__(self, done_after=None):
        self.agents = [ScriptedAgent("agent0", done_after), ScriptedAgent("agent1", done_after)]
        self.resets = 0

    def get_agents(self):
        return self.agents

    def get_info(self):
        return {"resets": self.resets}

    def reset(self):
        self.resets += 1
        for agent in self.agents:
            agent.steps = 0
            agent.received.clear()

    def observation_space(self):
        return {a.name: Box(low=-100.0, high=100.0, shape=2) for a in self.agents}

    def action_space(self):
        return {a.name: Discrete(3) for a in self.agents}


class TestSpaces:
    def test_discrete_sample_bounds(self):
        space = Discrete(4)
        rng = random.Random(1)
        draws = {space.sample(rng) for _ in range(1000)}
        assert draws == {0, 1, 2, 3}

    def test_discrete_contains(self):
        space = Discrete(3)
        assert space.contains(0) and space.contains(2)
        assert not space.contains(3) and not space.contains(-1)
        assert not space.contains(True) and not space.contains(1.0)

    def test_box_sample_bounds(self):
        space = Box(low=(-1.0, 0.0), high=(1.0, 5.0))
        rng = random.Random(2)
        for _ in range(1000):
            sample = space.sample(rng)
            assert space.contains(sample)
            assert -1 <= sample[0] <= 1 and 0 <= sample[1] <= 5

    def test_box_validation(self):
        with pytest.raises(ValueError):
            Box(low=1.0, high=0.0)
        with pytest.raises(ValueError):
            Box(low=(0, 0), high=(1,))

    def test_space_maps_keyed_to_agents(self):
        env = Environment(ScriptedArea())
        assert set(env.observation_space) == {"agent0", "agent1"}
        assert set(env.action_space) == {"agent0", "agent1"}

    def test_mismatched_space_keys_rejected(self):
        class BadArea(ScriptedArea):
            def action_space(self):
                return {"someone_else": Discrete(2)}

        with pytest.raises(ValueError):
            Environment(BadArea())


class TestResetStep:
    def test_reset_returns_observations(self):
        env = Environment(ScriptedArea())
        obs = env.reset()
        assert set(obs) == {"agent0", "agent1"}
        assert obs["agent0"] == (0, "agent0")

    def test_step_five_tuple_shape(self):
        env = Environment(ScriptedArea())
        env.reset()
        result = env.step({"agent0": 1, "agent1": 2})
        state, reward, done, action, info = result
        assert isinstance(result, StepResult)
        for mapping in (state, reward, done, action):
            assert set(mapping) == {"agent0", "agent1"}
        assert action == {"agent0": 1, "agent1": 2}
        assert info == {"resets": 1}

    def test_step_before_reset_rejected(self):
        env = Environment(ScriptedArea())
        with pytest.raises(ResetRequiredError):
            env.step({})

    def test_unknown_agent_rejected_before_side_effects(self):
        area = ScriptedArea()
        env = Environment(area)
        env.reset()
        with pytest.raises(UnknownAgentError):
            env.step({"ghost": 1})
        assert area.agents[0].received == []

    def test_invalid_action_rejected_before_side_effects(self):
        area = ScriptedArea()
        env = Environment(area)
        env.reset()
        with pytest.raises(InvalidActionError):
            env.step({"agent0": 5})
        with pytest.raises(InvalidActionError):
            env.step({"agent0": 0, "agent1": -1})
        assert area.agents[0].received == []

    def test_missing_agent_gets_noop_none(self):
        area = ScriptedArea()
        env = Environment(area)
        env.reset()
        result = env.step({"agent0": 2})
        assert result.action == {"agent0": 2, "agent1": None}
        assert area.agents[1].received == [None]

    def test_step_after_all_done_rejects(self):
        env = Environment(ScriptedArea(done_after=1))
        env.reset()
        result = env.step({"agent0": 0, "agent1": 0})
        assert all(result.done.values())
        with pytest.raises(EpisodeDoneError):
            env.step({"agent0": 0})
        env.reset()
        env.step({"agent0": 0})  # fresh episode works again

    def test_reset_twice_ok(self):
        env = Environment(ScriptedArea())
        env.reset()
        env.reset()

    def test_100_step_loop_wellformed(self):
        env = Environment(ScriptedArea())
        rng = random.Random(3)
        env.reset()
        for _ in range(100):
            actions = {name: space.sample(rng) for name, space in env.action_space.items()}
            state, reward, done, action, info = env.step(actions)
            assert set(state) == set(reward) == set(done) == set(action) == {"agent0", "agent1"}


class RecordingLoop:
    def __init__(self):
        self.updates = 0
        self.ticks = 0

    def dispatch_update(self):
        self.updates += 1

    def advance(self, n):
        self.ticks += n


class TestLoopBridge:
    def test_update_once_and_ticks_per_step(self):
        loop = RecordingLoop()
        env = Environment(ScriptedArea(), loop=loop, ticks_per_step=10)
        env.reset()
        for _ in range(7):
            env.step({})
        assert loop.updates == 7
        assert loop.ticks == 70
