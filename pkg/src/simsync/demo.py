"""Runnable two-agent demo area: spawn two box agents, drive them with
discrete velocity commands, observe positions.

``python -m simsync.demo`` starts an in-process paused server and runs a
100-step random-action episode. With a fixed seed the full step-result
sequence is reproducible bit for bit.
"""

from __future__ import annotations

import json
import random

from .client import Session
from .envs import AbstractAgent, AreaInterface, Box, Discrete, Environment
from .framework import Behaviour, Framework, ModelSpawner
from .math3d import Pose, Twist, Vector3
from .server import WorldServer
from .world import ClockConfig, World

AGENT_XML = """\
<model name="nav_agent">
  <link name="body">
    <visual name="shell">
      <geometry><box size="0.4 0.4 0.2"/></geometry>
      <material><diffuse>0.2 0.4 0.8 1.0</diffuse></material>
    </visual>
  </link>
</model>
"""

# action 0 stops; 1..4 drive +x, -x, +y, -y at 1 m/s
_ACTION_TWISTS = (
    Twist(),
    Twist(linear=Vector3(1.0, 0.0, 0.0)),
    Twist(linear=Vector3(-1.0, 0.0, 0.0)),
    Twist(linear=Vector3(0.0, 1.0, 0.0)),
    Twist(linear=Vector3(0.0, -1.0, 0.0)),
)


class NavAgent(AbstractAgent):
    def __init__(self, behaviour: Behaviour):
        self._behaviour = behaviour

    @property
    def name(self) -> str:
        return self._behaviour.name

    def get_next_state(self):
        p = self._behaviour.transform.pose.position
        return (p.x, p.y, p.z)

    def on_action_received(self, action) -> None:
        if action is None:
            return
        self._behaviour.transform.set_twist(_ACTION_TWISTS[action])

    def get_reward(self) -> float:
        p = self._behaviour.transform.pose.position
        return -(p.x * p.x + p.y * p.y) ** 0.5

    def is_done(self) -> bool:
        return False


class TwoAgentArea(AreaInterface):
    START_POSES = {
        "agent0": Pose(Vector3(1.0, 0.0, 0.1)),
        "agent1": Pose(Vector3(-1.0, 0.0, 0.1)),
    }

    def __init__(self, fw: Framework):
        self._fw = fw
        self._agents = []
        for name, pose in self.START_POSES.items():
            behaviour = Behaviour(name, "nav", ModelSpawner(fw.session, AGENT_XML))
            fw.register(behaviour)
            fw.spawn_behaviour(behaviour, pose)
            self._agents.append(NavAgent(behaviour))

    def get_agents(self):
        return self._agents

    def get_info(self) -> dict:
        return {"sim_time_ns": self._fw.session.advance_clock(0)}

    def reset(self) -> None:
        for agent in self._agents:
            behaviour = agent._behaviour
            behaviour.transform.set_pose(self.START_POSES[behaviour.name])
            behaviour.transform.set_twist(Twist())
        self._fw.advance(1)

    def observation_space(self) -> dict:
        return {a.name: Box(-1000.0, 1000.0, 3) for a in self._agents}

    def action_space(self) -> dict:
        return {a.name: Discrete(len(_ACTION_TWISTS)) for a in self._agents}


def build_demo(address, ticks_per_step: int = 10) -> tuple[Environment, Framework, Session]:
    session = Session(address)
    fw = Framework(session)
    area = TwoAgentArea(fw)
    env = Environment(area, loop=fw, ticks_per_step=ticks_per_step)
    return env, fw, session


def run_episode(env: Environment, steps: int = 100, seed: int = 7) -> list[dict]:
    """Random-action episode; returns one JSON-friendly record per step."""
    rng = random.Random(seed)
    trace = []
    env.reset()
    for _ in range(steps):
        actions = {name: space.sample(rng) for name, space in env.action_space.items()}
        state, reward, done, action, info = env.step(actions)
        trace.append({"state": state, "reward": reward, "done": done, "action": action, "info": info})
    return trace


def main() -> int:
    server = WorldServer(World(ClockConfig(rate=0.0)), port=0).start()
    try:
        env, fw, session = build_demo(server.address)
        trace = run_episode(env)
        last = trace[-1]
        print(f"ran {len(trace)} steps")
        for name, obs in last["state"].items():
            print(f"  {name}: pos=({obs[0]:.3f}, {obs[1]:.3f}, {obs[2]:.3f}) reward={last['reward'][name]:.3f}")
        print(f"trace digest: {hash(json.dumps(trace, sort_keys=True)) & 0xFFFFFFFF:08x}")
        session.close()
    finally:
        server.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
