import math
import threading

import pytest

from simsync.math3d import Pose, Quaternion, Twist, Vector3, euler_from_quat
from simsync.states import ModelState, model_state_to_wire
from simsync.world import ClockConfig, SpawnError, World

BOX = (
    '<model name="box"><link name="body"><visual name="shell">'
    '<geometry><box size="1 1 1"/></geometry></visual></link></model>'
)

TWO_LINK = """\
<model name="rig">
  <link name="base">
    <pose>0.0 0.0 0.5 0.0 0.0 0.0</pose>
    <visual name="plate"><geometry><box size="1 1 0.1"/></geometry></visual>
  </link>
  <link name="arm">
    <visual name="beam"><geometry><box size="0.1 0.1 1"/></geometry></visual>
  </link>
</model>
"""


def wire(name, x=0.0, y=0.0, z=0.0):
    return model_state_to_wire(ModelState(name, Pose(Vector3(x, y, z))))


@pytest.fixture
def world():
    w = World()
    w.spawn("a", BOX, Pose(Vector3(1, 0, 0)))
    w.spawn("b", BOX, Pose(Vector3(2, 0, 0)))
    return w


class TestBatchedModelOps:
    def test_get_preserves_request_order(self, world):
        out = world.get_model_states(["b", "a"])
        assert [d["name"] for d in out] == ["b", "a"]

    def test_get_empty(self, world):
        assert world.get_model_states([]) == []

    def test_get_unknown_is_null(self, world):
        out = world.get_model_states(["ghost"])
        assert out == [None]

    def test_set_both_ok_and_read_back(self, world):
        statuses = world.set_model_states([wire("a", 5), wire("b", 6)])
        assert statuses == ["OK", "OK"]
        out = world.get_model_states(["a", "b"])
        assert out[0]["pose"]["position"]["x"] == 5
        assert out[1]["pose"]["position"]["x"] == 6

    def test_set_mixed_not_found(self, world):
        assert world.set_model_states([wire("a"), wire("ghost")]) == ["OK", "NOT_FOUND"]

    def test_set_duplicate_last_wins(self, world):
        statuses = world.set_model_states([wire("a", 10), wire("a", 20)])
        assert statuses == ["OK", "OK"]
        assert world.get_model_state("a")["pose"]["position"]["x"] == 20

    def test_set_invalid_quaternion_isolated(self, world):
        bad = wire("a", 9)
        bad["pose"]["orientation"]["w"] = 2.0
        assert world.set_model_states([bad, wire("b", 7)]) == ["INVALID", "OK"]
        assert world.get_model_state("a")["pose"]["position"]["x"] == 1
        assert world.get_model_state("b")["pose"]["position"]["x"] == 7

    def test_single_ops(self, world):
        assert world.get_model_state("a")["name"] == "a"
        assert world.get_model_state("ghost") is None
        assert world.set_model_state(wire("a", 3)) == "OK"
        assert world.set_model_state(wire("ghost")) == "NOT_FOUND"
        bad = wire("a")
        bad["pose"]["orientation"]["x"] = 0.5
        assert world.set_model_state(bad) == "INVALID"

    def test_batched_equals_singles_on_quiescent_world(self, world):
        names = ["a", "ghost", "b", "a"]
        batched = world.get_model_states(names)
        singles = [world.get_model_state(n) for n in names]
        assert batched == singles


class TestLinkVisualLight:
    def test_spawn_registers_links_and_visuals(self):
        w = World()
        w.spawn("rig", TWO_LINK, Pose(Vector3(10, 0, 0)))
        links = w.get_link_states([
            {"model_name": "rig", "link_name": "base"},
            {"model_name": "rig", "link_name": "arm"},
        ])
        assert links[0]["pose"]["position"] == {"x": 10.0, "y": 0.0, "z": 0.5}
        assert links[1]["pose"]["position"] == {"x": 10.0, "y": 0.0, "z": 0.0}
        visuals = w.get_visual_states([
            {"model_name": "rig", "link_name": "base", "visual_name": "plate"},
        ])
        assert visuals[0]["visible"] is True

    def test_set_visual_visibility(self, world):
        key = {"model_name": "a", "link_name": "body", "visual_name": "shell"}
        current = world.get_visual_states([key])[0]
        entry = dict(current)
        entry["visible"] = False
        assert world.set_visual_states([entry]) == ["OK"]
        assert world.get_visual_states([key])[0]["visible"] is False

    def test_link_set_and_mixed_batch(self, world):
        got = world.get_link_states([{"model_name": "a", "link_name": "body"}])[0]
        entry = dict(got)
        entry["pose"] = {"position": {"x": 4.0, "y": 4.0, "z": 4.0},
                         "orientation": {"x": 0.0, "y": 0.0, "z": 0.0, "w": 1.0}}
        missing = dict(entry)
        missing["link_name"] = "nope"
        assert world.set_link_states([entry, missing]) == ["OK", "NOT_FOUND"]

    def test_lights(self):
        from simsync.states import LightState

        w = World()
        w.add_light(LightState("sun"))
        got = w.get_light_states(["sun", "moon"])
        assert got[0]["name"] == "sun" and got[1] is None
        entry = dict(got[0])
        entry["attenuation_linear"] = 0.5
        assert w.set_light_states([entry]) == ["OK"]
        assert w.get_light_states(["sun"])[0]["attenuation_linear"] == 0.5


class TestSpawnDelete:
    def test_spawn_then_get(self):
        w = World()
        w.spawn("crate", BOX, Pose(Vector3(1, 2, 3)))
        assert w.get_model_state("crate")["pose"]["position"] == {"x": 1.0, "y": 2.0, "z": 3.0}
        assert w.get_model_state("crate")["twist"]["linear"] == {"x": 0.0, "y": 0.0, "z": 0.0}

    def test_duplicate_name(self):
        w = World()
        w.spawn("crate", BOX, Pose())
        with pytest.raises(SpawnError) as err:
            w.spawn("crate", BOX, Pose())
        assert err.value.code == "DUPLICATE_NAME"

    def test_parse_error_leaves_world_unchanged(self):
        w = World()
        with pytest.raises(SpawnError) as err:
            w.spawn("crate", "<model", Pose())
        assert err.value.code == "PARSE_ERROR"
        assert w.model_names() == []

    def test_delete_removes_dependents(self):
        w = World()
        w.spawn("rig", TWO_LINK, Pose())
        w.spawn("other", BOX, Pose())
        assert w.delete("rig") is True
        assert w.get_model_states(["rig"]) == [None]
        assert w.get_link_states([{"model_name": "rig", "link_name": "base"}]) == [None]
        assert w.get_visual_states([
            {"model_name": "rig", "link_name": "base", "visual_name": "plate"}]) == [None]
        assert w.get_model_state("other") is not None

    def test_delete_twice(self):
        w = World()
        w.spawn("crate", BOX, Pose())
        assert w.delete("crate") is True
        assert w.delete("crate") is False


class TestClock:
    def test_linear_integration_closed_form(self):
        w = World()
        w.spawn("m", BOX, Pose())
        state = model_state_to_wire(ModelState("m", Pose(), Twist(linear=Vector3(1, 0, 0))))
        assert w.set_model_state(state) == "OK"
        w.tick(1000)  # 1 ms steps -> 1 s total
        pos = w.get_model_state("m")["pose"]["position"]
        assert pos["x"] == pytest.approx(1.0, abs=1e-9)
        assert w.sim_time_ns == 1_000_000_000

    def test_angular_integration(self):
        w = World()
        w.spawn("m", BOX, Pose())
        state = model_state_to_wire(ModelState("m", Pose(), Twist(angular=Vector3(0, 0, math.pi / 2))))
        w.set_model_state(state)
        w.tick(1000)
        q = w.get_model_state("m")["pose"]["orientation"]
        yaw = euler_from_quat(Quaternion(q["x"], q["y"], q["z"], q["w"])).yaw
        assert yaw == pytest.approx(math.pi / 2, abs=1e-9)

    def test_zero_twist_unchanged(self, world):
        before = dict(world.get_model_state("a")["pose"]["position"])
        world.tick(500)
        assert world.get_model_state("a")["pose"]["position"] == before

    def test_zero_ticks_noop(self, world):
        assert world.tick(0) == 0

    def test_clock_topic_count_and_monotonic(self):
        w = World(ClockConfig(publish_every=10))
        seen = []
        w.publish = lambda topic, body: seen.append((topic, body.get("sim_time_ns")))
        w.tick(25)
        clock_values = [t for topic, t in seen if topic == "clock"]
        assert len(clock_values) == 25
        assert clock_values == sorted(clock_values)
        assert all(b - a == w.clock.step_ns for a, b in zip(clock_values, clock_values[1:]))
        state_topics = [topic for topic, _ in seen if topic != "clock"]
        # publish_every = 10: state topics at ticks 10 and 20, three topics each
        assert len(state_topics) == 6

    def test_read_your_writes_and_atomicity(self, world):
        # hammer batched sets from one thread; readers must never observe a
        # half-applied batch (a and b always share the same x)
        stop = threading.Event()
        errors = []

        def writer():
            x = 0.0
            while not stop.is_set():
                x += 1.0
                world.set_model_states([wire("a", x), wire("b", x)])

        def reader():
            while not stop.is_set():
                got = world.get_model_states(["a", "b"])
                xa = got[0]["pose"]["position"]["x"]
                xb = got[1]["pose"]["position"]["x"]
                if xa != xb and not (xa == 1 and xb == 2):  # initial spawn poses
                    errors.append((xa, xb))

        threads = [threading.Thread(target=writer), threading.Thread(target=reader)]
        for t in threads:
            t.start()
        import time

        time.sleep(0.4)
        stop.set()
        for t in threads:
            t.join()
        assert errors == []

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ClockConfig(rate=-1)
        with pytest.raises(ValueError):
            ClockConfig(step_ns=0)
        with pytest.raises(ValueError):
            ClockConfig(publish_every=0)
