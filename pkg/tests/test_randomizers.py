import json
import random
import statistics

import pytest

from simsync.client import Session
from simsync.framework import Behaviour, Framework, ModelSpawner
from simsync.math3d import Color, Pose
from simsync.randomizers import (
    LightRandomizer,
    LightRandomizerConfig,
    ModelVisualRandomizer,
    ModelVisualRandomizerConfig,
    RandomizerLevel,
    load_randomizer_configs,
)
from simsync.states import LightState

TWO_VISUAL_XML = """\
<model name="m">
  <link name="l1">
    <visual name="v1"><geometry><box size="1 1 1"/></geometry></visual>
    <visual name="v2"><geometry><sphere radius="0.5"/></geometry></visual>
  </link>
  <link name="l2">
    <visual name="v3"><geometry><box size="1 1 1"/></geometry></visual>
  </link>
</model>
"""


@pytest.fixture
def fw(server):
    session = Session(server.address)
    framework = Framework(session)
    for name in ("alpha", "beta"):
        b = Behaviour(name, "tag", ModelSpawner(session, TWO_VISUAL_XML))
        framework.register(b)
        framework.spawn_behaviour(b, Pose())
    server.world.add_light(LightState("sun"))
    server.world.add_light(LightState("sky"))
    framework.advance(1)
    yield framework
    framework.close()
    session.close()


class TestModelVisualRandomizer:
    def test_degenerate_range_exact_color(self, fw):
        cfg = ModelVisualRandomizerConfig(
            level=RandomizerLevel.VISUAL,
            color_min=Color(1, 0, 0, 1),
            color_max=Color(1, 0, 0, 1),
            num_selection=3,
        )
        written = ModelVisualRandomizer(fw, cfg).randomize(random.Random(1))
        assert len(written) == 3
        for key, color in written:
            assert (color.r, color.g, color.b, color.a) == (1.0, 0.0, 0.0, 1.0)
            assert fw.read_visual(key).material.diffuse == Color(1, 0, 0, 1)

    def test_seed_reproduces_selection_and_colors(self, fw):
        cfg = ModelVisualRandomizerConfig(level=RandomizerLevel.VISUAL, num_selection=4)
        first = ModelVisualRandomizer(fw, cfg).randomize(random.Random(42))
        second = ModelVisualRandomizer(fw, cfg).randomize(random.Random(42))
        assert first == second

    def test_num_selection_clamped_no_repeats(self, fw):
        cfg = ModelVisualRandomizerConfig(level=RandomizerLevel.VISUAL, num_selection=50)
        written = ModelVisualRandomizer(fw, cfg).randomize(random.Random(2))
        keys = [key for key, _ in written]
        assert len(keys) == 6  # both models, three visuals each
        assert len(set(keys)) == 6

    def test_model_level_shares_one_color(self, fw):
        cfg = ModelVisualRandomizerConfig(level=RandomizerLevel.MODEL, num_selection=1)
        written = ModelVisualRandomizer(fw, cfg).randomize(random.Random(3))
        assert len(written) == 3  # all visuals of one model
        models = {key[0] for key, _ in written}
        assert len(models) == 1
        rgb = {(c.r, c.g, c.b) for _, c in written}
        assert len(rgb) == 1

    def test_link_level_groups_by_link(self, fw):
        cfg = ModelVisualRandomizerConfig(level=RandomizerLevel.LINK, num_selection=2)
        written = ModelVisualRandomizer(fw, cfg).randomize(random.Random(4))
        by_link = {}
        for key, color in written:
            by_link.setdefault((key[0], key[1]), set()).add((color.r, color.g, color.b))
        assert len(by_link) == 2
        assert all(len(colors) == 1 for colors in by_link.values())

    def test_filters(self, fw):
        cfg = ModelVisualRandomizerConfig(
            level=RandomizerLevel.VISUAL,
            num_selection=10,
            model_filter=("alpha",),
            link_filter=("l1",),
        )
        written = ModelVisualRandomizer(fw, cfg).randomize(random.Random(5))
        assert {key[:2] for key, _ in written} == {("alpha", "l1")}
        assert len(written) == 2

    def test_empty_filter_noop_with_diagnostic(self, fw, caplog):
        cfg = ModelVisualRandomizerConfig(level=RandomizerLevel.VISUAL, model_filter=("nope",))
        with caplog.at_level("WARNING"):
            written = ModelVisualRandomizer(fw, cfg).randomize(random.Random(6))
        assert written == []
        assert "no units" in caplog.text

    def test_alpha_kept_unless_range_spans(self, fw):
        key = fw.all_visual_keys()[0]
        current = fw.read_visual(key)
        from dataclasses import replace

        fw.write_visual(key, material=replace(current.material, diffuse=Color(0.5, 0.5, 0.5, 0.25)))
        cfg = ModelVisualRandomizerConfig(
            level=RandomizerLevel.VISUAL,
            num_selection=50,
            color_min=Color(0, 0, 0, 1.0),
            color_max=Color(1, 1, 1, 1.0),
        )
        ModelVisualRandomizer(fw, cfg).randomize(random.Random(7))
        assert fw.read_visual(key).material.diffuse.a == 0.25  # alpha untouched
        spanning = ModelVisualRandomizerConfig(
            level=RandomizerLevel.VISUAL,
            num_selection=50,
            color_min=Color(0, 0, 0, 0.0),
            color_max=Color(1, 1, 1, 1.0),
        )
        ModelVisualRandomizer(fw, spanning).randomize(random.Random(8))
        assert fw.read_visual(key).material.diffuse.a != 0.25

    def test_range_validation(self):
        with pytest.raises(ValueError):
            ModelVisualRandomizerConfig(color_min=Color(0.9, 0, 0), color_max=Color(0.1, 1, 1))
        with pytest.raises(ValueError):
            ModelVisualRandomizerConfig(num_selection=0)

    def test_writes_reach_server_via_flush(self, fw, session):
        cfg = ModelVisualRandomizerConfig(
            level=RandomizerLevel.VISUAL,
            color_min=Color(0, 1, 0, 1),
            color_max=Color(0, 1, 0, 1),
            num_selection=50,
        )
        ModelVisualRandomizer(fw, cfg).randomize(random.Random(9))
        fw.advance(1)
        got = session.get_visual_states([("alpha", "l1", "v1")])[0]
        assert got.material.diffuse == Color(0, 1, 0, 1)


class TestLightRandomizer:
    def test_exact_degenerate_attenuation(self, fw):
        cfg = LightRandomizerConfig(lights=("sun",), attenuation_constant=(0.5, 0.5))
        (state,) = LightRandomizer(fw, cfg).randomize(random.Random(1))
        assert state.attenuation_constant == 0.5

    def test_1000_samples_within_range_and_uniform(self, fw):
        cfg = LightRandomizerConfig(lights=("sun",), attenuation_linear=(0.0, 1.0))
        rng = random.Random(11)
        randomizer = LightRandomizer(fw, cfg)
        samples = [randomizer.randomize(rng)[0].attenuation_linear for _ in range(1000)]
        assert min(samples) >= 0.0 and max(samples) <= 1.0
        assert abs(statistics.mean(samples) - 0.5) < 0.05

    def test_seed_reproduces_states(self, fw):
        cfg = LightRandomizerConfig(lights=("sun", "sky"))
        a = LightRandomizer(fw, cfg).randomize(random.Random(21))
        b = LightRandomizer(fw, cfg).randomize(random.Random(21))
        assert a == b

    def test_written_to_server(self, fw, session):
        cfg = LightRandomizerConfig(
            lights=("sun",),
            color_min=Color(0.25, 0.25, 0.25, 1),
            color_max=Color(0.25, 0.25, 0.25, 1),
            attenuation_linear=(0.5, 0.5),
        )
        LightRandomizer(fw, cfg).randomize(random.Random(3))
        fw.advance(1)
        got = session.get_light_states(["sun"])[0]
        assert got.color == Color(0.25, 0.25, 0.25, 1)
        assert got.attenuation_linear == 0.5

    def test_unknown_light_not_found_surfaced(self, fw, caplog):
        cfg = LightRandomizerConfig(lights=("ghost",))
        LightRandomizer(fw, cfg).randomize(random.Random(4))
        with caplog.at_level("WARNING"):
            fw.advance(1)
        assert "NOT_FOUND" in caplog.text

    def test_range_validation(self):
        with pytest.raises(ValueError):
            LightRandomizerConfig(lights=("sun",), attenuation_linear=(1.0, 0.5))
        with pytest.raises(ValueError):
            LightRandomizerConfig(lights=())


class TestDeterminismByteForByte:
    def test_full_write_sequence_identical(self, fw):
        def run(seed):
            visual_cfg = ModelVisualRandomizerConfig(level=RandomizerLevel.LINK, num_selection=3)
            light_cfg = LightRandomizerConfig(lights=("sun", "sky"), attenuation_quadratic=(0.0, 0.2))
            rng = random.Random(seed)
            visuals = ModelVisualRandomizer(fw, visual_cfg).randomize(rng)
            lights = LightRandomizer(fw, light_cfg).randomize(rng)
            payload = {
                "visuals": [[list(key), [c.r, c.g, c.b, c.a]] for key, c in visuals],
                "lights": [[s.name, s.color.r, s.attenuation_constant, s.attenuation_linear,
                            s.attenuation_quadratic] for s in lights],
            }
            return json.dumps(payload, sort_keys=True).encode()

        assert run(99) == run(99)
        assert run(99) != run(100)


class TestConfigLoading:
    CONFIG = """
    {"randomizers": [
      {"kind": "model_visual", "level": "VISUAL", "num_selection": 2,
       "color_min": {"r": 0.1, "g": 0.1, "b": 0.1, "a": 1.0},
       "color_max": {"r": 0.9, "g": 0.9, "b": 0.9, "a": 1.0},
       "model_filter": ["alpha"]},
      {"kind": "light", "lights": ["sun"],
       "attenuation_constant": [0.5, 1.0],
       "attenuation_linear": [0.0, 0.2]}
    ]}
    """

    def test_load_from_text(self):
        visual_cfg, light_cfg = load_randomizer_configs(self.CONFIG)
        assert visual_cfg.level is RandomizerLevel.VISUAL
        assert visual_cfg.num_selection == 2
        assert visual_cfg.model_filter == ("alpha",)
        assert light_cfg.lights == ("sun",)
        assert light_cfg.attenuation_constant == (0.5, 1.0)

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "random.json"
        path.write_text(self.CONFIG)
        assert len(load_randomizer_configs(path)) == 2

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            load_randomizer_configs('{"randomizers": [{"kind": "texture"}]}')
