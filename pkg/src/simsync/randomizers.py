"""Domain randomizers for model visuals and lights.

Both randomizers draw every value uniformly from configured closed ranges
using a caller-supplied ``random.Random``, so a fixed seed reproduces the
exact write sequence. Writes go through the framework mirrors and reach the
server with the next batched flush.

Configs can also be loaded from a JSON file; see ``load_randomizer_configs``.

Color alpha is only randomized when the configured range actually spans it
(min.a < max.a); otherwise the target's existing alpha is kept (lights fall
back to the range minimum since they may not be tracked yet).
"""

from __future__ import annotations

import json
import logging
import os
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from enum import Enum

from .math3d import Color
from .states import LightState

logger = logging.getLogger(__name__)


class RandomizerLevel(Enum):
    MODEL = "MODEL"
    LINK = "LINK"
    VISUAL = "VISUAL"


def _check_color_range(color_min: Color, color_max: Color) -> None:
    for ch in ("r", "g", "b", "a"):
        if getattr(color_min, ch) > getattr(color_max, ch):
            raise ValueError(f"color range is inverted on channel {ch!r}")


def _check_range(name: str, rng: tuple[float, float]) -> tuple[float, float]:
    lo, hi = rng
    if not 0 <= lo <= hi:
        raise ValueError(f"{name} range must satisfy 0 <= min <= max")
    return (float(lo), float(hi))


@dataclass(frozen=True)
class ModelVisualRandomizerConfig:
    level: RandomizerLevel = RandomizerLevel.MODEL
    color_min: Color = Color(0.0, 0.0, 0.0, 1.0)
    color_max: Color = Color(1.0, 1.0, 1.0, 1.0)
    num_selection: int = 1
    model_filter: tuple[str, ...] | None = None
    link_filter: tuple[str, ...] | None = None
    visual_filter: tuple[str, ...] | None = None

    def __post_init__(self):
        _check_color_range(self.color_min, self.color_max)
        if self.num_selection < 1:
            raise ValueError("num_selection must be >= 1")


@dataclass(frozen=True)
class LightRandomizerConfig:
    lights: tuple[str, ...]
    color_min: Color = Color(0.0, 0.0, 0.0, 1.0)
    color_max: Color = Color(1.0, 1.0, 1.0, 1.0)
    attenuation_constant: tuple[float, float] = (1.0, 1.0)
    attenuation_linear: tuple[float, float] = (0.0, 0.0)
    attenuation_quadratic: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.lights:
            raise ValueError("at least one target light is required")
        _check_color_range(self.color_min, self.color_max)
        object.__setattr__(self, "attenuation_constant", _check_range("attenuation_constant", self.attenuation_constant))
        object.__setattr__(self, "attenuation_linear", _check_range("attenuation_linear", self.attenuation_linear))
        object.__setattr__(self, "attenuation_quadratic", _check_range("attenuation_quadratic", self.attenuation_quadratic))


class Randomizer(ABC):
    """Custom randomizers implement randomize(rng) against the framework."""

    @abstractmethod
    def randomize(self, rng: random.Random):
        ...


def _sample_rgb(rng: random.Random, lo: Color, hi: Color) -> tuple[float, float, float, float | None]:
    r = rng.uniform(lo.r, hi.r)
    g = rng.uniform(lo.g, hi.g)
    b = rng.uniform(lo.b, hi.b)
    a = rng.uniform(lo.a, hi.a) if lo.a < hi.a else None
    return r, g, b, a


class ModelVisualRandomizer(Randomizer):
    """Recolors diffuse channels of tracked visuals.

    The selection level decides what shares one sampled color: a whole model,
    one link, or one visual. ``num_selection`` units are drawn uniformly
    without replacement per call (clamped to the unit count).
    """

    def __init__(self, fw, config: ModelVisualRandomizerConfig):
        self._fw = fw
        self.config = config

    def _filtered_keys(self) -> list[tuple[str, str, str]]:
        cfg = self.config
        keys = self._fw.all_visual_keys()
        if cfg.model_filter is not None:
            keys = [k for k in keys if k[0] in cfg.model_filter]
        if cfg.link_filter is not None:
            keys = [k for k in keys if k[1] in cfg.link_filter]
        if cfg.visual_filter is not None:
            keys = [k for k in keys if k[2] in cfg.visual_filter]
        return keys

    def randomize(self, rng: random.Random) -> list[tuple[tuple[str, str, str], Color]]:
        cfg = self.config
        keys = self._filtered_keys()
        if not keys:
            logger.warning("visual randomizer matched no units")
            return []
        if cfg.level is RandomizerLevel.MODEL:
            units = list(dict.fromkeys(k[0] for k in keys))
            members = lambda unit: [k for k in keys if k[0] == unit]
        elif cfg.level is RandomizerLevel.LINK:
            units = list(dict.fromkeys((k[0], k[1]) for k in keys))
            members = lambda unit: [k for k in keys if (k[0], k[1]) == unit]
        else:
            units = keys
            members = lambda unit: [unit]
        selected = rng.sample(units, min(cfg.num_selection, len(units)))
        written = []
        for unit in selected:
            r, g, b, a = _sample_rgb(rng, cfg.color_min, cfg.color_max)
            for key in members(unit):
                current = self._fw.read_visual(key)
                if current is None:
                    continue
                color = Color(r, g, b, current.material.diffuse.a if a is None else a)
                self._fw.write_visual(key, material=replace(current.material, diffuse=color))
                written.append((key, color))
        return written


class LightRandomizer(Randomizer):
    """Samples diffuse color and attenuation terms for each target light."""

    def __init__(self, fw, config: LightRandomizerConfig):
        self._fw = fw
        self.config = config

    def randomize(self, rng: random.Random) -> list[LightState]:
        cfg = self.config
        written = []
        for name in cfg.lights:
            r, g, b, a = _sample_rgb(rng, cfg.color_min, cfg.color_max)
            state = LightState(
                name,
                Color(r, g, b, cfg.color_min.a if a is None else a),
                rng.uniform(*cfg.attenuation_constant),
                rng.uniform(*cfg.attenuation_linear),
                rng.uniform(*cfg.attenuation_quadratic),
            )
            self._fw.write_light(state)
            written.append(state)
        return written


def _color_from_obj(obj: dict) -> Color:
    return Color(obj.get("r", 0.0), obj.get("g", 0.0), obj.get("b", 0.0), obj.get("a", 1.0))


def load_randomizer_configs(source: str | os.PathLike) -> list[ModelVisualRandomizerConfig | LightRandomizerConfig]:
    """Load randomizer configs from JSON (a path, or a literal JSON string).

    Schema: {"randomizers": [{"kind": "model_visual"|"light", ...}, ...]}
    with colors as {"r","g","b","a"} objects and ranges as [min, max] pairs.
    """
    if isinstance(source, str) and source.lstrip().startswith("{"):
        data = json.loads(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    configs: list[ModelVisualRandomizerConfig | LightRandomizerConfig] = []
    for entry in data.get("randomizers", []):
        kind = entry.get("kind")
        if kind == "model_visual":
            configs.append(ModelVisualRandomizerConfig(
                level=RandomizerLevel(entry.get("level", "MODEL")),
                color_min=_color_from_obj(entry.get("color_min", {})),
                color_max=_color_from_obj(entry.get("color_max", {"r": 1, "g": 1, "b": 1})),
                num_selection=entry.get("num_selection", 1),
                model_filter=tuple(entry["model_filter"]) if entry.get("model_filter") else None,
                link_filter=tuple(entry["link_filter"]) if entry.get("link_filter") else None,
                visual_filter=tuple(entry["visual_filter"]) if entry.get("visual_filter") else None,
            ))
        elif kind == "light":
            configs.append(LightRandomizerConfig(
                lights=tuple(entry["lights"]),
                color_min=_color_from_obj(entry.get("color_min", {})),
                color_max=_color_from_obj(entry.get("color_max", {"r": 1, "g": 1, "b": 1})),
                attenuation_constant=tuple(entry.get("attenuation_constant", (1.0, 1.0))),
                attenuation_linear=tuple(entry.get("attenuation_linear", (0.0, 0.0))),
                attenuation_quadratic=tuple(entry.get("attenuation_quadratic", (0.0, 0.0))),
            ))
        else:
            raise ValueError(f"unknown randomizer kind {kind!r}")
    return configs
