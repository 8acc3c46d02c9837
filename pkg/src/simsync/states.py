"""Scene-state records exchanged with the world server, plus their wire
(dict) representations.

Wire dicts use a fixed key order so encoded lines are canonical:
  vector   {"x","y","z"}            quaternion {"x","y","z","w"}
  pose     {"position","orientation"}
  twist    {"linear","angular"}
  color    {"r","g","b","a"}
  material {"ambient","diffuse","specular","emissive"}

``*_to_wire`` validates strictly (it refuses to build an invalid payload);
``*_from_wire`` checks structure only, so a server can decode a syntactically
valid record and reject bad values per entry. ``model_invalid_reason`` and
friends are those per-entry value checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .math3d import Color, Pose, Quaternion, Twist, Vector3

__all__ = [
    "ModelState",
    "LinkState",
    "Material",
    "VisualState",
    "LightState",
    "WireFormatError",
    "model_state_to_wire",
    "model_state_from_wire",
    "link_state_to_wire",
    "link_state_from_wire",
    "visual_state_to_wire",
    "visual_state_from_wire",
    "light_state_to_wire",
    "light_state_from_wire",
    "pose_to_wire",
    "pose_from_wire",
    "model_invalid_reason",
    "link_invalid_reason",
    "visual_invalid_reason",
    "light_invalid_reason",
]

DEFAULT_FRAME = "world"

_GRAY = Color(0.5, 0.5, 0.5, 1.0)


@dataclass(frozen=True, slots=True)
class Material:
    ambient: Color = _GRAY
    diffuse: Color = _GRAY
    specular: Color = Color(0.1, 0.1, 0.1, 1.0)
    emissive: Color = Color(0.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True, slots=True)
class ModelState:
    name: str
    pose: Pose = Pose()
    twist: Twist = Twist()
    reference_frame: str = DEFAULT_FRAME


@dataclass(frozen=True, slots=True)
class LinkState:
    model_name: str
    link_name: str
    pose: Pose = Pose()  # world frame
    twist: Twist = Twist()

    @property
    def key(self) -> tuple[str, str]:
        return (self.model_name, self.link_name)


@dataclass(frozen=True, slots=True)
class VisualState:
    model_name: str
    link_name: str
    visual_name: str
    material: Material = Material()
    transparency: float = 0.0
    visible: bool = True

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.model_name, self.link_name, self.visual_name)


@dataclass(frozen=True, slots=True)
class LightState:
    name: str
    color: Color = Color(1.0, 1.0, 1.0, 1.0)  # diffuse
    attenuation_constant: float = 1.0
    attenuation_linear: float = 0.0
    attenuation_quadratic: float = 0.0


class WireFormatError(ValueError):
    """A wire dict is structurally unusable (missing/mistyped fields)."""


# -- dict <-> dataclass ------------------------------------------------------


def _vec_to_wire(v: Vector3) -> dict:
    return {"x": float(v.x), "y": float(v.y), "z": float(v.z)}


def _quat_to_wire(q: Quaternion) -> dict:
    return {"x": float(q.x), "y": float(q.y), "z": float(q.z), "w": float(q.w)}


def pose_to_wire(p: Pose) -> dict:
    return {"position": _vec_to_wire(p.position), "orientation": _quat_to_wire(p.orientation)}


def _twist_to_wire(t: Twist) -> dict:
    return {"linear": _vec_to_wire(t.linear), "angular": _vec_to_wire(t.angular)}


def _color_to_wire(c: Color) -> dict:
    return {"r": float(c.r), "g": float(c.g), "b": float(c.b), "a": float(c.a)}


def _material_to_wire(m: Material) -> dict:
    return {
        "ambient": _color_to_wire(m.ambient),
        "diffuse": _color_to_wire(m.diffuse),
        "specular": _color_to_wire(m.specular),
        "emissive": _color_to_wire(m.emissive),
    }


def _require_nonempty(name: str, what: str) -> str:
    if not isinstance(name, str) or not name:
        raise WireFormatError(f"{what} must be a nonempty string")
    return name


def model_state_to_wire(s: ModelState) -> dict:
    _require_nonempty(s.name, "model name")
    return {
        "name": s.name,
        "pose": pose_to_wire(s.pose),
        "twist": _twist_to_wire(s.twist),
        "reference_frame": s.reference_frame,
    }


def link_state_to_wire(s: LinkState) -> dict:
    _require_nonempty(s.model_name, "model name")
    _require_nonempty(s.link_name, "link name")
    return {
        "model_name": s.model_name,
        "link_name": s.link_name,
        "pose": pose_to_wire(s.pose),
        "twist": _twist_to_wire(s.twist),
    }


def visual_state_to_wire(s: VisualState) -> dict:
    _require_nonempty(s.model_name, "model name")
    _require_nonempty(s.link_name, "link name")
    _require_nonempty(s.visual_name, "visual name")
    if not 0.0 <= s.transparency <= 1.0:
        raise WireFormatError("transparency must lie in [0, 1]")
    return {
        "model_name": s.model_name,
        "link_name": s.link_name,
        "visual_name": s.visual_name,
        "material": _material_to_wire(s.material),
        "transparency": float(s.transparency),
        "visible": bool(s.visible),
    }


def light_state_to_wire(s: LightState) -> dict:
    _require_nonempty(s.name, "light name")
    for field in ("attenuation_constant", "attenuation_linear", "attenuation_quadratic"):
        if getattr(s, field) < 0.0:
            raise WireFormatError(f"{field} must be non-negative")
    return {
        "name": s.name,
        "color": _color_to_wire(s.color),
        "attenuation_constant": float(s.attenuation_constant),
        "attenuation_linear": float(s.attenuation_linear),
        "attenuation_quadratic": float(s.attenuation_quadratic),
    }


def _num(d: dict, key: str, ctx: str) -> float:
    try:
        v = d[key]
    except (KeyError, TypeError):
        raise WireFormatError(f"{ctx}: missing field {key!r}") from None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise WireFormatError(f"{ctx}: field {key!r} must be a number")
    return float(v)


def _str(d: dict, key: str, ctx: str) -> str:
    try:
        v = d[key]
    except (KeyError, TypeError):
        raise WireFormatError(f"{ctx}: missing field {key!r}") from None
    if not isinstance(v, str):
        raise WireFormatError(f"{ctx}: field {key!r} must be a string")
    return v


def _sub(d: dict, key: str, ctx: str) -> dict:
    try:
        v = d[key]
    except (KeyError, TypeError):
        raise WireFormatError(f"{ctx}: missing field {key!r}") from None
    if not isinstance(v, dict):
        raise WireFormatError(f"{ctx}: field {key!r} must be an object")
    return v


def _vec_from_wire(d: dict, ctx: str) -> Vector3:
    return Vector3(_num(d, "x", ctx), _num(d, "y", ctx), _num(d, "z", ctx))


def _quat_from_wire(d: dict, ctx: str) -> Quaternion:
    return Quaternion(_num(d, "x", ctx), _num(d, "y", ctx), _num(d, "z", ctx), _num(d, "w", ctx))


def pose_from_wire(d: dict, ctx: str = "pose") -> Pose:
    return Pose(
        _vec_from_wire(_sub(d, "position", ctx), ctx + ".position"),
        _quat_from_wire(_sub(d, "orientation", ctx), ctx + ".orientation"),
    )


def _twist_from_wire(d: dict, ctx: str) -> Twist:
    return Twist(
        _vec_from_wire(_sub(d, "linear", ctx), ctx + ".linear"),
        _vec_from_wire(_sub(d, "angular", ctx), ctx + ".angular"),
    )


def _color_from_wire(d: dict, ctx: str) -> Color:
    return Color(_num(d, "r", ctx), _num(d, "g", ctx), _num(d, "b", ctx), _num(d, "a", ctx))


def _material_from_wire(d: dict, ctx: str) -> Material:
    return Material(
        _color_from_wire(_sub(d, "ambient", ctx), ctx + ".ambient"),
        _color_from_wire(_sub(d, "diffuse", ctx), ctx + ".diffuse"),
        _color_from_wire(_sub(d, "specular", ctx), ctx + ".specular"),
        _color_from_wire(_sub(d, "emissive", ctx), ctx + ".emissive"),
    )


def model_state_from_wire(d: dict) -> ModelState:
    ctx = "model_state"
    return ModelState(
        _str(d, "name", ctx),
        pose_from_wire(_sub(d, "pose", ctx), ctx + ".pose"),
        _twist_from_wire(_sub(d, "twist", ctx), ctx + ".twist"),
        _str(d, "reference_frame", ctx),
    )


def link_state_from_wire(d: dict) -> LinkState:
    ctx = "link_state"
    return LinkState(
        _str(d, "model_name", ctx),
        _str(d, "link_name", ctx),
        pose_from_wire(_sub(d, "pose", ctx), ctx + ".pose"),
        _twist_from_wire(_sub(d, "twist", ctx), ctx + ".twist"),
    )


def visual_state_from_wire(d: dict) -> VisualState:
    ctx = "visual_state"
    visible = d.get("visible")
    if not isinstance(visible, bool):
        raise WireFormatError(f"{ctx}: field 'visible' must be a boolean")
    return VisualState(
        _str(d, "model_name", ctx),
        _str(d, "link_name", ctx),
        _str(d, "visual_name", ctx),
        _material_from_wire(_sub(d, "material", ctx), ctx + ".material"),
        _num(d, "transparency", ctx),
        visible,
    )


def light_state_from_wire(d: dict) -> LightState:
    ctx = "light_state"
    return LightState(
        _str(d, "name", ctx),
        _color_from_wire(_sub(d, "color", ctx), ctx + ".color"),
        _num(d, "attenuation_constant", ctx),
        _num(d, "attenuation_linear", ctx),
        _num(d, "attenuation_quadratic", ctx),
    )


# -- per-entry semantic checks (server-side set validation) ------------------
#
# These run on raw wire dicts on the server's hot path; they return an error
# string, or None when the entry is applicable. Structural problems count as
# invalid entries here (a batch with one malformed record must not fail as a
# whole).

_NUM = (int, float)


def _finite_vec(d) -> bool:
    if not isinstance(d, dict):
        return False
    x = d.get("x")
    y = d.get("y")
    z = d.get("z")
    if isinstance(x, bool) or isinstance(y, bool) or isinstance(z, bool):
        return False
    if not (isinstance(x, _NUM) and isinstance(y, _NUM) and isinstance(z, _NUM)):
        return False
    return math.isfinite(x) and math.isfinite(y) and math.isfinite(z)


def _pose_reason(pose) -> str | None:
    if not isinstance(pose, dict):
        return "pose must be an object"
    if not _finite_vec(pose.get("position")):
        return "position must be three finite numbers"
    q = pose.get("orientation")
    if not isinstance(q, dict):
        return "orientation must be an object"
    try:
        qx, qy, qz, qw = q["x"], q["y"], q["z"], q["w"]
        n2 = qx * qx + qy * qy + qz * qz + qw * qw
    except (KeyError, TypeError):
        return "orientation must have numeric x, y, z, w"
    if isinstance(qx, bool) or isinstance(qy, bool) or isinstance(qz, bool) or isinstance(qw, bool):
        return "orientation must have numeric x, y, z, w"
    if not math.isfinite(n2) or abs(n2 - 1.0) > 2e-9:
        return "orientation must be a unit quaternion"
    return None


def _twist_reason(twist) -> str | None:
    if not isinstance(twist, dict):
        return "twist must be an object"
    if not _finite_vec(twist.get("linear")) or not _finite_vec(twist.get("angular")):
        return "twist components must be finite numbers"
    return None


def _color_reason(c, what: str) -> str | None:
    if not isinstance(c, dict):
        return f"{what} must be an object"
    for ch in ("r", "g", "b", "a"):
        v = c.get(ch)
        if isinstance(v, bool) or not isinstance(v, _NUM) or not math.isfinite(v):
            return f"{what}.{ch} must be a finite number"
    return None


def model_invalid_reason(d) -> str | None:
    if not isinstance(d, dict):
        return "entry must be an object"
    name = d.get("name")
    if not isinstance(name, str) or not name:
        return "name must be a nonempty string"
    frame = d.get("reference_frame", DEFAULT_FRAME)
    if not isinstance(frame, str) or not frame:
        return "reference_frame must be a nonempty string"
    return _pose_reason(d.get("pose")) or _twist_reason(d.get("twist"))


def link_invalid_reason(d) -> str | None:
    if not isinstance(d, dict):
        return "entry must be an object"
    for key in ("model_name", "link_name"):
        v = d.get(key)
        if not isinstance(v, str) or not v:
            return f"{key} must be a nonempty string"
    return _pose_reason(d.get("pose")) or _twist_reason(d.get("twist"))


def visual_invalid_reason(d) -> str | None:
    if not isinstance(d, dict):
        return "entry must be an object"
    for key in ("model_name", "link_name", "visual_name"):
        v = d.get(key)
        if not isinstance(v, str) or not v:
            return f"{key} must be a nonempty string"
    m = d.get("material")
    if not isinstance(m, dict):
        return "material must be an object"
    for part in ("ambient", "diffuse", "specular", "emissive"):
        reason = _color_reason(m.get(part), f"material.{part}")
        if reason:
            return reason
    t = d.get("transparency")
    if isinstance(t, bool) or not isinstance(t, _NUM) or not 0.0 <= t <= 1.0:
        return "transparency must lie in [0, 1]"
    if not isinstance(d.get("visible"), bool):
        return "visible must be a boolean"
    return None


def light_invalid_reason(d) -> str | None:
    if not isinstance(d, dict):
        return "entry must be an object"
    name = d.get("name")
    if not isinstance(name, str) or not name:
        return "name must be a nonempty string"
    reason = _color_reason(d.get("color"), "color")
    if reason:
        return reason
    for key in ("attenuation_constant", "attenuation_linear", "attenuation_quadratic"):
        v = d.get(key)
        if isinstance(v, bool) or not isinstance(v, _NUM) or not math.isfinite(v) or v < 0.0:
            return f"{key} must be a non-negative finite number"
    return None


def _clamp_color_in_place(c: dict) -> None:
    for ch in ("r", "g", "b", "a"):
        v = c[ch]
        if v < 0.0:
            c[ch] = 0.0
        elif v > 1.0:
            c[ch] = 1.0


def normalize_visual_wire(d: dict) -> None:
    """Clamp color channels into [0, 1] before storing (matches Color)."""
    for part in ("ambient", "diffuse", "specular", "emissive"):
        _clamp_color_in_place(d["material"][part])


def normalize_light_wire(d: dict) -> None:
    _clamp_color_in_place(d["color"])
