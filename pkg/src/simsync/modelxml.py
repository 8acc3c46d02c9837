"""Loader for the supported model-XML subset.

Grammar (element and attribute names are exact):

    <model name="NAME">
      <link name="NAME">
        <pose>x y z roll pitch yaw</pose>              (optional, radians)
        <visual name="NAME">
          <pose>x y z roll pitch yaw</pose>            (optional)
          <geometry>
            <box size="x y z"/> | <sphere radius="r"/> | <cylinder radius="r" length="l"/>
          </geometry>
          <material>                                   (optional)
            <ambient>r g b a</ambient> <diffuse>...</diffuse>
            <specular>...</specular> <emissive>...</emissive>
          </material>
        </visual>*
      </link>*
    </model>

Anything else is rejected explicitly. Files conventionally use the extension
``.model.xml``.
"""

from __future__ import annotations

import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .math3d import Color, EulerRPY, Pose, Vector3, quat_from_euler
from .states import Material

__all__ = [
    "ModelXmlError",
    "BoxGeometry",
    "SphereGeometry",
    "CylinderGeometry",
    "VisualSpec",
    "LinkSpec",
    "ModelXmlDocument",
    "parse_model_xml",
    "load_model_xml",
    "document_to_xml",
]


class ModelXmlError(ValueError):
    """Model XML rejected; carries a line/column for syntax errors or an
    element path for schema violations."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None, path: str | None = None):
        where = ""
        if line is not None:
            where = f" at line {line}" + (f", column {column}" if column is not None else "")
        elif path:
            where = f" at {path}"
        super().__init__(message + where)
        self.line = line
        self.column = column
        self.path = path


@dataclass(frozen=True, slots=True)
class BoxGeometry:
    size: Vector3  # full extents, meters


@dataclass(frozen=True, slots=True)
class SphereGeometry:
    radius: float


@dataclass(frozen=True, slots=True)
class CylinderGeometry:
    radius: float
    length: float


Geometry = BoxGeometry | SphereGeometry | CylinderGeometry


@dataclass(frozen=True, slots=True)
class VisualSpec:
    name: str
    geometry: Geometry
    pose: Pose = Pose()
    material: Material | None = None


@dataclass(frozen=True, slots=True)
class LinkSpec:
    name: str
    pose: Pose = Pose()
    visuals: tuple[VisualSpec, ...] = ()


@dataclass(frozen=True, slots=True)
class ModelXmlDocument:
    name: str
    links: tuple[LinkSpec, ...] = ()
    # Euler angles are kept so serialization round-trips exactly.
    _link_rpy: tuple[EulerRPY, ...] = field(default=(), repr=False, compare=False)
    _visual_rpy: tuple[tuple[EulerRPY, ...], ...] = field(default=(), repr=False, compare=False)


def _floats(text: str | None, count: int, path: str) -> list[float]:
    parts = (text or "").split()
    if len(parts) != count:
        raise ModelXmlError(f"expected {count} numbers, got {len(parts)}", path=path)
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ModelXmlError("expected numeric values", path=path) from None


def _name_attr(elem: ET.Element, path: str) -> str:
    name = elem.get("name")
    if not name:
        raise ModelXmlError(f"element <{elem.tag}> requires a name attribute", path=path)
    return name


def _parse_pose(elem: ET.Element, path: str) -> tuple[Pose, EulerRPY]:
    x, y, z, roll, pitch, yaw = _floats(elem.text, 6, path)
    rpy = EulerRPY(roll, pitch, yaw)
    return Pose(Vector3(x, y, z), quat_from_euler(rpy)), rpy


def _parse_color(elem: ET.Element, path: str) -> Color:
    r, g, b, a = _floats(elem.text, 4, path)
    return Color(r, g, b, a)


def _parse_material(elem: ET.Element, path: str) -> Material:
    channels = {}
    for child in elem:
        if child.tag not in ("ambient", "diffuse", "specular", "emissive"):
            raise ModelXmlError(f"unsupported element <{child.tag}>", path=f"{path}/{child.tag}")
        if child.tag in channels:
            raise ModelXmlError(f"duplicate <{child.tag}>", path=f"{path}/{child.tag}")
        channels[child.tag] = _parse_color(child, f"{path}/{child.tag}")
    base = Material()
    return Material(
        channels.get("ambient", base.ambient),
        channels.get("diffuse", base.diffuse),
        channels.get("specular", base.specular),
        channels.get("emissive", base.emissive),
    )


def _attr_floats(elem: ET.Element, names: tuple[str, ...], path: str) -> list[float]:
    values = []
    for attr in names:
        raw = elem.get(attr)
        if raw is None:
            raise ModelXmlError(f"<{elem.tag}> requires attribute {attr!r}", path=path)
        try:
            values.append([float(p) for p in raw.split()])
        except ValueError:
            raise ModelXmlError(f"attribute {attr!r} must be numeric", path=path) from None
    return values


def _parse_geometry(elem: ET.Element, path: str) -> Geometry:
    shapes = list(elem)
    if len(shapes) != 1:
        raise ModelXmlError("<geometry> requires exactly one shape", path=path)
    shape = shapes[0]
    spath = f"{path}/{shape.tag}"
    if shape.tag == "box":
        (size,) = _attr_floats(shape, ("size",), spath)
        if len(size) != 3 or any(v <= 0 for v in size):
            raise ModelXmlError("box size must be three positive numbers", path=spath)
        return BoxGeometry(Vector3(*size))
    if shape.tag == "sphere":
        (radius,) = _attr_floats(shape, ("radius",), spath)
        if len(radius) != 1 or radius[0] <= 0:
            raise ModelXmlError("sphere radius must be positive", path=spath)
        return SphereGeometry(radius[0])
    if shape.tag == "cylinder":
        radius, length = _attr_floats(shape, ("radius", "length"), spath)
        if len(radius) != 1 or radius[0] <= 0 or len(length) != 1 or length[0] <= 0:
            raise ModelXmlError("cylinder radius and length must be positive", path=spath)
        return CylinderGeometry(radius[0], length[0])
    raise ModelXmlError(f"unsupported element <{shape.tag}>", path=spath)


def _parse_visual(elem: ET.Element, path: str) -> tuple[VisualSpec, EulerRPY]:
    name = _name_attr(elem, path)
    path = f"{path}[{name}]"
    pose, rpy = Pose(), EulerRPY()
    geometry = None
    material = None
    for child in elem:
        if child.tag == "pose":
            pose, rpy = _parse_pose(child, f"{path}/pose")
        elif child.tag == "geometry":
            if geometry is not None:
                raise ModelXmlError("duplicate <geometry>", path=path)
            geometry = _parse_geometry(child, f"{path}/geometry")
        elif child.tag == "material":
            material = _parse_material(child, f"{path}/material")
        else:
            raise ModelXmlError(f"unsupported element <{child.tag}>", path=f"{path}/{child.tag}")
    if geometry is None:
        raise ModelXmlError("visual requires a <geometry>", path=path)
    return VisualSpec(name, geometry, pose, material), rpy


def _parse_link(elem: ET.Element, path: str) -> tuple[LinkSpec, EulerRPY, tuple[EulerRPY, ...]]:
    name = _name_attr(elem, path)
    path = f"{path}[{name}]"
    pose, rpy = Pose(), EulerRPY()
    visuals: list[VisualSpec] = []
    visual_rpys: list[EulerRPY] = []
    seen = set()
    for child in elem:
        if child.tag == "pose":
            pose, rpy = _parse_pose(child, f"{path}/pose")
        elif child.tag == "visual":
            visual, vrpy = _parse_visual(child, f"{path}/visual")
            if visual.name in seen:
                raise ModelXmlError(f"duplicate visual name {visual.name!r}", path=path)
            seen.add(visual.name)
            visuals.append(visual)
            visual_rpys.append(vrpy)
        else:
            raise ModelXmlError(f"unsupported element <{child.tag}>", path=f"{path}/{child.tag}")
    return LinkSpec(name, pose, tuple(visuals)), rpy, tuple(visual_rpys)


def parse_model_xml(text: str) -> ModelXmlDocument:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position if exc.position else (None, None)
        raise ModelXmlError(f"malformed XML: {exc.msg.split(':')[0]}", line=line, column=column) from None
    if root.tag != "model":
        raise ModelXmlError(f"root element must be <model>, got <{root.tag}>", path=f"/{root.tag}")
    name = _name_attr(root, "/model")
    links: list[LinkSpec] = []
    link_rpys: list[EulerRPY] = []
    visual_rpys: list[tuple[EulerRPY, ...]] = []
    seen = set()
    for child in root:
        if child.tag != "link":
            raise ModelXmlError(f"unsupported element <{child.tag}>", path=f"/model/{child.tag}")
        link, rpy, vrpys = _parse_link(child, "/model/link")
        if link.name in seen:
            raise ModelXmlError(f"duplicate link name {link.name!r}", path="/model")
        seen.add(link.name)
        links.append(link)
        link_rpys.append(rpy)
        visual_rpys.append(vrpys)
    return ModelXmlDocument(name, tuple(links), tuple(link_rpys), tuple(visual_rpys))


def load_model_xml(source: str | os.PathLike) -> ModelXmlDocument:
    """Parse model XML from a literal string (anything starting with '<') or
    from a file path."""
    if isinstance(source, str) and source.lstrip().startswith("<"):
        return parse_model_xml(source)
    with open(source, "r", encoding="utf-8") as fh:
        return parse_model_xml(fh.read())


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def _pose_text(pose: Pose, rpy: EulerRPY) -> str:
    p = pose.position
    return _fmt((p.x, p.y, p.z, rpy.roll, rpy.pitch, rpy.yaw))


def document_to_xml(doc: ModelXmlDocument) -> str:
    """Serialize a document back to canonical model XML (parse round-trips)."""
    lines = [f'<model name="{doc.name}">']
    link_rpys = doc._link_rpy or tuple(EulerRPY() for _ in doc.links)
    visual_rpys = doc._visual_rpy or tuple(tuple(EulerRPY() for _ in link.visuals) for link in doc.links)
    for link, lrpy, vrpys in zip(doc.links, link_rpys, visual_rpys):
        lines.append(f'  <link name="{link.name}">')
        lines.append(f"    <pose>{_pose_text(link.pose, lrpy)}</pose>")
        for visual, vrpy in zip(link.visuals, vrpys):
            lines.append(f'    <visual name="{visual.name}">')
            lines.append(f"      <pose>{_pose_text(visual.pose, vrpy)}</pose>")
            g = visual.geometry
            if isinstance(g, BoxGeometry):
                shape = f'<box size="{_fmt((g.size.x, g.size.y, g.size.z))}"/>'
            elif isinstance(g, SphereGeometry):
                shape = f'<sphere radius="{g.radius!r}"/>'
            else:
                shape = f'<cylinder radius="{g.radius!r}" length="{g.length!r}"/>'
            lines.append(f"      <geometry>{shape}</geometry>")
            if visual.material is not None:
                m = visual.material
                lines.append("      <material>")
                for tag, c in (("ambient", m.ambient), ("diffuse", m.diffuse), ("specular", m.specular), ("emissive", m.emissive)):
                    lines.append(f"        <{tag}>{_fmt((c.r, c.g, c.b, c.a))}</{tag}>")
                lines.append("      </material>")
            lines.append("    </visual>")
        lines.append("  </link>")
    lines.append("</model>")
    return "\n".join(lines) + "\n"
