"""Analytic 2D/3D collision shapes attachable to transforms.

Colliders resolve their world-space shape at query time from an attachment
target (a transform, or a fixed pose) composed with a local pose offset, so
moving the target moves every subsequent query with no refresh call. 2D
shapes live in the world X-Y plane and take only the attachment's x, y, and
yaw; 3D shapes use the full pose.

All boundaries are closed: touching counts for both ``intersects`` and
``contains``. Polygon-versus-shape tests require convex polygons (point and
circle tests work for any simple polygon). Raycasts are 3D only and return
the first boundary crossing at t >= 0, so a ray starting inside reports the
exit point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .framework import LifecycleError
from .math3d import Pose, Quaternion, Ray, Vector3, euler_from_quat, pose_compose, quat_rotate

__all__ = [
    "Hit",
    "Collider",
    "CircleCollider2D",
    "RectangleCollider2D",
    "PolygonCollider2D",
    "SphereCollider3D",
    "BoxCollider3D",
    "ConvexityError",
]

_IDENTITY = Pose()


class ConvexityError(ValueError):
    """Shape-versus-shape polygon tests support convex polygons only."""


@dataclass(frozen=True, slots=True)
class Hit:
    entity_name: str
    distance: float
    point: Vector3


# -- resolved world-space shapes ------------------------------------------------


@dataclass(frozen=True, slots=True)
class WorldCircle:
    cx: float
    cy: float
    radius: float


@dataclass(frozen=True, slots=True)
class WorldRectangle:
    cx: float
    cy: float
    yaw: float
    hx: float
    hy: float

    def corners(self) -> tuple[tuple[float, float], ...]:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        out = []
        for lx, ly in ((self.hx, self.hy), (-self.hx, self.hy), (-self.hx, -self.hy), (self.hx, -self.hy)):
            out.append((self.cx + c * lx - s * ly, self.cy + s * lx + c * ly))
        return tuple(out)

    def to_local(self, x: float, y: float) -> tuple[float, float]:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        dx, dy = x - self.cx, y - self.cy
        return (c * dx + s * dy, -s * dx + c * dy)


@dataclass(frozen=True, slots=True)
class WorldPolygon:
    vertices: tuple[tuple[float, float], ...]
    convex: bool


@dataclass(frozen=True, slots=True)
class WorldSphere:
    center: Vector3
    radius: float


@dataclass(frozen=True, slots=True)
class WorldBox:
    center: Vector3
    orientation: Quaternion
    half: Vector3

    def to_local(self, p: Vector3) -> Vector3:
        return quat_rotate(self.orientation.conjugate(), p - self.center)

    def corners(self) -> tuple[Vector3, ...]:
        out = []
        for sx in (self.half.x, -self.half.x):
            for sy in (self.half.y, -self.half.y):
                for sz in (self.half.z, -self.half.z):
                    out.append(self.center + quat_rotate(self.orientation, Vector3(sx, sy, sz)))
        return tuple(out)


# -- 2D predicates ---------------------------------------------------------------


def _point_in_circle(c: WorldCircle, x: float, y: float) -> bool:
    dx, dy = x - c.cx, y - c.cy
    return dx * dx + dy * dy <= c.radius * c.radius


def _point_in_rect(r: WorldRectangle, x: float, y: float) -> bool:
    lx, ly = r.to_local(x, y)
    return abs(lx) <= r.hx and abs(ly) <= r.hy


def _point_on_segment(px, py, ax, ay, bx, by) -> bool:
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    if abs(cross) > 1e-12 * (abs(bx - ax) + abs(by - ay) + 1.0):
        return False
    return min(ax, bx) - 1e-12 <= px <= max(ax, bx) + 1e-12 and min(ay, by) - 1e-12 <= py <= max(ay, by) + 1e-12


def _point_in_poly(p: WorldPolygon, x: float, y: float) -> bool:
    # Crossing number with an explicit boundary check (closed semantics).
    verts = p.vertices
    n = len(verts)
    inside = False
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        if _point_on_segment(x, y, ax, ay, bx, by):
            return True
        if (ay > y) != (by > y):
            t = (y - ay) / (by - ay)
            if x < ax + t * (bx - ax):
                inside = not inside
    return inside


def _segment_distance(px, py, ax, ay, bx, by) -> float:
    vx, vy = bx - ax, by - ay
    wx, wy = px - ax, py - ay
    seg_len2 = vx * vx + vy * vy
    if seg_len2 == 0.0:
        return math.hypot(wx, wy)
    t = max(0.0, min(1.0, (wx * vx + wy * vy) / seg_len2))
    return math.hypot(wx - t * vx, wy - t * vy)


def _poly_boundary_distance(p: WorldPolygon, x: float, y: float) -> float:
    verts = p.vertices
    n = len(verts)
    return min(
        _segment_distance(x, y, verts[i][0], verts[i][1], verts[(i + 1) % n][0], verts[(i + 1) % n][1])
        for i in range(n)
    )


def _as_poly(shape) -> WorldPolygon:
    if isinstance(shape, WorldPolygon):
        if not shape.convex:
            raise ConvexityError("polygon-versus-shape tests require a convex polygon")
        return shape
    return WorldPolygon(shape.corners(), True)


def _sat_convex(a: tuple[tuple[float, float], ...], b: tuple[tuple[float, float], ...]) -> bool:
    for verts in (a, b):
        n = len(verts)
        for i in range(n):
            ax, ay = verts[i]
            bx, by = verts[(i + 1) % n]
            nx, ny = ay - by, bx - ax  # outward/inward irrelevant for interval overlap
            amin = amax = a[0][0] * nx + a[0][1] * ny
            for vx, vy in a[1:]:
                d = vx * nx + vy * ny
                amin = d if d < amin else amin
                amax = d if d > amax else amax
            bmin = bmax = b[0][0] * nx + b[0][1] * ny
            for vx, vy in b[1:]:
                d = vx * nx + vy * ny
                bmin = d if d < bmin else bmin
                bmax = d if d > bmax else bmax
            if amax < bmin or bmax < amin:
                return False
    return True


def _circle_poly_intersects(c: WorldCircle, p: WorldPolygon) -> bool:
    if _point_in_poly(p, c.cx, c.cy):
        return True
    return _poly_boundary_distance(p, c.cx, c.cy) <= c.radius


def _intersects_2d(a, b) -> bool:
    if isinstance(a, WorldCircle) and isinstance(b, WorldCircle):
        dx, dy = a.cx - b.cx, a.cy - b.cy
        rr = a.radius + b.radius
        return dx * dx + dy * dy <= rr * rr
    if isinstance(a, WorldCircle) and isinstance(b, WorldRectangle):
        lx, ly = b.to_local(a.cx, a.cy)
        qx = min(max(lx, -b.hx), b.hx)
        qy = min(max(ly, -b.hy), b.hy)
        return (lx - qx) ** 2 + (ly - qy) ** 2 <= a.radius * a.radius
    if isinstance(b, WorldCircle):
        return _intersects_2d(b, a)
    if isinstance(a, WorldCircle):  # b is polygon
        return _circle_poly_intersects(a, _as_poly(b))
    return _sat_convex(_as_poly(a).vertices, _as_poly(b).vertices)


def _contains_2d(a, b) -> bool:
    if isinstance(b, WorldCircle):
        if isinstance(a, WorldCircle):
            return math.hypot(b.cx - a.cx, b.cy - a.cy) + b.radius <= a.radius
        if isinstance(a, WorldRectangle):
            lx, ly = a.to_local(b.cx, b.cy)
            return abs(lx) + b.radius <= a.hx and abs(ly) + b.radius <= a.hy
        poly = _as_poly(a)
        if not _point_in_poly(poly, b.cx, b.cy):
            return False
        return _poly_boundary_distance(poly, b.cx, b.cy) >= b.radius
    verts = _as_poly(b).vertices if not isinstance(b, WorldCircle) else ()
    if isinstance(a, WorldCircle):
        r2 = a.radius * a.radius
        return all((x - a.cx) ** 2 + (y - a.cy) ** 2 <= r2 for x, y in verts)
    if isinstance(a, WorldRectangle):
        return all(_point_in_rect(a, x, y) for x, y in verts)
    poly = _as_poly(a)
    return all(_point_in_poly(poly, x, y) for x, y in verts)


# -- 3D predicates ---------------------------------------------------------------


def _point_in_sphere(s: WorldSphere, p: Vector3) -> bool:
    return (p - s.center).dot(p - s.center) <= s.radius * s.radius


def _point_in_box(b: WorldBox, p: Vector3) -> bool:
    q = b.to_local(p)
    return abs(q.x) <= b.half.x and abs(q.y) <= b.half.y and abs(q.z) <= b.half.z


def _box_axes(b: WorldBox) -> tuple[Vector3, Vector3, Vector3]:
    return (
        quat_rotate(b.orientation, Vector3(1.0, 0.0, 0.0)),
        quat_rotate(b.orientation, Vector3(0.0, 1.0, 0.0)),
        quat_rotate(b.orientation, Vector3(0.0, 0.0, 1.0)),
    )


def _box_box_intersects(a: WorldBox, b: WorldBox) -> bool:
    # Separating-axis test over face normals and edge cross products.
    axes_a = _box_axes(a)
    axes_b = _box_axes(b)
    ha = (a.half.x, a.half.y, a.half.z)
    hb = (b.half.x, b.half.y, b.half.z)
    d = b.center - a.center
    candidates = list(axes_a) + list(axes_b)
    for ax in axes_a:
        for bx in axes_b:
            cr = ax.cross(bx)
            if cr.dot(cr) > 1e-12:
                candidates.append(cr)
    for axis in candidates:
        ra = sum(h * abs(axis.dot(u)) for h, u in zip(ha, axes_a))
        rb = sum(h * abs(axis.dot(u)) for h, u in zip(hb, axes_b))
        if abs(axis.dot(d)) > ra + rb + 1e-12:
            return False
    return True


def _intersects_3d(a, b) -> bool:
    if isinstance(a, WorldSphere) and isinstance(b, WorldSphere):
        rr = a.radius + b.radius
        d = a.center - b.center
        return d.dot(d) <= rr * rr
    if isinstance(a, WorldSphere) and isinstance(b, WorldBox):
        q = b.to_local(a.center)
        cx = min(max(q.x, -b.half.x), b.half.x)
        cy = min(max(q.y, -b.half.y), b.half.y)
        cz = min(max(q.z, -b.half.z), b.half.z)
        dx, dy, dz = q.x - cx, q.y - cy, q.z - cz
        return dx * dx + dy * dy + dz * dz <= a.radius * a.radius
    if isinstance(b, WorldSphere):
        return _intersects_3d(b, a)
    return _box_box_intersects(a, b)


def _contains_3d(a, b) -> bool:
    if isinstance(a, WorldSphere) and isinstance(b, WorldSphere):
        return (b.center - a.center).norm() + b.radius <= a.radius
    if isinstance(a, WorldSphere):
        return all(_point_in_sphere(a, c) for c in b.corners())
    if isinstance(b, WorldSphere):
        q = a.to_local(b.center)
        return (
            abs(q.x) + b.radius <= a.half.x
            and abs(q.y) + b.radius <= a.half.y
            and abs(q.z) + b.radius <= a.half.z
        )
    return all(_point_in_box(a, c) for c in b.corners())


def _ray_sphere(s: WorldSphere, ray: Ray) -> float | None:
    oc = ray.origin - s.center
    b = oc.dot(ray.direction)
    c = oc.dot(oc) - s.radius * s.radius
    disc = b * b - c
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    t0 = -b - root
    t1 = -b + root
    if t0 >= 0.0:
        return t0
    if t1 >= 0.0:
        return t1
    return None


def _ray_box(box: WorldBox, ray: Ray) -> float | None:
    # Slab test in the box's local frame.
    o = box.to_local(ray.origin)
    d = quat_rotate(box.orientation.conjugate(), ray.direction)
    tmin, tmax = -math.inf, math.inf
    for oc, dc, h in ((o.x, d.x, box.half.x), (o.y, d.y, box.half.y), (o.z, d.z, box.half.z)):
        if abs(dc) < 1e-15:
            if abs(oc) > h:
                return None
            continue
        t1 = (-h - oc) / dc
        t2 = (h - oc) / dc
        if t1 > t2:
            t1, t2 = t2, t1
        tmin = max(tmin, t1)
        tmax = min(tmax, t2)
        if tmin > tmax:
            return None
    if tmax < 0.0:
        return None
    return tmin if tmin >= 0.0 else tmax


# -- collider objects --------------------------------------------------------------


def _point2(p) -> tuple[float, float]:
    if isinstance(p, Vector3):
        return (p.x, p.y)
    if isinstance(p, (tuple, list)) and len(p) in (2, 3):
        return (float(p[0]), float(p[1]))
    raise TypeError("expected a Vector3 or an (x, y) pair")


def _point3(p) -> Vector3:
    if isinstance(p, Vector3):
        return p
    if isinstance(p, (tuple, list)) and len(p) == 3:
        return Vector3(float(p[0]), float(p[1]), float(p[2]))
    raise TypeError("expected a Vector3 or an (x, y, z) triple")


class Collider:
    """Base attachment: target transform/pose plus a local pose offset."""

    dimensions = 0

    def __init__(self, target=None, offset: Pose = _IDENTITY, name: str = ""):
        self.target = target
        self.offset = offset
        self.name = name

    @property
    def entity_name(self) -> str:
        if self.name:
            return self.name
        return getattr(self.target, "model_name", "")

    def attachment_pose(self) -> Pose:
        target = self.target
        if target is None:
            pose = _IDENTITY
        elif isinstance(target, Pose):
            pose = target
        else:
            if getattr(target, "_alive", True) is False:
                raise LifecycleError(f"collider target {self.entity_name!r} is not live")
            pose = target.pose
        if self.offset is _IDENTITY:
            return pose
        return pose_compose(pose, self.offset)

    def world_shape(self):
        raise NotImplementedError

    def _check_peer(self, other: "Collider") -> None:
        if other.dimensions != self.dimensions:
            raise TypeError(f"cannot mix {self.dimensions}D and {other.dimensions}D colliders")

    def intersects(self, other) -> bool:
        if isinstance(other, Collider):
            self._check_peer(other)
            if self.dimensions == 2:
                return _intersects_2d(self.world_shape(), other.world_shape())
            return _intersects_3d(self.world_shape(), other.world_shape())
        return self._contains_point(other)

    def contains(self, other) -> bool:
        if isinstance(other, Collider):
            self._check_peer(other)
            if self.dimensions == 2:
                return _contains_2d(self.world_shape(), other.world_shape())
            return _contains_3d(self.world_shape(), other.world_shape())
        return self._contains_point(other)

    def raycast(self, ray: Ray) -> Hit | None:
        raise NotImplementedError("raycast is supported by 3D colliders only")

    def _contains_point(self, p) -> bool:
        raise NotImplementedError


def _pose_xy_yaw(pose: Pose) -> tuple[float, float, float]:
    return (pose.position.x, pose.position.y, euler_from_quat(pose.orientation).yaw)


class CircleCollider2D(Collider):
    dimensions = 2

    def __init__(self, radius: float, target=None, offset: Pose = _IDENTITY, name: str = ""):
        if radius <= 0:
            raise ValueError("radius must be positive")
        super().__init__(target, offset, name)
        self.radius = radius

    def world_shape(self) -> WorldCircle:
        x, y, _ = _pose_xy_yaw(self.attachment_pose())
        return WorldCircle(x, y, self.radius)

    def _contains_point(self, p) -> bool:
        return _point_in_circle(self.world_shape(), *_point2(p))


class RectangleCollider2D(Collider):
    dimensions = 2

    def __init__(self, half_extents: tuple[float, float], target=None, offset: Pose = _IDENTITY, name: str = ""):
        hx, hy = half_extents
        if hx <= 0 or hy <= 0:
            raise ValueError("half extents must be positive")
        super().__init__(target, offset, name)
        self.half_extents = (float(hx), float(hy))

    def world_shape(self) -> WorldRectangle:
        x, y, yaw = _pose_xy_yaw(self.attachment_pose())
        return WorldRectangle(x, y, yaw, *self.half_extents)

    def _contains_point(self, p) -> bool:
        return _point_in_rect(self.world_shape(), *_point2(p))


class PolygonCollider2D(Collider):
    """Simple polygon given as counter-clockwise local vertices."""

    dimensions = 2

    def __init__(self, vertices, target=None, offset: Pose = _IDENTITY, name: str = ""):
        verts = tuple((float(x), float(y)) for x, y in vertices)
        if len(verts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        self._validate(verts)
        super().__init__(target, offset, name)
        self.vertices = verts
        self.convex = self._is_convex(verts)

    @staticmethod
    def _validate(verts) -> None:
        area2 = sum(
            verts[i][0] * verts[(i + 1) % len(verts)][1] - verts[(i + 1) % len(verts)][0] * verts[i][1]
            for i in range(len(verts))
        )
        if area2 <= 0:
            raise ValueError("polygon vertices must wind counter-clockwise")
        n = len(verts)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                if _segments_cross(verts[i], verts[(i + 1) % n], verts[j], verts[(j + 1) % n]):
                    raise ValueError("polygon must be simple (non-self-intersecting)")

    @staticmethod
    def _is_convex(verts) -> bool:
        n = len(verts)
        for i in range(n):
            ax, ay = verts[i]
            bx, by = verts[(i + 1) % n]
            cx, cy = verts[(i + 2) % n]
            if (bx - ax) * (cy - by) - (by - ay) * (cx - bx) < -1e-12:
                return False
        return True

    def world_shape(self) -> WorldPolygon:
        x, y, yaw = _pose_xy_yaw(self.attachment_pose())
        c, s = math.cos(yaw), math.sin(yaw)
        world = tuple((x + c * vx - s * vy, y + s * vx + c * vy) for vx, vy in self.vertices)
        return WorldPolygon(world, self.convex)

    def _contains_point(self, p) -> bool:
        return _point_in_poly(self.world_shape(), *_point2(p))


def _segments_cross(a, b, c, d) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return (o1 * o2 < 0) and (o3 * o4 < 0)


class SphereCollider3D(Collider):
    dimensions = 3

    def __init__(self, radius: float, target=None, offset: Pose = _IDENTITY, name: str = ""):
        if radius <= 0:
            raise ValueError("radius must be positive")
        super().__init__(target, offset, name)
        self.radius = radius

    def world_shape(self) -> WorldSphere:
        return WorldSphere(self.attachment_pose().position, self.radius)

    def _contains_point(self, p) -> bool:
        return _point_in_sphere(self.world_shape(), _point3(p))

    def raycast(self, ray: Ray) -> Hit | None:
        t = _ray_sphere(self.world_shape(), ray)
        if t is None:
            return None
        return Hit(self.entity_name, t, ray.point_at(t))


class BoxCollider3D(Collider):
    dimensions = 3

    def __init__(self, half_extents: Vector3, target=None, offset: Pose = _IDENTITY, name: str = ""):
        if half_extents.x <= 0 or half_extents.y <= 0 or half_extents.z <= 0:
            raise ValueError("half extents must be positive")
        super().__init__(target, offset, name)
        self.half_extents = half_extents

    def world_shape(self) -> WorldBox:
        pose = self.attachment_pose()
        return WorldBox(pose.position, pose.orientation.normalized(), self.half_extents)

    def _contains_point(self, p) -> bool:
        return _point_in_box(self.world_shape(), _point3(p))

    def raycast(self, ray: Ray) -> Hit | None:
        t = _ray_box(self.world_shape(), ray)
        if t is None:
            return None
        return Hit(self.entity_name, t, ray.point_at(t))
