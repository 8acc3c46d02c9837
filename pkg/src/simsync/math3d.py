"""Game math primitives: vectors, quaternions, roll-pitch-yaw angles, poses,
and the ray/plane/frustum types used for collision tests and culling.

Conventions:
  - Angles are radians everywhere.
  - Euler angles are roll-pitch-yaw applied extrinsically about the fixed
    world axes X, then Y, then Z.
  - Cameras look along their local +x axis with +z up (so "right" is -y).

All types are immutable; all functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TAU = 2.0 * math.pi

# Tolerance for "is this quaternion a unit rotation" checks.
UNIT_TOL = 1e-9

_GIMBAL_EPS = 1e-12


def lerp(a: float, b: float, t: float) -> float:
    """Linear interpolation a + (b - a) * t; t outside [0, 1] extrapolates.

    The t == 1 branch keeps both endpoints exact (the sum form only
    guarantees t == 0).
    """
    if t == 1.0:
        return b
    return a + (b - a) * t


def wrap_angle(theta: float) -> float:
    """Wrap an angle into [-pi, pi)."""
    return theta - TAU * math.floor((theta + math.pi) / TAU)


def lerp_angle(a: float, b: float, t: float) -> float:
    """Interpolate between two angles along the shortest arc.

    The delta is wrapped into (-pi, pi] so opposite angles move through +pi;
    the result is wrapped into [-pi, pi).
    """
    d = wrap_angle(b - a)
    if d == -math.pi:
        d = math.pi
    return wrap_angle(a + d * t)


@dataclass(frozen=True, slots=True)
class Vector3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, other: "Vector3") -> "Vector3":
        return Vector3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vector3") -> "Vector3":
        return Vector3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __mul__(self, k: float) -> "Vector3":
        return Vector3(self.x * k, self.y * k, self.z * k)

    __rmul__ = __mul__

    def __neg__(self) -> "Vector3":
        return Vector3(-self.x, -self.y, -self.z)

    def dot(self, other: "Vector3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vector3") -> "Vector3":
        return Vector3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> "Vector3":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero vector")
        return Vector3(self.x / n, self.y / n, self.z / n)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)


@dataclass(frozen=True, slots=True)
class Quaternion:
    """Rotation quaternion. The raw constructor does not normalize; use
    :meth:`normalized` or the factory functions when a unit rotation is
    required."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    w: float = 1.0

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w)

    def is_unit(self, tol: float = UNIT_TOL) -> bool:
        n2 = self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w
        return math.isfinite(n2) and abs(n2 - 1.0) <= 2.0 * tol

    def normalized(self) -> "Quaternion":
        n = self.norm()
        if n == 0.0 or not math.isfinite(n):
            raise ValueError("cannot normalize a degenerate quaternion")
        return Quaternion(self.x / n, self.y / n, self.z / n, self.w / n)

    def canonical(self) -> "Quaternion":
        """Flip sign so w >= 0 (both signs represent the same rotation)."""
        if self.w < 0.0:
            return Quaternion(-self.x, -self.y, -self.z, -self.w)
        return self

    def conjugate(self) -> "Quaternion":
        return Quaternion(-self.x, -self.y, -self.z, self.w)


@dataclass(frozen=True, slots=True)
class EulerRPY:
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0


@dataclass(frozen=True, slots=True)
class Pose:
    position: Vector3 = Vector3()
    orientation: Quaternion = Quaternion()


@dataclass(frozen=True, slots=True)
class Twist:
    linear: Vector3 = Vector3()
    angular: Vector3 = Vector3()


def _clamp01(v: float) -> float:
    if v != v:  # NaN clamps to 0 rather than poisoning comparisons
        return 0.0
    return 0.0 if v < 0.0 else 1.0 if v > 1.0 else v


@dataclass(frozen=True, slots=True)
class Color:
    """RGBA color; channels are clamped into [0, 1] on construction."""

    r: float = 0.0
    g: float = 0.0
    b: float = 0.0
    a: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "r", _clamp01(self.r))
        object.__setattr__(self, "g", _clamp01(self.g))
        object.__setattr__(self, "b", _clamp01(self.b))
        object.__setattr__(self, "a", _clamp01(self.a))


@dataclass(frozen=True, slots=True)
class Ray:
    """Origin plus unit direction; the direction is normalized on construction."""

    origin: Vector3
    direction: Vector3

    def __post_init__(self):
        object.__setattr__(self, "direction", self.direction.normalized())

    def point_at(self, t: float) -> Vector3:
        return self.origin + self.direction * t


@dataclass(frozen=True, slots=True)
class Plane:
    """The plane {p : normal . p + distance = 0}; normal is normalized on
    construction (distance is rescaled accordingly)."""

    normal: Vector3
    distance: float = 0.0

    def __post_init__(self):
        n = self.normal.norm()
        if n == 0.0:
            raise ValueError("plane normal must be nonzero")
        if abs(n - 1.0) > 1e-12:
            object.__setattr__(self, "normal", self.normal * (1.0 / n))
            object.__setattr__(self, "distance", self.distance / n)

    def signed_distance(self, p: Vector3) -> float:
        return self.normal.dot(p) + self.distance


@dataclass(frozen=True, slots=True)
class Frustum:
    """Six inward-facing planes in the order near, far, left, right, top,
    bottom. A point is inside when every signed distance is >= 0."""

    near: Plane
    far: Plane
    left: Plane
    right: Plane
    top: Plane
    bottom: Plane

    @property
    def planes(self) -> tuple[Plane, ...]:
        return (self.near, self.far, self.left, self.right, self.top, self.bottom)


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    """Hamilton product a * b (apply b first, then a)."""
    return Quaternion(
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
    )


def quat_from_axis_angle(axis: Vector3, angle: float) -> Quaternion:
    half = 0.5 * angle
    u = axis.normalized()
    s = math.sin(half)
    return Quaternion(u.x * s, u.y * s, u.z * s, math.cos(half))


def quat_from_euler(e: EulerRPY) -> Quaternion:
    """Quaternion for extrinsic X(roll) -> Y(pitch) -> Z(yaw) rotation.

    Returns the normalized, w >= 0 canonical form.
    """
    qx = quat_from_axis_angle(Vector3(1.0, 0.0, 0.0), e.roll)
    qy = quat_from_axis_angle(Vector3(0.0, 1.0, 0.0), e.pitch)
    qz = quat_from_axis_angle(Vector3(0.0, 0.0, 1.0), e.yaw)
    return quat_mul(qz, quat_mul(qy, qx)).normalized().canonical()


def euler_from_quat(q: Quaternion) -> EulerRPY:
    """Inverse of :func:`quat_from_euler` up to rotation equivalence.

    At gimbal lock (|pitch| = pi/2) the roll/yaw split is ambiguous; roll is
    set to 0 and the remaining rotation folded into yaw. Output ranges are
    roll, yaw in [-pi, pi) and pitch in [-pi/2, pi/2].
    """
    q = q.normalized()
    sinp = 2.0 * (q.w * q.y - q.x * q.z)
    if sinp >= 1.0 - _GIMBAL_EPS:
        yaw = math.atan2(2.0 * (q.y * q.z - q.w * q.x), 1.0 - 2.0 * (q.x * q.x + q.z * q.z))
        return EulerRPY(0.0, 0.5 * math.pi, wrap_angle(yaw))
    if sinp <= -1.0 + _GIMBAL_EPS:
        yaw = math.atan2(-2.0 * (q.y * q.z - q.w * q.x), 1.0 - 2.0 * (q.x * q.x + q.z * q.z))
        return EulerRPY(0.0, -0.5 * math.pi, wrap_angle(yaw))
    roll = math.atan2(2.0 * (q.w * q.x + q.y * q.z), 1.0 - 2.0 * (q.x * q.x + q.y * q.y))
    pitch = math.asin(sinp)
    yaw = math.atan2(2.0 * (q.w * q.z + q.x * q.y), 1.0 - 2.0 * (q.y * q.y + q.z * q.z))
    return EulerRPY(wrap_angle(roll), pitch, wrap_angle(yaw))


def quat_rotate(q: Quaternion, v: Vector3) -> Vector3:
    """Rotate v by the unit quaternion q (computes q * v * q^-1)."""
    # t = 2 * (q.xyz x v); v' = v + w*t + q.xyz x t
    tx = 2.0 * (q.y * v.z - q.z * v.y)
    ty = 2.0 * (q.z * v.x - q.x * v.z)
    tz = 2.0 * (q.x * v.y - q.y * v.x)
    return Vector3(
        v.x + q.w * tx + q.y * tz - q.z * ty,
        v.y + q.w * ty + q.z * tx - q.x * tz,
        v.z + q.w * tz + q.x * ty - q.y * tx,
    )


def pose_compose(parent: Pose, child: Pose) -> Pose:
    """Compose two poses: the child expressed in the parent frame, mapped to
    the world frame."""
    return Pose(
        parent.position + quat_rotate(parent.orientation, child.position),
        quat_mul(parent.orientation, child.orientation).normalized(),
    )


def ray_plane_intersect(ray: Ray, plane: Plane) -> float | None:
    """Distance along the ray to the plane, or None when the ray is parallel
    (|normal . direction| < 1e-12) or the intersection lies behind the origin."""
    denom = plane.normal.dot(ray.direction)
    if abs(denom) < 1e-12:
        return None
    t = -(plane.normal.dot(ray.origin) + plane.distance) / denom
    if t < 0.0:
        return None
    return t


def frustum_from_camera(camera: Pose, near: float, far: float, hfov: float, aspect: float) -> Frustum:
    """Viewing frustum for a camera posed in the world.

    The camera looks along its local +x axis with +z up; hfov is the full
    horizontal field of view and aspect is width/height.
    """
    if not (0.0 < near < far):
        raise ValueError("require 0 < near < far")
    if not (0.0 < hfov < math.pi):
        raise ValueError("hfov must lie in (0, pi)")
    if aspect <= 0.0:
        raise ValueError("aspect must be positive")

    tan_h = math.tan(0.5 * hfov)
    tan_v = tan_h / aspect
    q = camera.orientation.normalized()
    origin = camera.position
    forward = quat_rotate(q, Vector3(1.0, 0.0, 0.0))

    def world_plane(local_normal: Vector3, local_point: Vector3) -> Plane:
        n = quat_rotate(q, local_normal).normalized()
        p0 = origin + quat_rotate(q, local_point)
        return Plane(n, -n.dot(p0))

    near_plane = Plane(forward, -forward.dot(origin + forward * near))
    far_plane = Plane(-forward, forward.dot(origin + forward * far))
    # Side planes pass through the camera origin; normals tilt inward.
    left_plane = world_plane(Vector3(tan_h, -1.0, 0.0), Vector3())
    right_plane = world_plane(Vector3(tan_h, 1.0, 0.0), Vector3())
    top_plane = world_plane(Vector3(tan_v, 0.0, -1.0), Vector3())
    bottom_plane = world_plane(Vector3(tan_v, 0.0, 1.0), Vector3())
    return Frustum(near_plane, far_plane, left_plane, right_plane, top_plane, bottom_plane)


def frustum_contains(f: Frustum, p: Vector3) -> bool:
    """True when p lies inside or on the boundary of the frustum."""
    for plane in f.planes:
        if plane.signed_distance(p) < -1e-9:
            return False
    return True
