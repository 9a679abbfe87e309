"""2D geometric primitives: vectors, poses, oriented rectangles, and queries.

All geometry is double precision. Boundary contact counts as "inside" for
containment and as "not colliding" for overlap, so flush placements are legal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EPS = 1e-9
TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    t = math.fmod(theta, TWO_PI)
    if t <= -math.pi:
        t += TWO_PI
    elif t > math.pi:
        t -= TWO_PI
    return t


@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def scale(self, k: float) -> "Vec2":
        return Vec2(self.x * k, self.y * k)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def dist(self, other: "Vec2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def rotate(self, theta: float) -> "Vec2":
        c, s = math.cos(theta), math.sin(theta)
        return Vec2(c * self.x - s * self.y, s * self.x + c * self.y)


@dataclass(frozen=True)
class Pose2:
    position: Vec2
    theta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", wrap_angle(self.theta))


@dataclass(frozen=True)
class OrientedRect:
    """Rectangle with half-extents half_w (local x) and half_l (local y)."""

    center: Vec2
    half_w: float
    half_l: float
    theta: float

    def __post_init__(self) -> None:
        if self.half_w <= 0.0 or self.half_l <= 0.0:
            raise ValueError(f"rect extents must be positive: {self.half_w}, {self.half_l}")

    def corners(self) -> list[Vec2]:
        c, s = math.cos(self.theta), math.sin(self.theta)
        out = []
        for sx, sy in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
            lx, ly = sx * self.half_w, sy * self.half_l
            out.append(Vec2(self.center.x + c * lx - s * ly, self.center.y + s * lx + c * ly))
        return out

    def to_local(self, p: Vec2) -> Vec2:
        d = p - self.center
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Vec2(c * d.x + s * d.y, -s * d.x + c * d.y)

    def to_world(self, p: Vec2) -> Vec2:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Vec2(self.center.x + c * p.x - s * p.y, self.center.y + s * p.x + c * p.y)


def to_frame(p: Vec2, frame: Pose2) -> Vec2:
    """Express world point p in the coordinate frame at pose `frame`."""
    d = p - frame.position
    c, s = math.cos(frame.theta), math.sin(frame.theta)
    return Vec2(c * d.x + s * d.y, -s * d.x + c * d.y)


def from_frame(p: Vec2, frame: Pose2) -> Vec2:
    """Inverse of to_frame: map a frame-local point back to world coordinates."""
    c, s = math.cos(frame.theta), math.sin(frame.theta)
    return Vec2(frame.position.x + c * p.x - s * p.y, frame.position.y + s * p.x + c * p.y)


def point_in_rect(p: Vec2, r: OrientedRect) -> bool:
    """True iff p lies inside or on the boundary of r."""
    q = r.to_local(p)
    return abs(q.x) <= r.half_w + EPS and abs(q.y) <= r.half_l + EPS


def rect_in_rect(inner: OrientedRect, outer: OrientedRect) -> bool:
    """True iff inner lies fully inside outer (boundary contact allowed)."""
    return all(point_in_rect(c, outer) for c in inner.corners())


def _project(corners: list[Vec2], axis: Vec2) -> tuple[float, float]:
    vals = [c.dot(axis) for c in corners]
    return min(vals), max(vals)


def rects_overlap(a: OrientedRect, b: OrientedRect) -> bool:
    """Separating-axis test: true iff the interiors intersect.

    Touching boundaries do not count as overlap.
    """
    ca, cb = a.corners(), b.corners()
    for rect in (a, b):
        c, s = math.cos(rect.theta), math.sin(rect.theta)
        for axis in (Vec2(c, s), Vec2(-s, c)):
            amin, amax = _project(ca, axis)
            bmin, bmax = _project(cb, axis)
            if amax <= bmin + EPS or bmax <= amin + EPS:
                return False
    return True


def nearest_point_on_rect(p: Vec2, r: OrientedRect) -> tuple[Vec2, float]:
    """Nearest point of r to p and its distance; (p, 0) when p lies inside r."""
    q = r.to_local(p)
    cx = min(max(q.x, -r.half_w), r.half_w)
    cy = min(max(q.y, -r.half_l), r.half_l)
    if cx == q.x and cy == q.y:
        return p, 0.0
    nearest = r.to_world(Vec2(cx, cy))
    return nearest, p.dist(nearest)


def nearest_point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> tuple[Vec2, float]:
    """Nearest point on segment ab to p and its distance."""
    ab = b - a
    denom = ab.dot(ab)
    if denom <= 0.0:
        return a, p.dist(a)
    t = min(max((p - a).dot(ab) / denom, 0.0), 1.0)
    q = Vec2(a.x + t * ab.x, a.y + t * ab.y)
    return q, p.dist(q)


def segment_crosses_rect_interior(a: Vec2, b: Vec2, r: OrientedRect) -> bool:
    """True iff the open segment ab passes through the interior of r.

    Grazing the boundary does not count. Uses slab clipping in r's frame.
    """
    p0, p1 = r.to_local(a), r.to_local(b)
    dx, dy = p1.x - p0.x, p1.y - p0.y
    t0, t1 = 0.0, 1.0
    for start, delta, half in ((p0.x, dx, r.half_w), (p0.y, dy, r.half_l)):
        if abs(delta) < EPS:
            if abs(start) >= half - EPS:
                return False
            continue
        ta = (-half - start) / delta
        tb = (half - start) / delta
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 >= t1:
            return False
    # Positive-length intersection with the open box means interior crossing.
    return (t1 - t0) > 1e-12


def circle_rect_overlap(center: Vec2, radius: float, r: OrientedRect) -> bool:
    """True iff the open disc intersects the interior of r (touching is not overlap)."""
    _, d = nearest_point_on_rect(center, r)
    return d < radius - EPS


def circle_in_rect(center: Vec2, radius: float, r: OrientedRect) -> bool:
    """True iff the disc lies fully inside r (boundary contact allowed)."""
    q = r.to_local(center)
    return abs(q.x) <= r.half_w - radius + EPS and abs(q.y) <= r.half_l - radius + EPS


def angle_between_axes(theta_a: float, theta_b: float) -> float:
    """Absolute angle in [0, pi/2] between two undirected axes."""
    d = math.fmod(theta_a - theta_b, math.pi)
    if d < 0:
        d += math.pi
    if d > math.pi / 2:
        d = math.pi - d
    return d
