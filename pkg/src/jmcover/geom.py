"""Planar (and minimal 3D) geometry: windows, disks, intersections, measures."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

# Geometric tolerance, in units of the window diameter.
TOL = 1e-9

INSIDE = "inside"
BOUNDARY = "boundary"
OUTSIDE = "outside"


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Disk:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        if not all(math.isfinite(v) for v in c):
            raise GeometryError("disk center must be finite")
        r = float(self.radius)
        if not (math.isfinite(r) and r >= 0):
            raise GeometryError(f"invalid disk radius {self.radius!r}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)


def _shoelace(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


@dataclass(frozen=True, eq=False)
class Window:
    """A compact observation window: simple polygon, disc, or axis-aligned box.

    Polygons are stored counterclockwise. A box with ``d == 2`` also carries
    polygon vertices so that every 2D routine can treat it as a polygon.
    """

    kind: str
    vertices: np.ndarray | None = None
    center: tuple[float, ...] | None = None
    radius: float | None = None
    sides: tuple[float, ...] | None = None
    area: float = field(init=False)
    perimeter: float = field(init=False)

    def __post_init__(self):
        if self.kind in ("polygon", "box") and self.vertices is not None:
            v = np.array(self.vertices, dtype=float)
            if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
                raise GeometryError("polygon needs at least three 2D vertices")
            if not np.all(np.isfinite(v)):
                raise GeometryError("polygon vertices must be finite")
            a = _shoelace(v)
            if a < 0:
                v = v[::-1].copy()
                a = -a
            diam = float(np.max(np.ptp(v, axis=0)))
            if a <= TOL * max(diam, 1.0) ** 2:
                raise GeometryError("degenerate polygon (area ~ 0)")
            m = len(v)
            for i in range(m):
                for j in range(i + 2, m):
                    if i == 0 and j == m - 1:
                        continue
                    if _segments_cross(v[i], v[(i + 1) % m], v[j], v[(j + 1) % m]):
                        raise GeometryError("polygon is not simple")
            v.setflags(write=False)
            object.__setattr__(self, "vertices", v)
            edges = np.roll(v, -1, axis=0) - v
            object.__setattr__(self, "area", a)
            object.__setattr__(self, "perimeter", float(np.sum(np.hypot(edges[:, 0], edges[:, 1]))))
        elif self.kind == "disc":
            r = float(self.radius)
            if not (math.isfinite(r) and r > 0):
                raise GeometryError("disc radius must be positive")
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))
            object.__setattr__(self, "area", math.pi * r * r)
            object.__setattr__(self, "perimeter", 2 * math.pi * r)
        elif self.kind == "box":
            s = tuple(float(x) for x in self.sides)
            if not all(x > 0 and math.isfinite(x) for x in s):
                raise GeometryError("box sides must be positive")
            object.__setattr__(self, "sides", s)
            object.__setattr__(self, "area", float(np.prod(s)))
            surface = sum(float(np.prod(s)) / x for x in s) * 2 if len(s) > 1 else 2.0
            object.__setattr__(self, "perimeter", surface)
        else:
            raise GeometryError(f"unknown window kind {self.kind!r}")

    # constructors

    @classmethod
    def polygon(cls, vertices: Sequence[Sequence[float]]) -> "Window":
        return cls("polygon", vertices=np.asarray(vertices, dtype=float))

    @classmethod
    def disc(cls, center: Sequence[float], radius: float) -> "Window":
        return cls("disc", center=tuple(center), radius=radius)

    @classmethod
    def box(cls, sides: Sequence[float]) -> "Window":
        sides = tuple(float(s) for s in sides)
        if len(sides) == 2:
            a, b = sides
            verts = np.array([[0, 0], [a, 0], [a, b], [0, b]], dtype=float)
            return cls("box", vertices=verts, sides=sides)
        return cls("box", sides=sides)

    @classmethod
    def unit_square(cls) -> "Window":
        return cls.box((1.0, 1.0))

    # properties

    @property
    def d(self) -> int:
        if self.kind == "box":
            return len(self.sides)
        return 2

    @property
    def is_polygonal(self) -> bool:
        return self.vertices is not None

    @property
    def is_convex(self) -> bool:
        if self.kind in ("disc", "box"):
            return True
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        return bool(np.all(cross >= -TOL))

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        if self.vertices is not None:
            return self.vertices.min(axis=0), self.vertices.max(axis=0)
        if self.kind == "disc":
            c = np.array(self.center)
            return c - self.radius, c + self.radius
        return np.zeros(self.d), np.array(self.sides)

    @property
    def diameter(self) -> float:
        if self.kind == "disc":
            return 2 * self.radius
        if self.vertices is not None:
            v = self.vertices
            diff = v[:, None, :] - v[None, :, :]
            return float(np.sqrt((diff**2).sum(-1)).max())
        return float(np.sqrt(sum(s * s for s in self.sides)))

    @property
    def inradius(self) -> float:
        """Inradius proxy ``2|A|/|dA|``: exact for discs, boxes and triangles."""
        if self.kind == "box" and self.d != 2:
            return min(self.sides) / 2
        return 2 * self.area / self.perimeter

    def scaled(self, factor: float) -> "Window":
        """The dilation ``{L x : x in A}`` about the origin."""
        if self.kind == "disc":
            return Window.disc(tuple(factor * c for c in self.center), factor * self.radius)
        if self.kind == "box":
            return Window.box(tuple(factor * s for s in self.sides))
        return Window.polygon(self.vertices * factor)

    # vectorised predicates

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        v = self.vertices
        return v, np.roll(v, -1, axis=0)

    def boundary_distance(self, pts) -> np.ndarray:
        """Unsigned distance from each point to the window boundary."""
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "disc":
            return np.abs(np.hypot(*(p - np.array(self.center)).T) - self.radius)
        if self.vertices is not None:
            a, b = self.edges()
            ab = b - a
            ap = p[:, None, :] - a[None, :, :]
            u = np.clip((ap * ab).sum(-1) / (ab * ab).sum(-1), 0.0, 1.0)
            proj = a[None] + u[..., None] * ab[None]
            return np.sqrt(((p[:, None, :] - proj) ** 2).sum(-1)).min(axis=1)
        s = np.array(self.sides)
        inside = np.all((p >= 0) & (p <= s), axis=1)
        din = np.minimum(p, s - p).min(axis=1)
        q = np.clip(p, 0, s)
        dout = np.sqrt(((p - q) ** 2).sum(-1))
        return np.where(inside, din, dout)

    def contains(self, pts) -> np.ndarray:
        """Closed containment (points on the boundary count as inside)."""
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "disc":
            return np.hypot(*(p - np.array(self.center)).T) <= self.radius
        if self.kind == "box":
            s = np.array(self.sides)
            return np.all((p >= 0) & (p <= s), axis=1)
        return winding_number(p, self.vertices) != 0

    def distance(self, pts) -> np.ndarray:
        """Distance from each point to the window (zero inside)."""
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "disc":
            return np.maximum(np.hypot(*(p - np.array(self.center)).T) - self.radius, 0.0)
        if self.vertices is not None:
            return np.where(self.contains(p), 0.0, self.boundary_distance(p))
        s = np.array(self.sides)
        q = np.clip(p, 0, s)
        return np.sqrt(((p - q) ** 2).sum(-1))

    def project(self, pts) -> np.ndarray:
        """Nearest point of the window to each point."""
        p = np.atleast_2d(np.asarray(pts, dtype=float)).copy()
        if self.kind == "disc":
            c = np.array(self.center)
            r = np.hypot(*(p - c).T)
            out = r > self.radius
            p[out] = c + (p[out] - c) * (self.radius / r[out])[:, None]
            return p
        if self.vertices is not None:
            out = ~self.contains(p)
            if np.any(out):
                q = p[out]
                a, b = self.edges()
                ab = b - a
                aq = q[:, None, :] - a[None]
                u = np.clip((aq * ab).sum(-1) / (ab * ab).sum(-1), 0.0, 1.0)
                proj = a[None] + u[..., None] * ab[None]
                dist = ((q[:, None, :] - proj) ** 2).sum(-1)
                p[out] = proj[np.arange(len(q)), dist.argmin(axis=1)]
            return p
        return np.clip(p, 0, np.array(self.sides))

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` iid uniform points, by rejection from the bounding box."""
        lo, hi = self.bbox
        out = np.empty((0, len(lo)))
        frac = self.area / float(np.prod(hi - lo))
        while len(out) < n:
            m = int((n - len(out)) / frac * 1.1) + 8
            cand = lo + (hi - lo) * rng.random((m, len(lo)))
            out = np.vstack([out, cand[self.contains(cand)]])
        return out[:n]

    # serialisation

    def to_json(self) -> dict:
        if self.kind == "disc":
            return {"kind": "disc", "center": list(self.center), "radius": self.radius}
        if self.kind == "box":
            return {"kind": "box", "d": self.d, "sides": list(self.sides)}
        return {"kind": "polygon", "vertices": self.vertices.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Window":
        kind = obj.get("kind")
        if kind == "polygon":
            return cls.polygon(obj["vertices"])
        if kind == "disc":
            return cls.disc(obj["center"], obj["radius"])
        if kind == "box":
            sides = obj["sides"]
            if "d" in obj and int(obj["d"]) != len(sides):
                raise GeometryError("box 'd' does not match number of sides")
            return cls.box(sides)
        raise GeometryError(f"unknown window kind {kind!r}")

    def __repr__(self):
        return f"Window({json.dumps(self.to_json())})"

    def __eq__(self, other):
        if not isinstance(other, Window):
            return NotImplemented
        return self.to_json() == other.to_json()

    def __hash__(self):
        return hash(json.dumps(self.to_json(), sort_keys=True))


BUILTIN_WINDOWS = {
    "square": lambda: Window.unit_square(),
    "disc": lambda: Window.disc((0.5, 0.5), 0.45),
    "triangle": lambda: Window.polygon([[0, 0], [1, 0], [0, 1]]),
    "cube": lambda: Window.box((1.0, 1.0, 1.0)),
}


def parse_window(spec: str) -> Window:
    """Builtin name, inline JSON, or path to a JSON file."""
    if spec in BUILTIN_WINDOWS:
        return BUILTIN_WINDOWS[spec]()
    text = spec
    if not spec.lstrip().startswith("{"):
        path = Path(spec)
        if not path.exists():
            raise GeometryError(f"unknown window {spec!r}")
        text = path.read_text()
    return Window.from_json(json.loads(text))


def winding_number(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Winding number of ``poly`` around each point (nonzero means inside)."""
    p = np.atleast_2d(pts)
    a = poly[None, :, :]
    b = np.roll(poly, -1, axis=0)[None, :, :]
    px, py = p[:, 0:1], p[:, 1:2]
    ax, ay, bx, by = a[..., 0], a[..., 1], b[..., 0], b[..., 1]
    cross = (bx - ax) * (py - ay) - (px - ax) * (by - ay)
    up = (ay <= py) & (by > py) & (cross > 0)
    down = (ay > py) & (by <= py) & (cross < 0)
    wn = up.sum(axis=1) - down.sum(axis=1)
    # closed set: points on an edge count as inside
    on_edge = np.zeros(len(p), dtype=bool)
    ab = b - a
    ap = p[:, None, :] - a
    denom = (ab * ab).sum(-1)
    u = (ap * ab).sum(-1) / denom
    on_seg = (u >= 0) & (u <= 1) & (np.abs(cross) <= 1e-15 * np.sqrt(denom) + 0.0)
    on_edge |= on_seg.any(axis=1)
    return np.where(on_edge & (wn == 0), 1, wn)


def window_area(w: Window) -> float:
    return w.area


def window_perimeter(w: Window) -> float:
    return w.perimeter


def locate_point(p, w: Window, tol: float = TOL) -> str:
    """Classify ``p`` as inside, boundary (within ``tol`` of the boundary) or outside."""
    if tol <= 0:
        raise GeometryError("tol must be positive")
    p = np.asarray(p, dtype=float)
    if float(w.boundary_distance(p)[0]) <= tol:
        return BOUNDARY
    return INSIDE if bool(w.contains(p)[0]) else OUTSIDE


def circle_circle_intersections(a: Disk, b: Disk, tol: float = TOL):
    """Intersection points of two circle boundaries.

    Returns ``(points, degenerate)``. Tangency within ``tol`` gives a single
    point; concentric or identical circles give no points and
    ``degenerate=True``.
    """
    (x1, y1), r1 = a.center[:2], a.radius
    (x2, y2), r2 = b.center[:2], b.radius
    dx, dy = x2 - x1, y2 - y1
    dist = math.hypot(dx, dy)
    if dist <= tol:
        return [], True
    if dist > r1 + r2 + tol or dist < abs(r1 - r2) - tol:
        return [], False
    along = (dist * dist + r1 * r1 - r2 * r2) / (2 * dist)
    h2 = r1 * r1 - along * along
    ux, uy = dx / dist, dy / dist
    mx, my = x1 + along * ux, y1 + along * uy
    if abs(dist - (r1 + r2)) <= tol or abs(dist - abs(r1 - r2)) <= tol or h2 <= 0:
        return [(mx, my)], False
    h = math.sqrt(h2)
    return [(mx - h * uy, my + h * ux), (mx + h * uy, my - h * ux)], False


def circle_boundary_intersections(a: Disk, w: Window, tol: float = TOL) -> list[tuple[float, float]]:
    """Points where the circle of ``a`` crosses the window boundary."""
    if w.d != 2:
        raise GeometryError("circle_boundary_intersections needs a 2D window")
    if w.kind == "disc":
        pts, _ = circle_circle_intersections(a, Disk(w.center, w.radius), tol)
        return pts
    out: list[tuple[float, float]] = []
    for (ax, ay), (bx, by) in zip(*w.edges()):
        for u in _segment_circle_params(ax, ay, bx, by, a.center[0], a.center[1], a.radius, tol):
            p = (ax + u * (bx - ax), ay + u * (by - ay))
            if not any(math.hypot(p[0] - q[0], p[1] - q[1]) <= tol for q in out):
                out.append(p)
    return out


def _segment_circle_params(ax, ay, bx, by, cx, cy, r, tol):
    ex, ey = bx - ax, by - ay
    fx, fy = ax - cx, ay - cy
    A = ex * ex + ey * ey
    B = 2 * (fx * ex + fy * ey)
    C = fx * fx + fy * fy - r * r
    disc = B * B - 4 * A * C
    L = math.sqrt(A)
    if disc < 0:
        # tangency within tol
        u = -B / (2 * A)
        if 0 <= u <= 1:
            px, py = fx + u * ex, fy + u * ey
            if abs(math.hypot(px, py) - r) <= tol:
                return [u]
        return []
    sq = math.sqrt(disc)
    us = sorted({(-B - sq) / (2 * A), (-B + sq) / (2 * A)})
    return [u for u in us if -tol / L <= u <= 1 + tol / L]


def covering_number(w: Window, r: float) -> int:
    """Upper bound on the covering number by radius-``r`` balls centred in ``w``.

    Grid construction: squares of side ``r*sqrt(2)`` meeting ``w`` each get a
    ball at their centre; squares whose centre lies outside ``w`` are split
    into four, each child getting a ball at the projection of its centre onto
    ``w``. Not the exact minimum.
    """
    if not r > 0:
        raise GeometryError("r must be positive")
    if w.d != 2:
        raise GeometryError("covering_number is 2D only")
    s = r * math.sqrt(2)
    lo, hi = w.bbox
    nx, ny = (max(1, math.ceil((h - l) / s - 1e-9)) for l, h in zip(lo, hi))
    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    centers = lo + s * (np.stack([ix.ravel(), iy.ravel()], axis=1) + 0.5)
    inside = w.contains(centers)
    count = int(inside.sum())
    rest = centers[~inside]
    if len(rest):
        offs = np.array([[-1, -1], [-1, 1], [1, -1], [1, 1]]) * (s / 4)
        kids = (rest[:, None, :] + offs[None]).reshape(-1, 2)
        # a child square of half-diagonal s/(2*sqrt 2) meets w only if its centre is that close
        count += int(np.sum(w.distance(kids) <= s / (2 * math.sqrt(2))))
    return count
