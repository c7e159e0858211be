"""Primitive solids: interval, boxes, balls, and polygons."""

from __future__ import annotations

import numpy as np

from pinnkit.geometry.base import EPS_BOUNDARY, Geometry, GeometryError, as_rng

EPS = EPS_BOUNDARY


class Interval(Geometry):
    dim = 1

    def __init__(self, a: float, b: float):
        if not a < b:
            raise GeometryError(f"interval needs a < b, got [{a}, {b}]")
        self.a, self.b = float(a), float(b)

    def __repr__(self) -> str:
        return f"Interval({self.a}, {self.b})"

    def _inside(self, x):
        return (x[:, 0] >= self.a - EPS) & (x[:, 0] <= self.b + EPS)

    def _on_boundary(self, x):
        return (np.abs(x[:, 0] - self.a) <= EPS) | (np.abs(x[:, 0] - self.b) <= EPS)

    def _normals(self, x):
        n = np.where(np.abs(x[:, 0] - self.a) <= np.abs(x[:, 0] - self.b), -1.0, 1.0)
        return n[:, None], np.zeros(len(x), dtype=bool)

    def bbox(self):
        return np.array([self.a]), np.array([self.b])

    def boundary_measure(self) -> float:
        return 2.0

    def _sample_boundary(self, n, rng):
        # both ends equally often, in random order
        ends = np.resize(np.array([self.a, self.b]), n)
        if n % 2:
            ends[-1] = rng.choice([self.a, self.b])
        return rng.permutation(ends)[:, None]

    def _grid_boundary(self, n):
        if n == 1:
            return np.array([[self.a]])
        return np.resize(np.array([self.a, self.b]), n)[:, None]

    def uniform_points(self, n: int, boundary: bool = True) -> np.ndarray:
        if n < 1:
            raise GeometryError("n must be >= 1")
        if boundary:
            return np.linspace(self.a, self.b, n)[:, None]
        h = (self.b - self.a) / (n + 1)
        return np.linspace(self.a + h, self.b - h, n)[:, None]

    def random_points(self, n: int, rng=None) -> np.ndarray:
        if n < 1:
            raise GeometryError("n must be >= 1")
        return as_rng(rng).uniform(self.a, self.b, size=(n, 1))

    def periodic_point(self, x, component: int = 0):
        x, single = self._points(x)
        y = x.copy()
        y[:, 0] = self.a + self.b - x[:, 0]
        return y[0] if single else y


class Hypercube(Geometry):
    """Axis-aligned box ``[lo, hi]``."""

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise GeometryError("box corners must be vectors of equal length")
        if not np.all(self.lo < self.hi):
            raise GeometryError(f"box needs lo < hi componentwise, got {self.lo}, {self.hi}")
        self.dim = self.lo.size

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.lo.tolist()}, {self.hi.tolist()})"

    def _inside(self, x):
        return np.all((x >= self.lo - EPS) & (x <= self.hi + EPS), axis=1)

    def _faces(self, x):
        return np.abs(x - self.lo) <= EPS, np.abs(x - self.hi) <= EPS

    def _on_boundary(self, x):
        at_lo, at_hi = self._faces(x)
        return self._inside(x) & np.any(at_lo | at_hi, axis=1)

    def _normals(self, x):
        at_lo, at_hi = self._faces(x)
        n = at_hi.astype(float) - at_lo.astype(float)
        count = (at_lo | at_hi).sum(axis=1)
        ambiguous = count != 1
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        return np.divide(n, norm, out=np.zeros_like(n), where=norm > 0), ambiguous

    def bbox(self):
        return self.lo.copy(), self.hi.copy()

    def _face_areas(self) -> np.ndarray:
        side = self.hi - self.lo
        if self.dim == 1:
            return np.ones(1)
        return np.array([np.prod(np.delete(side, i)) for i in range(self.dim)])

    def boundary_measure(self) -> float:
        return float(2 * self._face_areas().sum())

    def random_points(self, n: int, rng=None) -> np.ndarray:
        if n < 1:
            raise GeometryError("n must be >= 1")
        return as_rng(rng).uniform(self.lo, self.hi, size=(n, self.dim))

    def _sample_boundary(self, n, rng):
        areas = np.repeat(self._face_areas(), 2)
        face = rng.choice(2 * self.dim, size=n, p=areas / areas.sum())
        pts = rng.uniform(self.lo, self.hi, size=(n, self.dim))
        axis, side = face // 2, face % 2
        pts[np.arange(n), axis] = np.where(side == 0, self.lo[axis], self.hi[axis])
        return pts

    def _grid_boundary(self, n):
        if self.dim == 2:
            (x0, y0), (x1, y1) = self.lo, self.hi
            corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
            return _perimeter_points(corners, n)
        # one grid per face, spacing chosen from the total surface area
        h = (self.boundary_measure() / n) ** (1.0 / (self.dim - 1))
        out = []
        for axis in range(self.dim):
            others = [i for i in range(self.dim) if i != axis]
            grids = [np.linspace(self.lo[i], self.hi[i], max(int(round((self.hi[i] - self.lo[i]) / h)), 1) + 1)
                     for i in others]
            mesh = np.stack(np.meshgrid(*grids, indexing="ij"), -1).reshape(-1, self.dim - 1)
            for value in (self.lo[axis], self.hi[axis]):
                face = np.empty((len(mesh), self.dim))
                face[:, others] = mesh
                face[:, axis] = value
                out.append(face)
        return np.unique(np.concatenate(out), axis=0)

    def periodic_point(self, x, component: int):
        x, single = self._points(x)
        y = x.copy()
        y[:, component] = self.lo[component] + self.hi[component] - x[:, component]
        return y[0] if single else y


class Rectangle(Hypercube):
    def __init__(self, lo, hi):
        super().__init__(lo, hi)
        if self.dim != 2:
            raise GeometryError("rectangle corners must be 2-d")


class Cuboid(Hypercube):
    def __init__(self, lo, hi):
        super().__init__(lo, hi)
        if self.dim != 3:
            raise GeometryError("cuboid corners must be 3-d")


class Hypersphere(Geometry):
    def __init__(self, center, radius: float):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        if self.radius <= 0:
            raise GeometryError("radius must be positive")
        self.dim = self.center.size

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.center.tolist()}, {self.radius})"

    def _dist(self, x):
        return np.linalg.norm(x - self.center, axis=1)

    def _inside(self, x):
        return self._dist(x) <= self.radius + EPS

    def _on_boundary(self, x):
        return np.abs(self._dist(x) - self.radius) <= EPS

    def _normals(self, x):
        v = x - self.center
        r = np.linalg.norm(v, axis=1, keepdims=True)
        ambiguous = r[:, 0] == 0
        return np.divide(v, r, out=np.zeros_like(v), where=r > 0), ambiguous

    def bbox(self):
        return self.center - self.radius, self.center + self.radius

    def boundary_measure(self) -> float:
        if self.dim == 2:
            return 2 * np.pi * self.radius
        if self.dim == 3:
            return 4 * np.pi * self.radius ** 2
        from math import gamma
        d = self.dim
        return 2 * np.pi ** (d / 2) / gamma(d / 2) * self.radius ** (d - 1)

    def _sample_boundary(self, n, rng):
        g = rng.standard_normal((n, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return self.center + self.radius * g

    def _grid_boundary(self, n):
        if self.dim == 2:
            theta = np.linspace(0, 2 * np.pi, n, endpoint=False)
            return self.center + self.radius * np.stack([np.cos(theta), np.sin(theta)], 1)
        if self.dim == 3:
            # Fibonacci lattice: near-equal area per point
            i = np.arange(n) + 0.5
            phi = np.arccos(1 - 2 * i / n)
            theta = np.pi * (1 + 5 ** 0.5) * i
            u = np.stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], 1)
            return self.center + self.radius * u
        return super()._grid_boundary(n)


class Disk(Hypersphere):
    def __init__(self, center, radius: float):
        super().__init__(center, radius)
        if self.dim != 2:
            raise GeometryError("disk center must be 2-d")


class Sphere(Hypersphere):
    def __init__(self, center, radius: float):
        super().__init__(center, radius)
        if self.dim != 3:
            raise GeometryError("sphere center must be 3-d")


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        return True
    # collinear overlap
    def on_seg(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))
    return ((o1 == 0 and on_seg(p1, p2, q1)) or (o2 == 0 and on_seg(p1, p2, q2))
            or (o3 == 0 and on_seg(q1, q2, p1)) or (o4 == 0 and on_seg(q1, q2, p2)))


def _perimeter_points(vertices: np.ndarray, n: int) -> np.ndarray:
    edges = np.roll(vertices, -1, axis=0) - vertices
    lengths = np.linalg.norm(edges, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    s = np.linspace(0, cum[-1], n, endpoint=False)
    k = np.searchsorted(cum, s, side="right") - 1
    t = (s - cum[k]) / lengths[k]
    return vertices[k] + t[:, None] * edges[k]


class Polygon(Geometry):
    """Simple polygon given by its vertices (either orientation)."""

    dim = 2

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise GeometryError("polygon needs at least three 2-d vertices")
        area2 = np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        if abs(area2) < 1e-14:
            raise GeometryError("degenerate polygon")
        if area2 < 0:
            v = v[::-1].copy()  # counter-clockwise
        self.vertices = v
        self.area = abs(area2) / 2
        n = len(v)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                    raise GeometryError("polygon is not simple (edges intersect)")
        self.edges = np.roll(v, -1, axis=0) - v
        self.lengths = np.linalg.norm(self.edges, axis=1)
        # outward normal of a counter-clockwise edge (dx, dy) is (dy, -dx)
        self.edge_normals = np.stack([self.edges[:, 1], -self.edges[:, 0]], 1) / self.lengths[:, None]

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.vertices.tolist()})"

    def _edge_distances(self, x):
        d = x[:, None, :] - self.vertices[None]
        t = np.clip(np.einsum("nkd,kd->nk", d, self.edges) / self.lengths ** 2, 0, 1)
        closest = self.vertices[None] + t[..., None] * self.edges[None]
        return np.linalg.norm(x[:, None, :] - closest, axis=2)

    def _inside(self, x):
        px, py = x[:, 0:1], x[:, 1:2]
        x0, y0 = self.vertices[:, 0], self.vertices[:, 1]
        x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
        crosses = (y0 > py) != (y1 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        odd = np.sum(crosses & (px < xint), axis=1) % 2 == 1
        return odd | self._on_boundary(x)

    def _on_boundary(self, x):
        return np.min(self._edge_distances(x), axis=1) <= EPS

    def _normals(self, x):
        near = self._edge_distances(x) <= EPS
        n = near.astype(float) @ self.edge_normals
        count = near.sum(axis=1)
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        unit = np.divide(n, norm, out=np.zeros_like(n), where=norm > 0)
        # at a vertex two edges meet; only collinear edges give a defined normal
        ambiguous = (count == 0) | ((count > 1) & ~np.all(
            np.abs(near.astype(float) @ self.edge_normals / np.maximum(count, 1)[:, None] - unit) < 1e-12, axis=1))
        return unit, ambiguous

    def bbox(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def boundary_measure(self) -> float:
        return float(self.lengths.sum())

    def _sample_boundary(self, n, rng):
        k = rng.choice(len(self.vertices), size=n, p=self.lengths / self.lengths.sum())
        t = rng.uniform(0, 1, size=n)
        return self.vertices[k] + t[:, None] * self.edges[k]

    def _grid_boundary(self, n):
        return _perimeter_points(self.vertices, n)


class Triangle(Polygon):
    def __init__(self, p1, p2, p3):
        super().__init__([p1, p2, p3])
