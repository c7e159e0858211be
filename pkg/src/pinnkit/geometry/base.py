"""Geometry interface shared by primitives and CSG nodes."""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

EPS_BOUNDARY = 1e-8
RETRY_FACTOR = 10_000


class GeometryError(ValueError):
    pass


class SamplingError(GeometryError):
    pass


class AmbiguousNormalError(GeometryError):
    pass


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


class Geometry(ABC):
    """A closed solid in ``dim`` dimensions.

    Point queries accept a single point ``(dim,)`` or a batch ``(N, dim)``
    and answer with a bool or a bool array respectively.
    """

    dim: int

    # --- to implement ------------------------------------------------------
    @abstractmethod
    def _inside(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _on_boundary(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _normals(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Outward normals at boundary points and a mask of ambiguous ones."""

    @abstractmethod
    def bbox(self) -> tuple[np.ndarray, np.ndarray]: ...

    @abstractmethod
    def boundary_measure(self) -> float: ...

    @abstractmethod
    def _sample_boundary(self, n: int, rng: np.random.Generator) -> np.ndarray: ...

    def _grid_boundary(self, n: int) -> np.ndarray:
        raise GeometryError(f"{type(self).__name__} has no equispaced boundary sampler")

    # --- public API ----------------------------------------------------------
    def _points(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim <= 1
        x = np.atleast_2d(x)
        if self.dim == 1 and x.shape[-1] != 1 and single:
            x = x.reshape(-1, 1)
            single = False
        if x.shape[-1] != self.dim:
            raise GeometryError(f"points of dimension {x.shape[-1]} for a {self.dim}-d geometry")
        return x, single

    def inside(self, x):
        x, single = self._points(x)
        r = self._inside(x)
        return bool(r[0]) if single else r

    def interior(self, x):
        x, single = self._points(x)
        r = self._inside(x) & ~self._on_boundary(x)
        return bool(r[0]) if single else r

    def on_boundary(self, x):
        x, single = self._points(x)
        r = self._on_boundary(x)
        return bool(r[0]) if single else r

    def boundary_normal(self, x):
        """Outward unit normal; raises on non-boundary or corner points."""
        x, single = self._points(x)
        on = self._on_boundary(x)
        if not on.all():
            raise GeometryError(f"{int((~on).sum())} point(s) not on the boundary")
        n, ambiguous = self._normals(x)
        if ambiguous.any():
            raise AmbiguousNormalError(
                f"normal undefined at corner/edge point {x[np.argmax(ambiguous)]}")
        return n[0] if single else n

    def normals_or_nan(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x, _ = self._points(x)
        return self._normals(x)

    def random_points(self, n: int, rng=None) -> np.ndarray:
        """Uniform samples of the solid by rejection from the bounding box."""
        if n < 1:
            raise GeometryError("n must be >= 1")
        rng = as_rng(rng)
        lo, hi = self.bbox()
        out, drawn, budget = [], 0, RETRY_FACTOR * n
        have = 0
        while have < n:
            if drawn >= budget:
                raise SamplingError(f"rejection sampling found {have}/{n} points in {budget} draws")
            batch = max(2 * (n - have), 64)
            cand = rng.uniform(lo, hi, size=(batch, self.dim))
            drawn += batch
            keep = cand[self._inside(cand)]
            out.append(keep)
            have += len(keep)
        return np.concatenate(out)[:n]

    def random_boundary_points(self, n: int, rng=None) -> np.ndarray:
        if n < 1:
            raise GeometryError("n must be >= 1")
        return self._sample_boundary(n, as_rng(rng))

    def uniform_points(self, n: int, boundary: bool = True) -> np.ndarray:
        """Grid points inside the solid, roughly ``n`` of them."""
        if n < 1:
            raise GeometryError("n must be >= 1")
        lo, hi = self.bbox()
        frac = self._volume_fraction()
        if frac <= 0:
            raise SamplingError("solid has zero measure")
        total = n / frac
        side = (hi - lo)
        h = (np.prod(side) / total) ** (1.0 / self.dim)
        axes = []
        for a, b in zip(lo, hi):
            m = max(int(np.ceil((b - a) / h)), 1)
            if boundary:
                axes.append(np.linspace(a, b, m + 1))
            else:
                axes.append(np.linspace(a, b, m + 1)[:-1] + (b - a) / m / 2)
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, self.dim)
        keep = self._inside(grid)
        if not boundary:
            keep &= ~self._on_boundary(grid)
        return grid[keep]

    def _volume_fraction(self, m: int = 20000) -> float:
        lo, hi = self.bbox()
        cand = np.random.default_rng(0).uniform(lo, hi, size=(m, self.dim))
        return float(self._inside(cand).mean())

    def uniform_boundary_points(self, n: int) -> np.ndarray:
        if n < 1:
            raise GeometryError("n must be >= 1")
        return self._grid_boundary(n)

    def periodic_point(self, x, component: int):
        raise GeometryError(f"periodic images are not defined for {type(self).__name__}")

    # --- CSG operators ---------------------------------------------------------
    def __or__(self, other: "Geometry") -> "Geometry":
        from pinnkit.geometry.csg import Union
        return Union(self, other)

    def __sub__(self, other: "Geometry") -> "Geometry":
        from pinnkit.geometry.csg import Difference
        return Difference(self, other)

    def __and__(self, other: "Geometry") -> "Geometry":
        from pinnkit.geometry.csg import Intersection
        return Intersection(self, other)
