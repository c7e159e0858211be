"""Product of a spatial solid with a time interval.

Time is the last coordinate.  The boundary of the product is the lateral
surface ``boundary(space) x [t0, t1]``; the initial slice ``t = t0`` is
exposed separately for initial conditions.
"""

from __future__ import annotations

import numpy as np

from pinnkit.geometry.base import EPS_BOUNDARY, Geometry, GeometryError, as_rng


class SpaceTimeDomain(Geometry):
    def __init__(self, space: Geometry, t0: float, t1: float):
        if not t0 < t1:
            raise GeometryError(f"time interval needs t0 < t1, got [{t0}, {t1}]")
        self.space = space
        self.t0, self.t1 = float(t0), float(t1)
        self.dim = space.dim + 1

    def __repr__(self) -> str:
        return f"SpaceTimeDomain({self.space!r}, {self.t0}, {self.t1})"

    def _in_time(self, t):
        return (t >= self.t0 - EPS_BOUNDARY) & (t <= self.t1 + EPS_BOUNDARY)

    def _inside(self, x):
        return self.space._inside(x[:, :-1]) & self._in_time(x[:, -1])

    def _on_boundary(self, x):
        return self.space._on_boundary(x[:, :-1]) & self._in_time(x[:, -1])

    def on_initial(self, x):
        x, single = self._points(x)
        r = self._inside(x) & (np.abs(x[:, -1] - self.t0) <= EPS_BOUNDARY)
        return bool(r[0]) if single else r

    def _normals(self, x):
        n, ambiguous = self.space._normals(x[:, :-1])
        return np.concatenate([n, np.zeros((len(x), 1))], axis=1), ambiguous

    def bbox(self):
        lo, hi = self.space.bbox()
        return np.append(lo, self.t0), np.append(hi, self.t1)

    def boundary_measure(self) -> float:
        return self.space.boundary_measure() * (self.t1 - self.t0)

    def random_points(self, n: int, rng=None) -> np.ndarray:
        rng = as_rng(rng)
        xs = self.space.random_points(n, rng)
        t = rng.uniform(self.t0, self.t1, size=(n, 1))
        return np.concatenate([xs, t], axis=1)

    def _sample_boundary(self, n, rng):
        xs = self.space._sample_boundary(n, rng)
        t = rng.uniform(self.t0, self.t1, size=(n, 1))
        return np.concatenate([xs, t], axis=1)

    def random_initial_points(self, n: int, rng=None) -> np.ndarray:
        xs = self.space.random_points(n, as_rng(rng))
        return np.concatenate([xs, np.full((len(xs), 1), self.t0)], axis=1)

    def _split(self, n: int) -> tuple[int, int]:
        nt = max(int(round(n ** (1.0 / self.dim))), 2)
        return max(n // nt, 1), nt

    def uniform_points(self, n: int, boundary: bool = True) -> np.ndarray:
        if n < 1:
            raise GeometryError("n must be >= 1")
        nx, nt = self._split(n)
        xs = self.space.uniform_points(nx, boundary)
        if boundary:
            ts = np.linspace(self.t0, self.t1, nt)
        else:
            h = (self.t1 - self.t0) / nt
            ts = self.t0 + h * (np.arange(nt) + 0.5)
        return _product(xs, ts)

    def _grid_boundary(self, n):
        nx, nt = self._split(n)
        return _product(self.space._grid_boundary(nx), np.linspace(self.t0, self.t1, nt))

    def uniform_initial_points(self, n: int) -> np.ndarray:
        xs = self.space.uniform_points(n)
        return np.concatenate([xs, np.full((len(xs), 1), self.t0)], axis=1)

    def periodic_point(self, x, component: int):
        x, single = self._points(x)
        if component >= self.space.dim or component < 0:
            raise GeometryError("periodic images are spatial only")
        y = x.copy()
        y[:, :-1] = np.atleast_2d(self.space.periodic_point(x[:, :-1], component))
        return y[0] if single else y


def _product(xs: np.ndarray, ts: np.ndarray) -> np.ndarray:
    xx = np.repeat(xs, len(ts), axis=0)
    tt = np.tile(ts, len(xs))[:, None]
    return np.concatenate([xx, tt], axis=1)
