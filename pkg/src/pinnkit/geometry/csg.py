"""Boolean combinations of solids."""

from __future__ import annotations

import itertools

import numpy as np

from pinnkit.geometry.base import EPS_BOUNDARY, RETRY_FACTOR, Geometry, GeometryError, SamplingError

_MEASURE_PROBES = 4000


class _Csg(Geometry):
    flip_b = False

    def __init__(self, a: Geometry, b: Geometry):
        if a.dim != b.dim:
            raise GeometryError(f"cannot combine a {a.dim}-d and a {b.dim}-d geometry")
        self.a, self.b = a, b
        self.dim = a.dim
        self._measure = None

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.a!r}, {self.b!r})"

    def _interior(self, g, x):
        return g._inside(x) & ~g._on_boundary(x)

    def _exposed(self, x):
        """Masks of points on each child's boundary that survive the operation."""
        raise NotImplementedError

    def _on_boundary(self, x):
        on_a, on_b = self._exposed(x)
        return (on_a | on_b) & self._inside(x)

    def _normals(self, x):
        on_a, on_b = self._exposed(x)
        na, amb_a = self.a._normals(x)
        nb, amb_b = self.b._normals(x)
        if self.flip_b:
            nb = -nb
        n = np.where(on_a[:, None], na, nb)
        both = on_a & on_b
        differ = np.any(np.abs(na - nb) > 1e-12, axis=1)
        ambiguous = ((on_a & amb_a) | (on_b & amb_b) | (both & differ)
                     | ~(on_a | on_b))
        return n, ambiguous

    def boundary_measure(self) -> float:
        # children's measures scaled by the exposed fraction of each
        if self._measure is None:
            rng = np.random.default_rng(0)
            total = 0.0
            for child, idx in ((self.a, 0), (self.b, 1)):
                pts = child._sample_boundary(_MEASURE_PROBES, rng)
                keep = self._exposed(pts)[idx] & self._inside(pts)
                total += child.boundary_measure() * keep.mean()
            self._measure = total
        return self._measure

    def _filter(self, pts):
        on = self._on_boundary(pts)
        _, ambiguous = self._normals(pts)
        return pts[on & ~ambiguous]

    def _sample_boundary(self, n, rng):
        ma, mb = self.a.boundary_measure(), self.b.boundary_measure()
        p = ma / (ma + mb)
        out, have, drawn = [], 0, 0
        while have < n:
            if drawn >= RETRY_FACTOR * n:
                raise SamplingError(f"boundary sampling found {have}/{n} points")
            batch = max(2 * (n - have), 64)
            k = rng.binomial(batch, p)
            cand = []
            if k:
                cand.append(self.a._sample_boundary(k, rng))
            if batch - k:
                cand.append(self.b._sample_boundary(batch - k, rng))
            cand = np.concatenate(cand)
            cand = cand[rng.permutation(len(cand))]
            drawn += batch
            keep = self._filter(cand)
            out.append(keep)
            have += len(keep)
        return np.concatenate(out)[:n]

    def _grid_boundary(self, n):
        measure = self.boundary_measure()
        if measure <= 0:
            raise SamplingError("composite has no exposed boundary")
        parts = []
        for child in (self.a, self.b):
            # request enough child points that the exposed share is about n
            m = max(int(np.ceil(n * child.boundary_measure() / measure)), 1)
            parts.append(self._filter(child._grid_boundary(m)))
        pts = np.concatenate(parts)
        return np.unique(pts, axis=0) if len(pts) else pts


class Union(_Csg):
    def _inside(self, x):
        return self.a._inside(x) | self.b._inside(x)

    def _exposed(self, x):
        on_a = self.a._on_boundary(x) & ~self._interior(self.b, x)
        on_b = self.b._on_boundary(x) & ~self._interior(self.a, x)
        return on_a, on_b

    def bbox(self):
        (la, ha), (lb, hb) = self.a.bbox(), self.b.bbox()
        return np.minimum(la, lb), np.maximum(ha, hb)


class Difference(_Csg):
    """``a`` with the interior of ``b`` removed."""

    flip_b = True

    def _inside(self, x):
        keep = self.a._inside(x) & ~self._interior(self.b, x)
        # where both boundaries meet, keep only points adjacent to a\b
        seam = keep & self.a._on_boundary(x) & self.b._on_boundary(x)
        if seam.any():
            keep[seam] = self._touches_solid(x[seam])
        return keep

    def _touches_solid(self, x):
        delta = 1e3 * EPS_BOUNDARY
        hit = np.zeros(len(x), dtype=bool)
        for d in itertools.product((-1.0, 0.0, 1.0), repeat=self.dim):
            if not any(d):
                continue
            y = x + delta * np.asarray(d)
            hit |= self.a._inside(y) & ~self.b._inside(y)
        return hit

    def _exposed(self, x):
        on_a = self.a._on_boundary(x) & ~self._interior(self.b, x)
        on_b = self.b._on_boundary(x) & self.a._inside(x)
        return on_a, on_b

    def bbox(self):
        return self.a.bbox()


class Intersection(_Csg):
    def _inside(self, x):
        return self.a._inside(x) & self.b._inside(x)

    def _exposed(self, x):
        on_a = self.a._on_boundary(x) & self.b._inside(x)
        on_b = self.b._on_boundary(x) & self.a._inside(x)
        return on_a, on_b

    def bbox(self):
        (la, ha), (lb, hb) = self.a.bbox(), self.b.bbox()
        lo, hi = np.maximum(la, lb), np.minimum(ha, hb)
        if np.any(lo > hi):
            raise SamplingError("intersection is empty")
        return lo, hi
