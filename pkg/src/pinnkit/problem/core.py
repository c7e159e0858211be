"""Residuals, conditions, point sets and loss assembly."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from pinnkit.autodiff import ops
from pinnkit.geometry import EPS_BOUNDARY, Geometry, SpaceTimeDomain
from pinnkit.network import Network, Parameters
from pinnkit.problem.fields import Fields


class ResidualError(FloatingPointError):
    """A residual evaluated to NaN or infinity."""

    def __init__(self, what: str, point: np.ndarray):
        self.point = np.asarray(point)
        super().__init__(f"{what} is not finite at point {self.point.tolist()}")


def _components(r) -> list:
    if isinstance(r, (list, tuple)):
        return list(r)
    return [r]


def _check_finite(what: str, x: np.ndarray, sq) -> np.ndarray:
    vals = np.asarray(ops.primal(sq), dtype=float)
    bad = ~np.isfinite(vals)
    if bad.any():
        raise ResidualError(what, x[np.argmax(np.broadcast_to(bad, (len(x),)))])
    return vals


def _squared_norms(comps: list, n: int):
    """Sum over components of squared residuals, shape (n,)."""
    sq = 0.0
    for r in comps:
        sq = sq + r * r
    if not ops.shape(sq):
        sq = sq * np.ones(n)
    return sq


# --- residual -------------------------------------------------------------

@dataclass
class Residual:
    """PDE residual ``f(x, u, derivatives; lam)``.

    Attributes:
        fn: ``fn(x, F, lam)`` returning one residual array of shape (N,) or
            a list of them (one per equation). ``F`` is a :class:`Fields`.
        second: input axes along which ``fn`` takes second derivatives.
        max_order: highest derivative order used; at most 2.
        name: label used in reports.
    """

    fn: Callable
    second: tuple = ()
    max_order: int = 2
    name: str = "residual"

    def __post_init__(self):
        self.second = tuple(self.second)
        if self.max_order > 2:
            raise ValueError("residuals may use derivatives up to order 2")
        if self.max_order < 2 and self.second:
            raise ValueError("second-derivative axes given for a first-order residual")

    def __call__(self, x, F: Fields, lam) -> list:
        return _components(self.fn(x, F, lam))

    def evaluate(self, net: Network, params: Parameters, x) -> list:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        F = Fields(net, params, x, self.second)
        return self(x, F, params.externals)


# --- conditions -----------------------------------------------------------

def _as_values(g, x: np.ndarray) -> np.ndarray:
    v = g(x) if callable(g) else np.full(len(x), float(g))
    v = np.asarray(v, dtype=float)
    if v.ndim == 2 and v.shape[1] == 1:
        v = v[:, 0]
    return np.broadcast_to(v, (len(x),))


class Condition:
    """A boundary, initial or operator condition on a subset of T_b.

    ``on(x, on_boundary)`` optionally narrows the default location (the
    boundary of the geometry) to a part of it.
    """

    kind = "condition"
    needs_derivatives = False
    needs_normals = False

    def __init__(self, on: Callable | None = None):
        self.on = on

    def applies(self, geom: Geometry, x: np.ndarray) -> np.ndarray:
        mask = np.asarray(geom.on_boundary(x), dtype=bool).reshape(len(x))
        if self.on is not None:
            mask = mask & np.asarray(self.on(x, mask), dtype=bool)
        return mask

    def residual(self, net: Network, params: Parameters, x: np.ndarray, geom: Geometry) -> list:
        raise NotImplementedError


class DirichletBC(Condition):
    kind = "dirichlet"

    def __init__(self, value=0.0, component: int = 0, on=None):
        super().__init__(on)
        self.value, self.component = value, component

    def residual(self, net, params, x, geom):
        F = Fields(net, params, x, derivatives=False)
        return [F.u(self.component) - _as_values(self.value, x)]


class InitialCondition(DirichletBC):
    """Dirichlet data on the ``t = t0`` slice of a space-time domain."""

    kind = "initial"

    def applies(self, geom, x):
        if not isinstance(geom, SpaceTimeDomain):
            raise TypeError("initial conditions need a space-time domain")
        mask = np.asarray(geom.on_initial(x), dtype=bool).reshape(len(x))
        if self.on is not None:
            mask = mask & np.asarray(self.on(x, mask), dtype=bool)
        return mask


def _normal_derivative(F: Fields, c: int, normals: np.ndarray):
    out = 0.0
    for i in range(normals.shape[1]):
        if np.any(normals[:, i] != 0):
            out = out + F.d(c, i) * normals[:, i]
    return out


class _NormalCondition(Condition):
    needs_derivatives = True
    needs_normals = True

    def _normals(self, geom, x):
        n, ambiguous = geom.normals_or_nan(x)
        if ambiguous.any():
            warnings.warn(f"{int(ambiguous.sum())} point(s) with an ambiguous normal skipped "
                          f"for {self.kind} condition",
                          stacklevel=3)
        return n, ~ambiguous


class NeumannBC(_NormalCondition):
    """``du/dn = g``."""

    kind = "neumann"

    def __init__(self, value=0.0, component: int = 0, on=None):
        super().__init__(on)
        self.value, self.component = value, component

    def residual(self, net, params, x, geom):
        n, ok = self._normals(geom, x)
        x, n = x[ok], n[ok]
        if not len(x):
            return []
        F = Fields(net, params, x)
        return [_normal_derivative(F, self.component, n) - _as_values(self.value, x)]


class RobinBC(_NormalCondition):
    """``du/dn = g(x, u)``; ``g`` may use lifted ``u``."""

    kind = "robin"

    def __init__(self, func: Callable, component: int = 0, on=None):
        super().__init__(on)
        self.func, self.component = func, component

    def residual(self, net, params, x, geom):
        n, ok = self._normals(geom, x)
        x, n = x[ok], n[ok]
        if not len(x):
            return []
        F = Fields(net, params, x)
        u = F.u(self.component)
        return [_normal_derivative(F, self.component, n) - self.func(x, u)]


class PeriodicBC(Condition):
    """Matches value and first derivative across opposite faces.

    Applies at boundary points on the low face of ``axis``; the partner is
    the geometry's periodic image of the point.
    """

    kind = "periodic"
    needs_derivatives = True

    def __init__(self, axis: int, component: int = 0, derivative: bool = True, on=None):
        super().__init__(on)
        self.axis, self.component, self.derivative = axis, component, derivative

    def applies(self, geom, x):
        lo, _ = geom.bbox()
        mask = super().applies(geom, x)
        return mask & (np.abs(x[:, self.axis] - lo[self.axis]) <= EPS_BOUNDARY)

    def residual(self, net, params, x, geom):
        image = np.atleast_2d(geom.periodic_point(x, self.axis))
        F = Fields(net, params, x, derivatives=self.derivative)
        G = Fields(net, params, image, derivatives=self.derivative)
        c = self.component
        out = [F.u(c) - G.u(c)]
        if self.derivative:
            out.append(F.d(c, self.axis) - G.d(c, self.axis))
        return out


class OperatorBC(Condition):
    """General condition ``func(x, F, lam) = 0`` on (part of) the boundary."""

    kind = "operator"
    needs_derivatives = True

    def __init__(self, func: Callable, second: Sequence[int] = (), on=None):
        super().__init__(on)
        self.func, self.second = func, tuple(second)

    def residual(self, net, params, x, geom):
        F = Fields(net, params, x, self.second)
        return _components(self.func(x, F, params.externals))


@dataclass
class Observation:
    """Measured values of some output components at points T_i."""

    points: np.ndarray
    values: np.ndarray
    components: tuple | None = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        v = np.asarray(self.values, dtype=float)
        self.values = v.reshape(len(self.points), -1)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("observation values must be finite")
        if self.components is None:
            self.components = tuple(range(self.values.shape[1]))
        self.components = tuple(self.components)
        if len(self.components) != self.values.shape[1]:
            raise ValueError("one value column per observed component")

    def residual(self, net, params) -> list:
        F = Fields(net, params, self.points, derivatives=False)
        return [F.u(c) - self.values[:, k] for k, c in enumerate(self.components)]


# --- losses ---------------------------------------------------------------

@dataclass(frozen=True)
class LossWeights:
    w_f: float = 1.0
    w_b: float = 1.0
    w_i: float = 1.0

    def __post_init__(self):
        w = (self.w_f, self.w_b, self.w_i)
        if min(w) < 0 or max(w) == 0:
            raise ValueError(f"loss weights must be >= 0 and not all zero, got {w}")


def pde_loss(net: Network, params: Parameters, residual: Residual, T_f):
    """Mean squared residual norm over T_f and the per-point norms."""
    x = np.atleast_2d(np.asarray(T_f, dtype=float))
    comps = residual.evaluate(net, params, x)
    sq = _squared_norms(comps, len(x))
    vals = _check_finite("PDE residual", x, sq)
    return ops.sum(sq) * (1.0 / len(x)), np.sqrt(vals)


def bc_loss(net: Network, params: Parameters, conditions: Sequence[Condition], T_b, geom: Geometry):
    """``(1/|T_b|) sum_x sum_conditions ||B(u, x)||^2`` over the points each condition owns."""
    x = np.atleast_2d(np.asarray(T_b, dtype=float))
    if not len(conditions) or not len(x):
        return 0.0
    total = 0.0
    for cond in conditions:
        mask = cond.applies(geom, x)
        if not mask.any():
            continue
        pts = x[mask]
        comps = cond.residual(net, params, pts, geom)
        if not comps:
            continue
        sq = _squared_norms(comps, len(pts))
        _check_finite(f"{cond.kind} condition residual", pts, sq)
        total = total + ops.sum(sq)
    return total * (1.0 / len(x))


def observation_loss(net: Network, params: Parameters, observations: Sequence[Observation]):
    """Mean squared misfit over all observation points."""
    total, count = 0.0, 0
    for obs in observations:
        comps = obs.residual(net, params)
        sq = _squared_norms(comps, len(obs.points))
        _check_finite("observation misfit", obs.points, sq)
        total = total + ops.sum(sq)
        count += len(obs.points)
    return total * (1.0 / count) if count else 0.0


@dataclass
class LossBreakdown:
    total: object
    f: object
    b: object
    i: object
    residuals: np.ndarray | None = None

    def floats(self) -> dict:
        return {k: float(ops.primal(getattr(self, k))) for k in ("total", "f", "b", "i")}


def total_loss(net: Network, params: Parameters, problem: "Problem", T_f, T_b,
               weights: LossWeights = LossWeights()) -> LossBreakdown:
    """Weighted sum ``w_f L_f + w_b L_b + w_i L_i`` with each part kept."""
    lf, res = (0.0, None)
    if weights.w_f and problem.residual is not None and len(T_f):
        lf, res = pde_loss(net, params, problem.residual, T_f)
    lb = bc_loss(net, params, problem.conditions, T_b, problem.geometry) if weights.w_b else 0.0
    li = observation_loss(net, params, problem.observations) if weights.w_i else 0.0
    total = weights.w_f * lf + weights.w_b * lb + weights.w_i * li
    return LossBreakdown(total, lf, lb, li, res)


# --- problem and point sets -------------------------------------------------

@dataclass
class Problem:
    """Everything that defines a forward or inverse problem.

    ``externals`` are the initial values of trainable scalars; residual
    closures receive them (lifted during training) as ``lam``.
    """

    name: str
    geometry: Geometry
    residual: Residual | None
    conditions: list = field(default_factory=list)
    observations: list = field(default_factory=list)
    d_out: int = 1
    externals: tuple = ()
    external_names: tuple = ()
    external_scales: tuple = ()
    transform: Callable | None = None
    exact: Callable | None = None

    def physical_externals(self, values) -> dict:
        scales = self.external_scales or (1.0,) * len(values)
        names = self.external_names or tuple(f"lambda{k}" for k in range(len(values)))
        return {n: float(v) * s for n, v, s in zip(names, values, scales)}


STRATEGIES = ("fixed", "resample", "adaptive")


@dataclass
class PointSets:
    """Residual points T_f and boundary/initial points T_b.

    Observation points T_i live in the problem's observations.
    """

    T_f: np.ndarray
    T_b: np.ndarray
    strategy: str = "fixed"
    batch_size: int | None = None

    def __post_init__(self):
        self.T_f = np.atleast_2d(np.asarray(self.T_f, dtype=float))
        self.T_b = np.asarray(self.T_b, dtype=float).reshape(-1, self.T_f.shape[1])
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @classmethod
    def generate(cls, problem: Problem, n_domain: int, n_boundary: int = 0, n_initial: int = 0,
                 rng=None, strategy: str = "fixed", batch_size: int | None = None) -> "PointSets":
        rng = np.random.default_rng(rng)
        geom = problem.geometry
        T_f = geom.random_points(n_domain, rng) if n_domain else np.empty((0, geom.dim))
        parts = []
        if n_boundary:
            parts.append(_boundary_sample(problem, n_boundary, rng))
        if n_initial:
            parts.append(geom.random_initial_points(n_initial, rng))
        T_b = np.concatenate(parts) if parts else np.empty((0, geom.dim))
        return cls(T_f, T_b, strategy, batch_size)

    def validate(self, geom: Geometry) -> None:
        if len(self.T_f) and not np.all(geom.inside(self.T_f)):
            raise ValueError("some residual points lie outside the domain")
        if len(self.T_b):
            ok = np.asarray(geom.on_boundary(self.T_b), dtype=bool)
            if isinstance(geom, SpaceTimeDomain):
                ok |= np.asarray(geom.on_initial(self.T_b), dtype=bool)
            if not ok.all():
                raise ValueError("some boundary points are not on the boundary or initial slice")

    def domain_batch(self, geom: Geometry, rng: np.random.Generator) -> np.ndarray:
        """Residual points for one optimizer step under the current strategy."""
        if self.strategy == "resample":
            # resampling is mini-batching from an unbounded pool
            return geom.random_points(self.batch_size or len(self.T_f), rng)
        if self.batch_size is None or self.batch_size >= len(self.T_f):
            return self.T_f
        return self.T_f[np.sort(rng.choice(len(self.T_f), self.batch_size, replace=False))]


def _boundary_sample(problem: Problem, n: int, rng) -> np.ndarray:
    """Boundary points, resampling corners owned by normal-based conditions."""
    geom = problem.geometry
    pts = geom.random_boundary_points(n, rng)
    normal_conds = [c for c in problem.conditions if c.needs_normals]
    for _ in range(100):
        if not normal_conds:
            break
        _, ambiguous = geom.normals_or_nan(pts)
        bad = np.zeros(len(pts), dtype=bool)
        for c in normal_conds:
            bad |= ambiguous & c.applies(geom, pts)
        if not bad.any():
            break
        pts[bad] = geom.random_boundary_points(int(bad.sum()), rng)
    return pts
