"""Built-in examples with their default hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from pinnkit.geometry import Interval, Rectangle, SpaceTimeDomain
from pinnkit.oracles import (
    diffusion_reaction_observations,
    fd_burgers_1d,
    fd_poisson_lshape,
    lorenz_observations,
)
from pinnkit.problem import (
    DirichletBC,
    InitialCondition,
    Observation,
    PointSets,
    Problem,
    burgers2d_exact,
    burgers2d_residual,
    burgers_residual,
    diffusion_reaction_residual,
    lorenz_residual,
    poisson_residual,
)
from pinnkit.quadrature import ide_residual, volterra_base, volterra_exact, volterra_operator

EPS = 1e-8


@dataclass
class Example:
    name: str
    defaults: dict
    build: Callable  # (params, points_cfg) -> Problem
    reference: Callable | None = None  # (params) -> (points, values)
    points: Callable | None = None  # (problem, points_cfg, rng) -> PointSets
    predict_points: Callable | None = None  # (params) -> points
    notes: dict = field(default_factory=dict)


def _adam(lr, n):
    return {"name": "adam", "lr": lr, "iterations": n}


LBFGS = {"name": "lbfgs"}


def _defaults(depth, width, optimizers, points, rar=None, params=None):
    return {"network": {"depth": depth, "width": width, "activation": "tanh"},
            "optimizers": optimizers, "points": points, "rar": rar, "params": params or {},
            "weights": {"w_f": 1.0, "w_b": 1.0, "w_i": 1.0}}


def default_points(problem, pc, rng) -> PointSets:
    return PointSets.generate(problem, pc.domain, pc.boundary, pc.initial, rng,
                              "fixed" if pc.strategy == "adaptive" else pc.strategy, pc.batch_size)


# --- Poisson on the L-shape ---------------------------------------------------

def lshape():
    return Rectangle([-1, -1], [1, 1]) - Rectangle([0, 0], [1, 1])


def _poisson(params, pc=None):
    return Problem("poisson-lshape", lshape(), poisson_residual(2, params.get("source", 1.0)),
                   [DirichletBC(0.0)])


@lru_cache(maxsize=4)
def _poisson_reference(n: int):
    return fd_poisson_lshape(n).nodes()


# --- Burgers ------------------------------------------------------------------

BURGERS_NU = 0.01 / np.pi


def _burgers(params, pc=None):
    nu = params.get("nu", BURGERS_NU)
    geom = SpaceTimeDomain(Interval(-1, 1), 0, 1)
    ic = InitialCondition(lambda x: -np.sin(np.pi * x[:, 0]))
    return Problem("burgers-1d", geom, burgers_residual(nu), [DirichletBC(0.0), ic])


@lru_cache(maxsize=4)
def burgers_reference(nu: float = BURGERS_NU, nx: int = 1001, nt: int = 200000, t: float = 0.9):
    """FD solution on the x grid at time ``t``: points (nx, 2) and values (nx,)."""
    sol = fd_burgers_1d(nu, nx, nt)
    pts = np.stack([sol.x, np.full_like(sol.x, t)], axis=1)
    return pts, sol.at(sol.x, t)


def _burgers_ref(params):
    return burgers_reference(params.get("nu", BURGERS_NU))


def _burgers2d(params, pc=None):
    re = params.get("Re", 5000.0)
    geom = SpaceTimeDomain(Rectangle([0, 0], [1, 1]), 0, 1)
    conds = []
    for c in (0, 1):
        conds.append(DirichletBC(lambda x, c=c: burgers2d_exact(x, re)[:, c], component=c))
        conds.append(InitialCondition(lambda x, c=c: burgers2d_exact(x, re)[:, c], component=c))
    return Problem("burgers-2d", geom, burgers2d_residual(re), conds, d_out=2,
                   exact=lambda x: burgers2d_exact(x, re))


def _burgers2d_ref(params):
    re = params.get("Re", 5000.0)
    g = np.linspace(0, 1, 21)
    X, Y, T = np.meshgrid(g, g, np.array([0.2, 0.5, 1.0]), indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel(), T.ravel()], axis=1)
    return pts, burgers2d_exact(pts, re)


# --- Lorenz -------------------------------------------------------------------

def _lorenz(params, pc=None):
    t_obs, y_obs = lorenz_observations(params.get("n_obs", 25), noise=params.get("noise", 0.0),
                                       rng=params.get("noise_seed", 0))
    x0 = (-8.0, 7.0, 27.0)
    conds = [DirichletBC(x0[c], component=c, on=lambda x, on: np.abs(x[:, 0]) <= EPS)
             for c in range(3)]
    return Problem("lorenz-inverse", Interval(0, 3), lorenz_residual(), conds,
                   [Observation(t_obs, y_obs)], d_out=3,
                   externals=tuple(params.get("initial", (1.0, 1.0, 1.0))),
                   external_names=("rho", "sigma", "beta"))


def _lorenz_points(problem, pc, rng):
    T_f = problem.geometry.random_points(pc.domain, rng)
    return PointSets(T_f, np.array([[0.0]]), "fixed", pc.batch_size)


def _lorenz_ref(params):
    t, y = lorenz_observations(301)
    return t, y


# --- diffusion-reaction -----------------------------------------------------------

DR_SCALES = (1e-3, 1e-1)


def _dr(params, pc=None):
    pts, vals = diffusion_reaction_observations(params.get("n_obs", 2000), noise=params.get("noise", 0.0),
                                                rng=params.get("obs_seed", 0))
    geom = SpaceTimeDomain(Interval(0, 1), 0, 10)
    left = lambda x: (np.abs(x[:, 0]) <= EPS).astype(float)  # noqa: E731
    conds = []
    for c in (0, 1):
        conds.append(DirichletBC(left, component=c))
        conds.append(InitialCondition(lambda x: np.exp(-20 * x[:, 0]), component=c))
    return Problem("diffusion-reaction-inverse", geom, diffusion_reaction_residual(DR_SCALES), conds,
                   [Observation(pts, vals)], d_out=2,
                   externals=tuple(params.get("initial", (1.0, 0.5))),
                   external_names=("D", "kf"), external_scales=DR_SCALES)


def _dr_ref(params):
    pts, vals = diffusion_reaction_observations(2000, rng=12345)
    return pts, vals


# --- Volterra IDE -----------------------------------------------------------------

def _volterra(params, pc=None):
    n = int(params.get("quadrature_degree", 20))
    residual = ide_residual(volterra_base(), volterra_operator(n))
    cond = DirichletBC(1.0, on=lambda x, on: np.abs(x[:, 0]) <= EPS)
    return Problem("volterra-ide", Interval(0, 5), residual, [cond],
                   exact=lambda x: volterra_exact(x[:, :1]))


def _volterra_points(problem, pc, rng):
    return PointSets(np.linspace(0, 5, pc.domain)[:, None], np.array([[0.0]]))


def _volterra_ref(params):
    x = np.linspace(0, 5, 101)[:, None]
    return x, volterra_exact(x[:, 0])


# --- frequency demo ---------------------------------------------------------------

def freq_target(x, ks=(1, 2, 3, 4, 5)):
    x = np.asarray(x, dtype=float)
    return sum(np.sin(2 * k * x) / (2 * k) for k in ks)


def _freq(params, pc=None):
    n = pc.domain if pc is not None else 500
    x = np.linspace(-np.pi, np.pi, n)[:, None]
    return Problem("frequency-demo", Interval(-np.pi, np.pi), None, [],
                   [Observation(x, freq_target(x[:, 0]))])


def _freq_points(problem, pc, rng):
    return PointSets(np.empty((0, 1)), np.empty((0, 1)))


def _freq_ref(params):
    x = np.linspace(-np.pi, np.pi, 512, endpoint=False)[:, None]
    return x, freq_target(x[:, 0])


REGISTRY: dict[str, Example] = {
    "poisson-lshape": Example(
        "poisson-lshape",
        _defaults(4, 50, [_adam(1e-3, 50000), LBFGS], {"domain": 1200, "boundary": 120}),
        _poisson, lambda p: _poisson_reference(int(p.get("reference_n", 128)))),
    "burgers-1d": Example(
        "burgers-1d",
        _defaults(3, 20, [_adam(1e-3, 15000), LBFGS],
                  {"domain": 2500, "boundary": 80, "initial": 160, "strategy": "adaptive"},
                  rar={"m": 1, "E0": 0.005, "inner_iters": 1000, "max_rounds": 100}),
        _burgers, _burgers_ref),
    "burgers-2d": Example(
        "burgers-2d",
        _defaults(3, 20, [_adam(1e-3, 15000), LBFGS],
                  {"domain": 200, "boundary": 1000, "initial": 5000, "strategy": "adaptive"},
                  rar={"m": 1, "E0": 0.005, "inner_iters": 1000, "max_rounds": 10},
                  params={"Re": 5000.0}),
        _burgers2d, _burgers2d_ref),
    "lorenz-inverse": Example(
        "lorenz-inverse",
        _defaults(3, 40, [_adam(1e-3, 60000)], {"domain": 400}),
        _lorenz, _lorenz_ref, _lorenz_points),
    "diffusion-reaction-inverse": Example(
        "diffusion-reaction-inverse",
        _defaults(3, 20, [_adam(1e-3, 80000)], {"domain": 2000, "boundary": 100, "initial": 100}),
        _dr, _dr_ref),
    "volterra-ide": Example(
        "volterra-ide",
        _defaults(4, 20, [LBFGS], {"domain": 12}),
        _volterra, _volterra_ref, _volterra_points),
    "frequency-demo": Example(
        "frequency-demo",
        _defaults(4, 20, [_adam(1e-4, 20000)], {"domain": 500}),
        _freq, _freq_ref, _freq_points),
}


def build_problem(cfg) -> Problem:
    if cfg.problem == "custom":
        from pinnkit.cli.custom import build_custom
        return build_custom(cfg)
    return REGISTRY[cfg.problem].build(cfg.params, cfg.points)


def build_points(problem: Problem, cfg, rng) -> PointSets:
    ex = REGISTRY.get(cfg.problem)
    maker = ex.points if ex is not None and ex.points is not None else default_points
    return maker(problem, cfg.points, rng)


def reference(cfg):
    ex = REGISTRY.get(cfg.problem)
    if ex is None or ex.reference is None:
        return None
    return ex.reference(cfg.params)

