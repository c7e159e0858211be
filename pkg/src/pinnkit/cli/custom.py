"""Problems described inline in a config file.

Example::

    {"problem": "custom",
     "geometry": "difference(rectangle([-1,-1],[1,1]), rectangle([0,0],[1,1]))",
     "residual": {"name": "poisson", "source": 1.0},
     "conditions": [{"type": "dirichlet", "value": 0.0}], ...}

A ``"time": [t0, t1]`` entry in ``params`` turns the domain into a
space-time product.
"""

from __future__ import annotations

from pinnkit.cli.config import ConfigError
from pinnkit.cli.geometry_expr import ExpressionError, parse_geometry
from pinnkit.geometry import SpaceTimeDomain
from pinnkit.problem import (
    DirichletBC,
    InitialCondition,
    NeumannBC,
    PeriodicBC,
    Problem,
    burgers_residual,
    poisson_residual,
)

CONDITIONS = {
    "dirichlet": lambda c: DirichletBC(float(c.get("value", 0.0)), int(c.get("component", 0))),
    "neumann": lambda c: NeumannBC(float(c.get("value", 0.0)), int(c.get("component", 0))),
    "initial": lambda c: InitialCondition(float(c.get("value", 0.0)), int(c.get("component", 0))),
    "periodic": lambda c: PeriodicBC(int(c.get("axis", 0)), int(c.get("component", 0))),
}


def build_custom(cfg) -> Problem:
    try:
        geom = parse_geometry(cfg.geometry)
    except (ExpressionError, ValueError) as exc:
        raise ConfigError(str(exc), "geometry") from exc
    if "time" in cfg.params:
        t0, t1 = cfg.params["time"]
        geom = SpaceTimeDomain(geom, t0, t1)
    r = cfg.residual
    name = r.get("name")
    if name == "poisson":
        residual = poisson_residual(geom.dim, float(r.get("source", 1.0)))
    elif name == "burgers":
        if not isinstance(geom, SpaceTimeDomain) or geom.dim != 2:
            raise ConfigError("burgers needs a 1-d space with params.time", "residual")
        residual = burgers_residual(float(r.get("nu", 0.01)))
    else:
        raise ConfigError(f"unknown residual {name!r}; expected 'poisson' or 'burgers'", "residual")
    conds = []
    for c in cfg.conditions or []:
        kind = c.get("type") if isinstance(c, dict) else None
        if kind not in CONDITIONS:
            raise ConfigError(f"unknown condition type {kind!r}; expected one of {sorted(CONDITIONS)}",
                              "conditions")
        conds.append(CONDITIONS[kind](c))
    return Problem("custom", geom, residual, conds)
