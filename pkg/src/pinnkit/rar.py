"""Residual-based adaptive refinement of the residual points."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from pinnkit.network import Network, Parameters
from pinnkit.problem.core import Residual, _check_finite, _squared_norms
from pinnkit.training.loop import Model, train
from pinnkit.training.optimizers import AdamConfig, LbfgsConfig
from pinnkit.training.state import TrainState


@dataclass(frozen=True)
class RarConfig:
    """Refinement settings.

    Attributes:
        m: points added per round.
        E0: stop once the Monte-Carlo mean residual drops below this.
        pool_size: candidates per round; defaults to ten times |T_f|.
        inner_iters: training iterations after each addition.
        max_rounds: cap on the number of rounds.
        lr: Adam learning rate for the retraining.
        inner_optimizer: ``"adam"`` (moments carried across rounds) or
            ``"lbfgs"`` (``inner_iters`` caps each round's run).
    """

    m: int = 1
    E0: float = 0.005
    pool_size: int | None = None
    inner_iters: int = 1000
    max_rounds: int = 100
    lr: float = 1e-3
    inner_optimizer: str = "adam"

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not self.E0 > 0:
            raise ValueError("E0 must be positive")
        if self.pool_size is not None and self.pool_size < self.m:
            raise ValueError("pool_size must be >= m")
        if self.max_rounds < 0 or self.inner_iters < 0:
            raise ValueError("max_rounds and inner_iters must be >= 0")
        if self.inner_optimizer not in ("adam", "lbfgs"):
            raise ValueError(f"inner_optimizer must be 'adam' or 'lbfgs', got {self.inner_optimizer!r}")


def residual_norms(net: Network, params: Parameters, residual: Residual, pool) -> np.ndarray:
    """Euclidean norm of the residual vector at every pool point."""
    pool = np.atleast_2d(np.asarray(pool, dtype=float))
    comps = residual.evaluate(net, params, pool)
    return np.sqrt(_check_finite("PDE residual", pool, _squared_norms(comps, len(pool))))


def estimate_mean_residual(net: Network, params: Parameters, residual: Residual, pool,
                           chunk: int = 20000) -> tuple[float, np.ndarray]:
    """Monte-Carlo mean of the residual norm over ``pool`` and the norms."""
    pool = np.atleast_2d(np.asarray(pool, dtype=float))
    if not len(pool):
        raise ValueError("empty pool")
    norms = np.concatenate([residual_norms(net, params, residual, pool[k:k + chunk])
                            for k in range(0, len(pool), chunk)])
    return float(np.mean(norms)), norms


def worst_indices(residuals, m: int | None = None) -> np.ndarray:
    """Indices by decreasing residual, ties broken by pool order."""
    r = np.asarray(residuals, dtype=float).ravel()
    # stable sort on -r keeps earlier indices first among equal residuals
    order = np.argsort(-r, kind="stable")
    return order if m is None else order[:m]


def select_worst(pool, residuals, m: int) -> np.ndarray:
    """The ``m`` pool points with the largest residuals."""
    pool = np.atleast_2d(np.asarray(pool, dtype=float))
    if not 1 <= m <= len(pool) or len(pool) != np.size(residuals):
        raise ValueError(f"cannot select {m} of {len(pool)} points")
    return pool[worst_indices(residuals, m)]


@dataclass
class RarResult:
    state: TrainState
    log: list = field(default_factory=list)  # rows: round, x..., residual, E_before, E_after
    errors: list = field(default_factory=list)  # E_r estimate at the start of each round
    rounds: int = 0
    converged: bool = False


def rar_loop(model: Model, cfg: RarConfig, state: TrainState, rng=None,
             callbacks: Sequence = ()) -> RarResult:
    """Add high-residual points to T_f and retrain until ``E_r < E0``.

    ``state`` is the result of the initial training.  Each round draws a
    fresh candidate pool, estimates ``E_r`` on it, appends the worst ``m``
    candidates that are not already in T_f, and retrains for
    ``inner_iters`` Adam steps.  Reaching ``max_rounds`` is reported
    through ``converged = False``.
    """
    rng = np.random.default_rng(rng)
    geom = model.problem.geometry
    res = RarResult(state)
    pending: list = []
    for rnd in range(cfg.max_rounds + 1):
        size = cfg.pool_size or 10 * len(model.points.T_f)
        pool = geom.random_points(size, rng)
        e_r, norms = estimate_mean_residual(model.net, state.params, model.problem.residual, pool)
        res.errors.append(e_r)
        for row in pending:
            row.append(e_r)
            res.log.append(row)
        pending = []
        if e_r < cfg.E0:
            res.converged = True
            break
        if rnd == cfg.max_rounds:
            break
        existing = {p.tobytes() for p in model.points.T_f}
        order = worst_indices(norms)
        picked = [i for i in order if pool[i].tobytes() not in existing][: cfg.m]
        new = pool[picked]
        model.points.T_f = np.concatenate([model.points.T_f, new])
        state.T_f = model.points.T_f
        for i in picked:
            pending.append([rnd] + list(pool[i]) + [float(norms[i]), e_r])
        res.rounds += 1
        state = _retrain(model, cfg, state, callbacks)
        res.state = state
    return res


def _retrain(model, cfg, state, callbacks):
    if cfg.inner_iters == 0:
        return state
    state.stage, state.stage_iter, state.lbfgs = 0, 0, None
    if cfg.inner_optimizer == "lbfgs":
        state.adam = None
        stage = LbfgsConfig(max_iter=cfg.inner_iters)
    else:
        # restarting Adam every round would repeat its large bias-corrected first steps
        stage = AdamConfig(lr=cfg.lr, iterations=cfg.inner_iters)
    return train(model, [stage], state, callbacks=callbacks)


def write_added_points_csv(path, log: list, dim: int) -> None:
    coords = ["x", "t"] if dim == 2 else [f"x{k}" for k in range(dim)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["round"] + coords + ["residual", "E_r_before", "E_r_after"])
        for row in log:
            w.writerow(row)
