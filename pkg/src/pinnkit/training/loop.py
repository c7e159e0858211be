"""Model objective and the training loop."""

from __future__ import annotations

import csv
from typing import Callable, Sequence

import numpy as np

from pinnkit.autodiff import Tape
from pinnkit.autodiff.tape import Variable
from pinnkit.network import Network, NetworkSpec, Parameters, init
from pinnkit.problem import LossWeights, PointSets, Problem, total_loss
from pinnkit.training.optimizers import (
    AdamConfig,
    AdamState,
    LbfgsConfig,
    OptimizerError,
    adam_step,
    lbfgs_run,
)
from pinnkit.training.state import TrainState

HISTORY_COLUMNS = ("iteration", "loss_total", "loss_f", "loss_b", "loss_i")


class Model:
    """A network bound to a problem, its point sets and loss weights."""

    def __init__(self, problem: Problem, spec: NetworkSpec, points: PointSets,
                 weights: LossWeights = LossWeights()):
        if spec.d_out != problem.d_out:
            raise ValueError(f"network has {spec.d_out} outputs, problem needs {problem.d_out}")
        self.problem = problem
        self.spec = spec
        self.points = points
        self.weights = weights
        self.net = Network(spec, problem.transform)
        self.n_externals = len(problem.externals)

    def init_params(self, seed: int) -> Parameters:
        return init(self.spec, seed, self.problem.externals)

    def params_of(self, flat) -> Parameters:
        return Parameters.unflatten(self.spec, flat, self.n_externals)

    def losses(self, params: Parameters, T_f=None):
        T_f = self.points.T_f if T_f is None else T_f
        return total_loss(self.net, params, self.problem, T_f, self.points.T_b, self.weights)

    def loss_and_grad(self, flat: np.ndarray, T_f=None) -> tuple[float, np.ndarray, dict]:
        """Total loss, its gradient w.r.t. the flat parameters, and the parts."""
        tape = Tape()
        params = self.params_of(flat).lift(tape)
        br = self.losses(params, T_f)
        parts = br.floats()
        if isinstance(br.total, Variable):
            g = tape.backward(br.total)
            grad = np.concatenate([np.ravel(g[v]) for v in params.leaves()])
        else:
            grad = np.zeros_like(flat)
        return parts["total"], grad, parts

    def predict(self, params: Parameters, x) -> np.ndarray:
        return self.net.predict(params, x)


def _row(iteration: int, parts: dict, metric: float | None = None) -> dict:
    row = {"iteration": iteration, "loss_total": parts["total"], "loss_f": parts["f"],
           "loss_b": parts["b"], "loss_i": parts["i"]}
    if metric is not None:
        row["metric"] = metric
    return row


class _Recorder:
    """Appends history rows and fires callbacks."""

    def __init__(self, model, state, callbacks, metric, metric_every):
        self.model, self.state = model, state
        self.callbacks = list(callbacks)
        self.metric, self.metric_every = metric, metric_every

    def record(self, parts: dict, params: Parameters | None = None):
        it = self.state.iteration
        m = None
        if self.metric is not None and it % self.metric_every == 0:
            m = float(self.metric(params if params is not None else self.state.params))
        if self.state.history and self.state.history[-1]["iteration"] == it:
            return
        self.state.history.append(_row(it, parts, m))

    def fire(self):
        for cb in self.callbacks:
            if self.state.iteration % cb.period == 0:
                cb(self.model, self.state)


def train(model: Model, stages: Sequence, state: TrainState | None = None, seed: int = 0,
          callbacks: Sequence = (), metric: Callable | None = None, metric_every: int = 100) -> TrainState:
    """Run the optimizer ``stages`` (Adam/L-BFGS configs) in order.

    Training resumes from ``state`` when given (e.g. a loaded checkpoint);
    the stage counters in the state decide where to pick up.  One history
    row is recorded per parameter update, holding the loss at the
    parameters before that update; the loss after the last update closes
    the history.  Adam moments survive a final Adam stage, so a caller
    can continue with the same optimizer state.
    """
    if state is None:
        state = TrainState(model.init_params(seed), rng=np.random.default_rng(seed))
    if state.T_f is None:
        state.T_f = model.points.T_f
    else:
        model.points.T_f = state.T_f
    rec = _Recorder(model, state, callbacks, metric, metric_every)
    geom = model.problem.geometry
    theta = state.params.flatten()
    try:
        while state.stage < len(stages):
            cfg = stages[state.stage]
            if isinstance(cfg, AdamConfig):
                if state.adam is None:
                    state.adam = AdamState.zeros(theta.size)
                while state.stage_iter < cfg.iterations:
                    T_f = model.points.domain_batch(geom, state.rng)
                    _, g, parts = model.loss_and_grad(theta, T_f)
                    rec.record(parts)
                    theta = adam_step(theta, g, state.adam, cfg)
                    state.params = model.params_of(theta)
                    state.iteration += 1
                    state.stage_iter += 1
                    rec.fire()
                if state.stage + 1 < len(stages):
                    state.adam = None
            elif isinstance(cfg, LbfgsConfig):
                theta = _run_lbfgs(model, cfg, state, rec, theta)
            else:
                raise TypeError(f"unknown optimizer config {cfg!r}")
            state.stage += 1
            state.stage_iter = 0
        _, _, parts = model.loss_and_grad(theta)
        rec.record(parts)
        if state.status == "running":
            state.status = "done"
    except (OptimizerError, FloatingPointError):
        state.status = "failed"
        raise
    return state


def _run_lbfgs(model: Model, cfg: LbfgsConfig, state: TrainState, rec: _Recorder, theta):
    seen: dict[bytes, dict] = {}

    def fun(x):
        f, g, parts = model.loss_and_grad(x)
        if len(seen) > 64:
            seen.clear()
        seen[x.tobytes()] = parts
        return f, g

    def on_step(k, x, f, g, mem):
        state.params = model.params_of(x)
        state.iteration += 1
        state.stage_iter = k
        rec.record(seen.get(x.tobytes(), {"total": f, "f": np.nan, "b": np.nan, "i": np.nan}),
                   state.params)
        state.lbfgs = mem
        rec.fire()

    # the loss at the starting point closes the previous stage
    f0, _, parts0 = model.loss_and_grad(theta)
    rec.record(parts0)
    res = lbfgs_run(fun, theta, cfg, on_step, state.lbfgs, state.stage_iter)
    state.lbfgs = None
    state.lbfgs_status = res.status  # a failed line search keeps the best point
    state.params = model.params_of(res.x)
    return res.x


def write_history_csv(path, history: list) -> None:
    cols = list(HISTORY_COLUMNS)
    if any("metric" in r for r in history):
        cols.append("metric")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in history:
            w.writerow([r.get(c, "") for c in cols])


def select_best(runs: Sequence):
    """Index and run with the smallest final training loss (first wins ties).

    Runs are TrainStates or plain loss histories (lists of rows or floats).
    """
    def final(run):
        if isinstance(run, TrainState):
            return run.final_loss()
        last = run[-1]
        return float(last["loss_total"] if isinstance(last, dict) else last)

    if not runs:
        raise ValueError("no runs to select from")
    losses = [final(r) for r in runs]
    best = int(np.argmin(losses))
    return best, runs[best]
