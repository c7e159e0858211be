"""Run orchestration: train, predict and export.

``solve`` trains (with refinement when the config asks for it), evaluates
the surrogate and writes every artifact into the output directory:

``checkpoint.npz``    final training state
``loss_history.csv``  one row per parameter update
``solution.csv``      coordinates followed by the predicted components
``added_points.csv``  points added by refinement (refinement runs only)
``spectrum.csv``      amplitude history (frequency demo only)
``report.json``       the :class:`RunReport`
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from pinnkit.cli.config import ConfigError, RunConfig, dump_config, parse_config
from pinnkit.cli.registry import build_points, build_problem, reference
from pinnkit.geometry import SpaceTimeDomain
from pinnkit.network import NetworkSpec
from pinnkit.problem import PointSets
from pinnkit.rar import rar_loop, write_added_points_csv
from pinnkit.training import (
    AdamConfig,
    CheckpointError,
    Model,
    OptimizerError,
    SpectrumMonitor,
    TrainState,
    load_checkpoint,
    save_checkpoint,
    train,
    write_history_csv,
)
from pinnkit.training.callbacks import write_spectrum_csv

COMMANDS = ("solve", "train", "predict", "export")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class DomainError(ValueError):
    """A metric is undefined for the given input."""


class MissingCheckpointError(CheckpointError):
    pass


def l2_relative_error(pred, ref) -> float:
    """``||pred - ref||_2 / ||ref||_2`` over all entries."""
    pred = np.asarray(pred, dtype=float).ravel()
    ref = np.asarray(ref, dtype=float).ravel()
    if pred.shape != ref.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions, {ref.size} reference values")
    norm = np.linalg.norm(ref)
    if norm == 0.0:
        raise DomainError("relative error is undefined for a zero reference")
    return float(np.linalg.norm(pred - ref) / norm)


@dataclass
class RunReport:
    command: str
    problem: str
    status: str = "ok"
    losses: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    externals: dict = field(default_factory=dict)
    wall_time: float = 0.0
    files: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_OK if not self.errors else EXIT_NUMERIC

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


def override_iterations(cfg: RunConfig, iters: int) -> RunConfig:
    """Set every Adam stage to ``iters`` steps and cap L-BFGS at ``iters``."""
    opts = []
    for o in cfg.optimizers:
        if isinstance(o, AdamConfig):
            opts.append(dataclasses.replace(o, iterations=iters))
        else:
            opts.append(dataclasses.replace(o, max_iter=iters))
    return dataclasses.replace(cfg, optimizers=opts)


def network_spec(cfg: RunConfig, problem) -> NetworkSpec:
    return NetworkSpec.fnn(problem.geometry.dim, cfg.network.depth, cfg.network.width,
                           problem.d_out, cfg.network.activation)


def predict_points(cfg: RunConfig, problem) -> np.ndarray:
    """Points from ``cfg.predict``, else the reference points, else a uniform grid."""
    p = cfg.predict or {}
    if "points" in p:
        return np.atleast_2d(np.asarray(p["points"], dtype=float))
    if "grid" in p:
        g = p["grid"]
        axes = [np.linspace(lo, hi, int(n)) for lo, hi, n in zip(g["lower"], g["upper"], g["n"])]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
    ref = reference(cfg)
    if ref is not None:
        return np.atleast_2d(np.asarray(ref[0], dtype=float)).reshape(len(ref[0]), -1)
    return problem.geometry.uniform_points(1000)


def _fmt(v: float) -> str:
    return repr(float(v))


def coordinate_names(geom) -> list:
    d = geom.dim
    if isinstance(geom, SpaceTimeDomain):
        return [f"x{k}" for k in range(d - 1)] + ["t"]
    return [f"x{k}" for k in range(d)]


def write_solution_csv(path, x: np.ndarray, u: np.ndarray, coords: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(coords + [f"u{c}" for c in range(u.shape[1])])
        for xi, ui in zip(x, u):
            w.writerow([_fmt(v) for v in xi] + [_fmt(v) for v in ui])


class _Run:
    def __init__(self, cmd: str, cfg: RunConfig, restore=None):
        self.cmd, self.cfg, self.restore = cmd, cfg, restore
        self.report = RunReport(cmd, cfg.problem)
        self.out = cfg.out
        self.problem = build_problem(cfg)
        self.spec = network_spec(cfg, self.problem)

    def path(self, name):
        return os.path.join(self.out, name)

    def written(self, name):
        p = self.path(name)
        if p not in self.report.files:
            self.report.files.append(p)

    def load(self):
        path = self.restore or self.path("checkpoint.npz")
        if not os.path.exists(path):
            raise MissingCheckpointError(f"no checkpoint at {path}; run train or solve first")
        spec, state = load_checkpoint(path)
        if spec != self.spec:
            raise ConfigError(f"checkpoint network {spec.layer_sizes} does not match the config "
                              f"{self.spec.layer_sizes}", "network")
        return state

    def model(self, state=None):
        rng = np.random.default_rng([self.cfg.seed, 1])
        points = build_points(self.problem, self.cfg, rng)
        if state is not None and state.T_f is not None:
            points = PointSets(state.T_f, points.T_b, points.strategy, points.batch_size)
        return Model(self.problem, self.spec, points, self.cfg.weights)

    def train(self):
        cfg = self.cfg
        state = self.load() if self.restore else None
        if state is not None and (state.stage >= len(cfg.optimizers) or state.status == "done"):
            # a finished run is a warm start: its parameters go through every stage again
            state.stage, state.stage_iter, state.adam, state.lbfgs = 0, 0, None, None
            state.status = "running"
        model = self.model(state)
        if state is None:
            # created here so a failed run still leaves its partial state
            state = TrainState(model.init_params(cfg.seed), rng=np.random.default_rng(cfg.seed))
        callbacks = []
        spectrum = None
        if cfg.problem == "frequency-demo":
            spectrum = SpectrumMonitor(period=int(cfg.params.get("spectrum_every", 100)))
            callbacks.append(spectrum)
        rar_log = None
        try:
            state = train(model, cfg.optimizers, state, seed=cfg.seed, callbacks=callbacks)
            if cfg.rar is not None and cfg.points.strategy == "adaptive":
                res = rar_loop(model, cfg.rar, state, rng=np.random.default_rng([cfg.seed, 2]),
                               callbacks=callbacks)
                state, rar_log = res.state, res.log
                self.report.metrics.update(rar_rounds=res.rounds, rar_converged=res.converged,
                                           rar_final_mean_residual=res.errors[-1])
        except (OptimizerError, FloatingPointError) as exc:
            self.report.status = "failed"
            self.report.errors.append(f"{type(exc).__name__}: {exc}")
        os.makedirs(self.out, exist_ok=True)
        save_checkpoint(self.path("checkpoint.npz"), self.spec, state)
        self.written("checkpoint.npz")
        write_history_csv(self.path("loss_history.csv"), state.history)
        self.written("loss_history.csv")
        if rar_log is not None:
            write_added_points_csv(self.path("added_points.csv"), rar_log, self.problem.geometry.dim)
            self.written("added_points.csv")
        if spectrum is not None and spectrum.iterations:
            write_spectrum_csv(self.path("spectrum.csv"), spectrum.ks, spectrum.iterations,
                               spectrum.amplitudes)
            self.written("spectrum.csv")
        return model, state

    def summarize(self, model, state):
        if state.history:
            last = state.history[-1]
            self.report.losses = {k: last[k] for k in ("loss_total", "loss_f", "loss_b", "loss_i")}
            self.report.metrics["iterations"] = state.iteration
        if state.lbfgs_status:
            self.report.metrics["lbfgs_status"] = state.lbfgs_status
        if self.problem.externals:
            self.report.externals = self.problem.physical_externals(
                [float(v) for v in state.params.externals])

    def predict(self, model, state):
        x = predict_points(self.cfg, self.problem)
        u = model.predict(state.params, x)
        os.makedirs(self.out, exist_ok=True)
        write_solution_csv(self.path("solution.csv"), x, u, coordinate_names(self.problem.geometry))
        self.written("solution.csv")
        ref_vals = None
        if self.cfg.predict is None:
            ref = reference(self.cfg)
            if ref is not None:
                ref_vals = ref[1]
        if ref_vals is None and self.problem.exact is not None:
            ref_vals = self.problem.exact(x)
        if ref_vals is not None:
            ref_vals = np.asarray(ref_vals, dtype=float).reshape(len(x), -1)
            try:
                self.report.metrics["l2_relative_error"] = l2_relative_error(u, ref_vals)
            except DomainError as exc:
                self.report.metrics["l2_relative_error"] = None
                self.report.metrics["l2_note"] = str(exc)

    def execute(self) -> RunReport:
        t0 = time.perf_counter()
        if self.cmd in ("solve", "train"):
            model, state = self.train()
        else:
            state = self.load()
            model = self.model(state)
        self.summarize(model, state)
        if self.cmd in ("solve", "predict", "export") and self.report.status != "failed":
            self.predict(model, state)
        if self.cmd == "export":
            write_history_csv(self.path("loss_history.csv"), state.history)
            self.written("loss_history.csv")
        self.report.wall_time = time.perf_counter() - t0
        os.makedirs(self.out, exist_ok=True)
        with open(self.path("config.json"), "w") as fh:
            fh.write(dump_config(self.cfg))
        self.written("config.json")
        self.written("report.json")
        with open(self.path("report.json"), "w") as fh:
            fh.write(self.report.to_json())
        return self.report


def run(cmd: str, cfg: RunConfig, restore=None) -> RunReport:
    """Execute one command.

    Raises:
        ConfigError: invalid settings, including a checkpoint that does not
            match the configured network.
        MissingCheckpointError: ``predict``/``export`` without a checkpoint.
    """
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}; expected one of {COMMANDS}")
    return _Run(cmd, cfg, restore).execute()


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="pinnkit", description="Train and evaluate PINN surrogates.")
    ap.add_argument("command", nargs="?", default="solve", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--out", help="override the output directory")
    ap.add_argument("--iters", type=int, help="override Adam iterations and the L-BFGS cap")
    ap.add_argument("--restore", help="checkpoint to resume (or warm-start, if finished) or evaluate")
    args = ap.parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, out=args.out)
        if args.iters is not None:
            if args.iters < 1:
                raise ConfigError("--iters must be >= 1", "iters")
            cfg = override_iterations(cfg, args.iters)
        report = run(args.command, cfg, args.restore)
    except (ConfigError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, OptimizerError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(report.to_json())
    return report.exit_code
