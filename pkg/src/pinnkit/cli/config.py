"""Run configuration: JSON parsing, validation and canonical form."""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field

from pinnkit.problem import LossWeights
from pinnkit.rar import RarConfig
from pinnkit.training import AdamConfig, LbfgsConfig


class ConfigError(ValueError):
    """Schema violation; the message names the key and, when known, the line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key, self.line = key, line
        where = ""
        if key is not None:
            where = f" (key {key!r}" + (f", line {line})" if line else ")")
        super().__init__(message + where)


SECTIONS = {
    "problem": None,
    "seed": None,
    "out": None,
    "network": {"depth", "width", "activation"},
    "optimizers": None,
    "points": {"domain", "boundary", "initial", "strategy", "batch_size"},
    "rar": {"m", "E0", "pool_size", "inner_iters", "max_rounds", "lr", "inner_optimizer"},
    "weights": {"w_f", "w_b", "w_i"},
    "params": None,
    "geometry": None,
    "residual": None,
    "conditions": None,
    "predict": {"grid", "points"},
}
ADAM_KEYS = {"name", "lr", "beta1", "beta2", "eps", "iterations", "decay_every", "decay_rate"}
LBFGS_KEYS = {"name", "memory", "max_iter", "c1", "c2", "tol", "max_linesearch"}


@dataclass
class NetworkConfig:
    depth: int
    width: int
    activation: str = "tanh"


@dataclass
class PointsConfig:
    domain: int
    boundary: int = 0
    initial: int = 0
    strategy: str = "fixed"
    batch_size: int | None = None


@dataclass
class RunConfig:
    problem: str
    network: NetworkConfig
    optimizers: list
    points: PointsConfig
    rar: RarConfig | None = None
    seed: int = 0
    out: str = "run"
    weights: LossWeights = field(default_factory=LossWeights)
    params: dict = field(default_factory=dict)
    geometry: object = None
    residual: dict | None = None
    conditions: list | None = None
    predict: dict | None = None


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


class _Checker:
    def __init__(self, text):
        self.text = text

    def fail(self, msg, key):
        raise ConfigError(msg, key, _line_of(self.text, key))

    def keys(self, d, allowed, where):
        if not isinstance(d, dict):
            self.fail(f"{where} must be an object", where)
        for k in d:
            if k not in allowed:
                self.fail(f"unknown key in {where}; allowed: {sorted(allowed)}", k)

    def integer(self, d, key, minimum=None, optional=False):
        v = d.get(key)
        if v is None and optional:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(f"{key} must be an integer", key)
        if minimum is not None and v < minimum:
            self.fail(f"{key} must be >= {minimum}, got {v}", key)
        return v

    def number(self, d, key, positive=False, optional=False):
        v = d.get(key)
        if v is None and optional:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(f"{key} must be a number", key)
        if positive and not v > 0:
            self.fail(f"{key} must be positive, got {v}", key)
        return float(v)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("params",):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _optimizer(c: _Checker, d: dict):
    name = d.get("name") if isinstance(d, dict) else None
    if name == "adam":
        c.keys(d, ADAM_KEYS, "optimizers[adam]")
        kw = {k: v for k, v in d.items() if k != "name"}
        for k in ("iterations", "decay_every"):
            if k in kw:
                c.integer(kw, k, 0, optional=True)
        for k in ("lr", "beta1", "beta2", "eps", "decay_rate"):
            if k in kw:
                c.number(kw, k)
        try:
            return AdamConfig(**kw)
        except ValueError as exc:
            c.fail(str(exc), "optimizers")
    if name == "lbfgs":
        c.keys(d, LBFGS_KEYS, "optimizers[lbfgs]")
        kw = {k: v for k, v in d.items() if k != "name"}
        for k in ("memory", "max_iter", "max_linesearch"):
            if k in kw:
                c.integer(kw, k, 1)
        try:
            return LbfgsConfig(**kw)
        except ValueError as exc:
            c.fail(str(exc), "optimizers")
    c.fail(f"optimizer name must be 'adam' or 'lbfgs', got {name!r}", "optimizers")


def build_config(d: dict, text: str | None = None) -> RunConfig:
    """Validate a merged config dictionary (registry defaults already applied)."""
    from pinnkit.cli.registry import REGISTRY

    c = _Checker(text)
    c.keys(d, set(SECTIONS), "config")
    prob = d.get("problem")
    if not isinstance(prob, str):
        c.fail("problem must name a built-in example or be 'custom'", "problem")
    if prob != "custom" and prob not in REGISTRY:
        c.fail(f"unknown problem {prob!r}; available: {sorted(REGISTRY) + ['custom']}", "problem")
    for sec in ("network", "points", "rar", "weights", "predict"):
        if d.get(sec) is not None:
            c.keys(d[sec], SECTIONS[sec], sec)
    net = d.get("network") or c.fail("missing network section", "network")
    network = NetworkConfig(c.integer(net, "depth", 1), c.integer(net, "width", 1),
                            net.get("activation", "tanh"))
    if network.activation not in ("tanh", "sigmoid", "relu"):
        c.fail(f"unknown activation {network.activation!r}", "activation")
    pts = d.get("points") or c.fail("missing points section", "points")
    points = PointsConfig(c.integer(pts, "domain", 1),
                          c.integer(pts, "boundary", 0, optional=True) or 0,
                          c.integer(pts, "initial", 0, optional=True) or 0,
                          pts.get("strategy", "fixed"),
                          c.integer(pts, "batch_size", 1, optional=True))
    if points.strategy not in ("fixed", "resample", "adaptive"):
        c.fail(f"unknown strategy {points.strategy!r}", "strategy")
    opts = d.get("optimizers")
    if not isinstance(opts, list) or not opts:
        c.fail("optimizers must be a non-empty list", "optimizers")
    optimizers = [_optimizer(c, o) for o in opts]
    rar = None
    if d.get("rar") is not None:
        r = d["rar"]
        try:
            rar = RarConfig(**{k: v for k, v in r.items()})
        except (TypeError, ValueError) as exc:
            c.fail(f"invalid rar settings: {exc}", "rar")
    w = d.get("weights") or {}
    try:
        weights = LossWeights(**w)
    except ValueError as exc:
        c.fail(str(exc), "weights")
    seed = c.integer(d, "seed", 0) if "seed" in d else 0
    out = d.get("out", "run")
    if not isinstance(out, str) or not out:
        c.fail("out must be a directory path", "out")
    params = d.get("params") or {}
    if not isinstance(params, dict):
        c.fail("params must be an object", "params")
    if prob == "custom":
        for k in ("geometry", "residual"):
            if d.get(k) is None:
                c.fail(f"a custom problem needs {k}", k)
    return RunConfig(prob, network, optimizers, points, rar, seed, out, weights, params,
                     d.get("geometry"), d.get("residual"), d.get("conditions"), d.get("predict"))


def _with_defaults(d: dict, c: _Checker) -> dict:
    from pinnkit.cli.registry import REGISTRY

    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    prob = d.get("problem")
    if isinstance(prob, str) and prob in REGISTRY:
        return _merge(REGISTRY[prob].defaults, d)
    return d


def parse_config_text(text: str) -> RunConfig:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} at line {exc.lineno}", line=exc.lineno) from exc
    return build_config(_with_defaults(d, _Checker(text)), text)


def parse_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def _optimizer_dict(o) -> dict:
    if isinstance(o, AdamConfig):
        d = {"name": "adam", "lr": o.lr, "beta1": o.beta1, "beta2": o.beta2, "eps": o.eps,
             "iterations": o.iterations}
        if o.decay_every:
            d.update(decay_every=o.decay_every, decay_rate=o.decay_rate)
        return d
    return {"name": "lbfgs", "memory": o.memory, "max_iter": o.max_iter, "c1": o.c1, "c2": o.c2,
            "tol": o.tol, "max_linesearch": o.max_linesearch}


def to_dict(cfg: RunConfig) -> dict:
    """Canonical JSON-compatible form; ``build_config(to_dict(c)) == c``."""
    d = {
        "problem": cfg.problem,
        "seed": cfg.seed,
        "out": cfg.out,
        "network": {"depth": cfg.network.depth, "width": cfg.network.width,
                    "activation": cfg.network.activation},
        "optimizers": [_optimizer_dict(o) for o in cfg.optimizers],
        "points": {"domain": cfg.points.domain, "boundary": cfg.points.boundary,
                   "initial": cfg.points.initial, "strategy": cfg.points.strategy,
                   "batch_size": cfg.points.batch_size},
        "rar": None if cfg.rar is None else {
            "m": cfg.rar.m, "E0": cfg.rar.E0, "pool_size": cfg.rar.pool_size,
            "inner_iters": cfg.rar.inner_iters, "max_rounds": cfg.rar.max_rounds, "lr": cfg.rar.lr,
            "inner_optimizer": cfg.rar.inner_optimizer},
        "weights": {"w_f": cfg.weights.w_f, "w_b": cfg.weights.w_b, "w_i": cfg.weights.w_i},
        "params": dict(cfg.params),
    }
    for k in ("geometry", "residual", "conditions", "predict"):
        if getattr(cfg, k) is not None:
            d[k] = getattr(cfg, k)
    return d


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(to_dict(cfg), indent=2, sort_keys=True)
