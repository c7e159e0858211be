"""Adam and L-BFGS on flat parameter vectors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class OptimizerError(FloatingPointError):
    pass


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    iterations: int = 1000
    decay_every: int | None = None  # optional step decay of lr
    decay_rate: float = 1.0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")

    def lr_at(self, t: int) -> float:
        if self.decay_every:
            return self.lr * self.decay_rate ** (t // self.decay_every)
        return self.lr


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(theta: np.ndarray, grad: np.ndarray, state: AdamState, cfg: AdamConfig) -> np.ndarray:
    """One bias-corrected Adam update; ``state`` is updated in place."""
    grad = np.asarray(grad, dtype=float)
    if not np.all(np.isfinite(grad)):
        bad = np.flatnonzero(~np.isfinite(grad))
        raise OptimizerError(f"non-finite gradient in {bad.size} entries (first at flat index {bad[0]})")
    lr = cfg.lr_at(state.t)
    state.t += 1
    state.m = cfg.beta1 * state.m + (1 - cfg.beta1) * grad
    state.v = cfg.beta2 * state.v + (1 - cfg.beta2) * grad * grad
    m_hat = state.m / (1 - cfg.beta1 ** state.t)
    v_hat = state.v / (1 - cfg.beta2 ** state.t)
    return theta - lr * m_hat / (np.sqrt(v_hat) + cfg.eps)


# --- L-BFGS -----------------------------------------------------------------

@dataclass(frozen=True)
class LbfgsConfig:
    memory: int = 50
    max_iter: int = 15000
    c1: float = 1e-4
    c2: float = 0.9
    tol: float = 1e-8
    max_linesearch: int = 30

    def __post_init__(self):
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("need 0 < c1 < c2 < 1")


@dataclass
class LbfgsMemory:
    s: list = field(default_factory=list)
    y: list = field(default_factory=list)

    def push(self, s: np.ndarray, y: np.ndarray, m: int) -> None:
        if float(s @ y) <= 1e-12 * float(np.sqrt((s @ s) * (y @ y))):
            return  # curvature pair would break positive definiteness
        self.s.append(s)
        self.y.append(y)
        if len(self.s) > m:
            self.s.pop(0)
            self.y.pop(0)

    def direction(self, g: np.ndarray) -> np.ndarray:
        """``-H g`` by the two-loop recursion."""
        q = g.copy()
        alphas = []
        for s, y in zip(reversed(self.s), reversed(self.y)):
            rho = 1.0 / (y @ s)
            a = rho * (s @ q)
            q -= a * y
            alphas.append((rho, a))
        if self.s:
            s, y = self.s[-1], self.y[-1]
            q *= (s @ y) / (y @ y)
        for (s, y), (rho, a) in zip(zip(self.s, self.y), reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        return -q


@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    iterations: int
    evaluations: int
    status: str  # "converged", "max_iter", "linesearch_failed"
    losses: list
    memory: LbfgsMemory


def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimiser of the cubic interpolating two points and slopes, or None."""
    d1 = ga + gb - 3 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0:
        return None
    d2 = np.sign(b - a) * np.sqrt(disc)
    t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2 * d2)
    return t if np.isfinite(t) else None


def strong_wolfe(phi: Callable, f0: float, g0: float, step: float, c1: float, c2: float,
                 max_iter: int = 30):
    """Line search for a step satisfying the strong Wolfe conditions.

    ``phi(a)`` returns ``(f, slope, payload)`` along the search direction.
    Returns ``(a, f, payload, ok)``; on failure the lowest point seen.
    """
    a_prev, f_prev, g_prev = 0.0, f0, g0
    best = (0.0, f0, None)
    a = step
    for i in range(max_iter):
        f, g, payload = phi(a)
        if np.isfinite(f) and f < best[1]:
            best = (a, f, payload)
        if not np.isfinite(f) or f > f0 + c1 * a * g0 or (i > 0 and f >= f_prev):
            return _zoom(phi, f0, g0, a_prev, f_prev, g_prev, a, f, g, c1, c2, max_iter, best)
        if abs(g) <= -c2 * g0:
            return a, f, payload, True
        if g >= 0:
            return _zoom(phi, f0, g0, a, f, g, a_prev, f_prev, g_prev, c1, c2, max_iter, best)
        a_prev, f_prev, g_prev = a, f, g
        a = 2.0 * a
    return best[0], best[1], best[2], False


def _zoom(phi, f0, g0, lo, f_lo, g_lo, hi, f_hi, g_hi, c1, c2, max_iter, best):
    for _ in range(max_iter):
        a = None
        if np.isfinite(f_hi) and np.isfinite(g_hi):
            a = _cubic_min(lo, f_lo, g_lo, hi, f_hi, g_hi)
        width = abs(hi - lo)
        if a is None or not (min(lo, hi) + 0.1 * width <= a <= max(lo, hi) - 0.1 * width):
            a = 0.5 * (lo + hi)
        f, g, payload = phi(a)
        if np.isfinite(f) and f < best[1]:
            best = (a, f, payload)
        if not np.isfinite(f) or f > f0 + c1 * a * g0 or f >= f_lo:
            hi, f_hi, g_hi = a, f, g
        else:
            if abs(g) <= -c2 * g0:
                return a, f, payload, True
            if g * (hi - lo) >= 0:
                hi, f_hi, g_hi = lo, f_lo, g_lo
            lo, f_lo, g_lo = a, f, g
        if width < 1e-16 * max(1.0, abs(lo)):
            break
    return best[0], best[1], best[2], False


def lbfgs_run(fun: Callable, x0: np.ndarray, cfg: LbfgsConfig = LbfgsConfig(),
              callback: Callable | None = None, memory: LbfgsMemory | None = None,
              start_iter: int = 0) -> LbfgsResult:
    """Minimise ``fun(x) -> (f, grad)`` by L-BFGS with a strong Wolfe search.

    ``callback(k, x, f, g, memory)`` runs after every accepted step.  On a
    line-search failure the best point found so far is returned with status
    ``"linesearch_failed"``.
    """
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    f = float(f)
    if not np.isfinite(f):
        raise OptimizerError("loss is not finite at the starting point")
    evals = 1
    mem = memory if memory is not None else LbfgsMemory()
    losses = [f]
    k = start_iter
    status = "max_iter"
    while True:
        if np.max(np.abs(g)) < cfg.tol:
            status = "converged"
            break
        if k >= cfg.max_iter:
            break
        d = mem.direction(g)
        slope = float(g @ d)
        if not slope < 0:
            mem = LbfgsMemory()  # reset if the direction is not a descent
            d, slope = -g, -float(g @ g)
        step = 1.0 if mem.s else min(1.0, 1.0 / max(np.sum(np.abs(g)), 1e-300))

        def phi(a, d=d):
            nonlocal evals
            evals += 1
            fa, ga = fun(x + a * d)
            fa = float(fa)
            return fa, float(ga @ d) if np.isfinite(fa) else np.nan, ga

        a, f_new, g_new, ok = strong_wolfe(phi, f, slope, step, cfg.c1, cfg.c2, cfg.max_linesearch)
        if g_new is None or not f_new <= f:
            status = "linesearch_failed"
            break
        s = a * d
        x = x + s
        mem.push(s, g_new - g, cfg.memory)
        f, g = f_new, g_new
        losses.append(f)
        k += 1
        if callback is not None:
            callback(k, x, f, g, mem)
        if not ok:
            status = "linesearch_failed"
            break
    return LbfgsResult(x, f, g, k, evals, status, losses, mem)
