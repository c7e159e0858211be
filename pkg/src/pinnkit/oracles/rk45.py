"""Dormand-Prince 5(4) integrator with dense output."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class StiffnessError(ArithmeticError):
    """The step size underflowed; the problem is too stiff for an explicit method."""


# Butcher tableau
C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4
# continuous extension: y(t + s h) = y + h K^T (P @ [s, s^2, s^3, s^4])
P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass
class OdeSystem:
    rhs: Callable  # (t, y) -> dy/dt
    y0: Sequence[float]
    t_span: tuple[float, float]


def _stages(f, t, y, h, k0):
    K = np.empty((7, y.size))
    K[0] = k0
    for s in range(1, 7):
        K[s] = f(t + C[s] * h, y + h * (np.asarray(A[s]) @ K[:s]))
    return K


class Trajectory:
    """Accepted steps of a run, queryable at any time in the span."""

    def __init__(self, ts, ys, Ks, hs):
        self.t = np.asarray(ts)
        self.y = np.asarray(ys)
        self._K = Ks
        self._h = hs

    def __call__(self, t) -> np.ndarray:
        """State at ``t`` (scalar -> (d,), array (n,) -> (n, d))."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        lo, hi = self.t[0], self.t[-1]
        if np.any(t < min(lo, hi) - 1e-12) or np.any(t > max(lo, hi) + 1e-12):
            raise ValueError("query time outside the integrated span")
        out = np.empty((len(t), self.y.shape[1]))
        if self.t[-1] >= self.t[0]:
            idx = np.searchsorted(self.t, t, side="right") - 1
        else:
            idx = len(self.t) - 1 - np.searchsorted(self.t[::-1], t, side="left")
        idx = np.clip(idx, 0, len(self._h) - 1)
        for n, (ti, i) in enumerate(zip(t, idx)):
            h = self._h[i]
            s = (ti - self.t[i]) / h
            q = P @ np.array([s, s * s, s ** 3, s ** 4])
            out[n] = self.y[i] + h * (q @ self._K[i])
        return out[0] if scalar else out

    @property
    def n_steps(self) -> int:
        return len(self._h)


def _initial_step(f, t0, y0, f0, rtol, atol, direction):
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = f(t0 + direction * h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def rk45(sys: OdeSystem, rtol: float = 1e-6, atol: float = 1e-9, step: float | None = None,
         max_steps: int = 1_000_000) -> Trajectory:
    """Integrate ``sys`` over its span.

    With ``step`` given the fifth-order solution is advanced with that
    fixed step size (the span is split into equal steps no longer than it)
    and no error control; otherwise steps adapt so that the embedded error
    estimate stays below ``atol + rtol |y|`` in RMS norm.
    """
    t0, t1 = map(float, sys.t_span)
    if t0 == t1:
        raise ValueError("empty time span")
    direction = np.sign(t1 - t0)

    def f(t, y):
        return np.asarray(sys.rhs(t, y), dtype=float).ravel()

    y = np.asarray(sys.y0, dtype=float).ravel().copy()
    t = t0
    k = f(t, y)
    ts, ys, Ks, hs = [t], [y.copy()], [], []
    if step is not None:
        n = int(np.ceil(abs(t1 - t0) / step - 1e-12))
        h = (t1 - t0) / n
        for i in range(n):
            K = _stages(f, t, y, h, k)
            y = y + h * (B5 @ K)
            t = t0 + (i + 1) * h
            k = K[6]
            ts.append(t), ys.append(y.copy()), Ks.append(K), hs.append(h)
        return Trajectory(ts, ys, Ks, hs)

    h = direction * _initial_step(f, t, y, k, rtol, atol, direction)
    for _ in range(max_steps):
        if direction * (t - t1) >= 0:
            break
        if abs(h) < 10 * np.spacing(max(abs(t), 1.0)):
            raise StiffnessError(f"step size underflow at t={t}")
        if direction * (t + h - t1) > 0:
            h = t1 - t
        K = _stages(f, t, y, h, k)
        y_new = y + h * (B5 @ K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.sqrt(np.mean((h * (E @ K) / scale) ** 2))
        if not np.isfinite(err):
            h *= 0.2
            continue
        if err <= 1.0:
            t = t + h
            y = y_new
            k = K[6]
            ts.append(t), ys.append(y.copy()), Ks.append(K), hs.append(h)
            factor = 10.0 if err == 0 else min(10.0, 0.9 * err ** -0.2)
        else:
            factor = max(0.2, 0.9 * err ** -0.2)
        h *= factor
    else:
        raise StiffnessError(f"no convergence within {max_steps} steps")
    return Trajectory(ts, ys, Ks, hs)
