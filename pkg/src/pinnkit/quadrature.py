"""Gauss-Legendre quadrature and quadrature-coupled integral operators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from pinnkit.autodiff import ops

MAX_DEGREE = 64


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.nodes)


def legendre(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``P_n(x)`` and ``P_n'(x)`` by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p0, p1 = np.ones_like(x), x.copy()
    if n == 0:
        return p0, np.zeros_like(x)
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


def gauss_legendre(n: int, tol: float = 1e-14) -> QuadratureRule:
    """Nodes and weights of the ``n``-point rule on [-1, 1].

    Roots of ``P_n`` are refined by Newton's method from the Chebyshev-like
    initial guesses ``cos(pi (k - 1/4) / (n + 1/2))``.
    """
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_DEGREE:
        raise QuadratureError(f"degree must be an integer in [1, {MAX_DEGREE}], got {n}")
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = legendre(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    # enforce exact symmetry about 0
    x = np.sort(x)
    x = 0.5 * (x - x[::-1])
    w = 2.0 / ((1.0 - x * x) * legendre(n, x)[1] ** 2)
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(x, w)


class IntegralOperator:
    """``(K y)(x) = integral_{a(x)}^{b(x)} k(t, x) y(t) dt`` by quadrature.

    Args:
        kernel: ``k(t, x)`` working on arrays of nodes ``t`` of shape
            ``(N, n)`` and points ``x`` of shape ``(N, 1)``.
        lower: ``a(x)`` for points of shape ``(N, d)``, returning ``(N,)``.
        upper: ``b(x)`` likewise.
        rule: the quadrature rule on [-1, 1].
    """

    def __init__(self, kernel: Callable, lower: Callable, upper: Callable, rule: QuadratureRule):
        self.kernel = kernel
        self.lower = lower
        self.upper = upper
        self.rule = rule

    def nodes(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Mapped nodes ``t_i(x)`` (N, n) and the scaled weights (N, n)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        a = np.asarray(self.lower(x), dtype=float).reshape(-1, 1)
        b = np.asarray(self.upper(x), dtype=float).reshape(-1, 1)
        if np.any(a > b):
            raise QuadratureError("lower limit exceeds upper limit")
        half = (b - a) / 2
        t = (a + b) / 2 + half * self.rule.nodes
        return t, half * self.rule.weights


def integrate(op: IntegralOperator, x, y: Callable, component: int = 0):
    """Quadrature sum at each point of ``x`` (N, d) -> (N,).

    ``y`` maps node points of shape ``(M, 1)`` to ``(M, m)``.  It is called
    once on all ``N * n`` nodes, so lifted outputs (e.g. network values on a
    parameter tape) keep their dependence on the parameters.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t, w = op.nodes(x)
    n_pts, n_nodes = t.shape
    vals = y(t.reshape(-1, 1))
    vals = ops.take(vals, component, -1) if len(ops.shape(vals)) == 2 else vals
    vals = ops.reshape(vals, (n_pts, n_nodes))
    k = np.asarray(op.kernel(t, x[:, :1]), dtype=float)
    return ops.sum(vals * (w * k), axis=-1)


def volterra_operator(n: int = 20) -> IntegralOperator:
    """``integral_0^x exp(t - x) y(t) dt``."""
    return IntegralOperator(lambda t, x: np.exp(t - x),
                            lambda x: np.zeros(len(x)),
                            lambda x: x[:, 0],
                            gauss_legendre(n))


def volterra_exact(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-x) * np.cosh(x)


def ide_residual(base, op: IntegralOperator, component: int = 0):
    """``base(x) - (K u)(x)``: an integro-differential residual.

    The network is evaluated at the mapped quadrature nodes of every
    collocation point on the same parameter tape as the collocation point.
    """
    from pinnkit.problem.core import Residual

    def fn(x, F, lam):
        integral = integrate(op, x, F.at, component)
        comps = base(x, F, lam)
        return [comps[0] - integral] + comps[1:]

    return Residual(fn, second=base.second, max_order=base.max_order, name=f"{base.name}+integral")


def volterra_base():
    """``dy/dx + y`` with input x."""
    from pinnkit.problem.core import Residual
    return Residual(lambda x, F, lam: F.d(0, 0) + F.u(0), max_order=1, name="volterra")
