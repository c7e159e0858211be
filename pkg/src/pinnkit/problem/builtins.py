"""Residuals and exact solutions of the built-in example problems."""

from __future__ import annotations

from typing import Callable

import numpy as np

from pinnkit.autodiff import ops
from pinnkit.problem.core import Residual

# --- Poisson ----------------------------------------------------------------


def poisson_residual(dim: int = 2, source: Callable | float = 1.0) -> Residual:
    """``-laplace(u) = f``."""
    axes = tuple(range(dim))

    def fn(x, F, lam):
        f = source(x) if callable(source) else source
        return -F.laplacian(0, axes) - f

    return Residual(fn, second=axes, name="poisson")


# --- Burgers ----------------------------------------------------------------


def burgers_residual(nu: float) -> Residual:
    """``u_t + u u_x - nu u_xx`` with inputs (x, t)."""

    def fn(x, F, lam):
        u = F.u(0)
        return F.d(0, 1) + u * F.d(0, 0) - nu * F.dd(0, 0)

    return Residual(fn, second=(0,), name="burgers-1d")


def burgers2d_residual(re: float) -> Residual:
    """Viscous Burgers system for (u, v) with inputs (x, y, t)."""
    k = 1.0 / re

    def fn(x, F, lam):
        u, v = F.u(0), F.u(1)
        out = []
        for c in (0, 1):
            out.append(F.d(c, 2) + u * F.d(c, 0) + v * F.d(c, 1)
                       - k * (F.dd(c, 0) + F.dd(c, 1)))
        return out

    return Residual(fn, second=(0, 1), name="burgers-2d")


def burgers2d_exact(x, re: float) -> np.ndarray:
    """Closed-form travelling-front solution; returns (N, 2)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    arg = (-4 * x[:, 0] + 4 * x[:, 1] - x[:, 2]) * re / 32
    # 1 / (1 + e^a) written to stay finite for large |a|
    q = 0.25 * np.exp(-np.logaddexp(0.0, arg))
    return np.stack([0.75 - q, 0.75 + q], axis=1)


def burgers2d_exact_lifted(x, re: float):
    """Same closed form built from lifted primitives (for output transforms)."""
    arg = (ops.take(x, 0) * -4.0 + ops.take(x, 1) * 4.0 - ops.take(x, 2)) * (re / 32)
    q = 0.25 / (1.0 + ops.exp(arg))
    return 0.75 - q, 0.75 + q


# --- Lorenz -----------------------------------------------------------------

LORENZ_TRUE = (10.0, 15.0, 8.0 / 3.0)
LORENZ_X0 = (-8.0, 7.0, 27.0)


def lorenz_rhs(state, rho, sigma, beta):
    """Right-hand side for one state (3,) or a batch (N, 3)."""
    s = np.asarray(state, dtype=float)
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    return np.stack([rho * (y - x), x * (sigma - z) - y, x * y - beta * z], axis=-1)


def lorenz_residual(scales=(1.0, 1.0, 1.0)) -> Residual:
    """Lorenz system residual; unknowns (rho, sigma, beta) are the externals."""

    def fn(t, F, lam):
        rho, sigma, beta = (lam[k] * scales[k] for k in range(3))
        x, y, z = F.u(0), F.u(1), F.u(2)
        return [F.d(0, 0) - rho * (y - x),
                F.d(1, 0) - (x * (sigma - z) - y),
                F.d(2, 0) - (x * y - beta * z)]

    return Residual(fn, max_order=1, name="lorenz")


# --- diffusion-reaction -----------------------------------------------------

DR_TRUE = (2e-3, 0.1)


def diffusion_reaction_residual(scales=(1.0, 1.0)) -> Residual:
    """``C_A,t = D C_A,xx - kf C_A C_B^2`` and ``C_B,t = D C_B,xx - 2 kf C_A C_B^2``.

    ``D`` and ``kf`` are the externals, multiplied by ``scales``.
    """

    def fn(x, F, lam):
        d, kf = lam[0] * scales[0], lam[1] * scales[1]
        ca, cb = F.u(0), F.u(1)
        reaction = kf * ca * cb * cb
        return [F.d(0, 1) - d * F.dd(0, 0) + reaction,
                F.d(1, 1) - d * F.dd(1, 0) + 2.0 * reaction]

    return Residual(fn, second=(0,), name="diffusion-reaction")
