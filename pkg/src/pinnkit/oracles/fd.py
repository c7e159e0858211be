"""Finite-difference reference solvers.

These share no code with the network path so that they can serve as
independent baselines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class ResolutionError(ArithmeticError):
    """The grid is too coarse for a stable explicit scheme."""


@dataclass
class Grid1dSolution:
    """Fields on a uniform (t, x) grid; ``values`` has shape (nt, nx, n_fields)."""

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray

    def at(self, x, t, field: int = 0) -> np.ndarray:
        """Bilinear interpolation at points ``(x, t)``."""
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        fx = np.clip((x - self.x[0]) / (self.x[1] - self.x[0]), 0, len(self.x) - 1)
        ft = np.clip((t - self.t[0]) / (self.t[1] - self.t[0]), 0, len(self.t) - 1)
        i = np.minimum(fx.astype(int), len(self.x) - 2)
        j = np.minimum(ft.astype(int), len(self.t) - 2)
        a, b = fx - i, ft - j
        v = self.values[..., field]
        return ((1 - a) * (1 - b) * v[j, i] + a * (1 - b) * v[j, i + 1]
                + (1 - a) * b * v[j + 1, i] + a * b * v[j + 1, i + 1])

    def points(self) -> np.ndarray:
        """All grid nodes as (x, t) rows, time-major."""
        xx, tt = np.meshgrid(self.x, self.t)
        return np.stack([xx.ravel(), tt.ravel()], axis=1)


def _save_plan(nt: int, n_save: int) -> np.ndarray:
    n_save = min(n_save, nt + 1)
    if nt % (n_save - 1):
        raise ValueError(f"n_save - 1 = {n_save - 1} must divide nt = {nt}")
    return np.arange(0, nt + 1, nt // (n_save - 1))


def fd_burgers_1d(nu: float, nx: int, nt: int, t_end: float = 1.0, n_save: int = 101) -> Grid1dSolution:
    """Viscous Burgers ``u_t + (u^2/2)_x = nu u_xx`` on [-1, 1].

    Conservative flux form, central differences in space, forward Euler in
    time; ``u(x, 0) = -sin(pi x)`` and ``u(+-1, t) = 0``.  ``n_save`` time
    levels (including both ends) are kept.
    """
    x = np.linspace(-1.0, 1.0, nx)
    dx = x[1] - x[0]
    dt = t_end / nt
    u = -np.sin(np.pi * x)
    u[0] = u[-1] = 0.0
    umax = np.max(np.abs(u))
    if nu * dt / dx ** 2 > 0.5 or umax * dt / dx > 1.0:
        raise ResolutionError(f"unstable step: nu dt/dx^2 = {nu * dt / dx**2:.3g}, "
                              f"CFL = {umax * dt / dx:.3g}")
    save = set(_save_plan(nt, n_save).tolist())
    frames = []
    r_adv, r_diff = dt / (2 * dx), nu * dt / dx ** 2
    for n in range(nt + 1):
        if n in save:
            frames.append(u.copy())
        if n == nt:
            break
        flux = 0.5 * u * u
        un = u.copy()
        un[1:-1] = (u[1:-1] - r_adv * (flux[2:] - flux[:-2])
                    + r_diff * (u[2:] - 2 * u[1:-1] + u[:-2]))
        u = un
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > 10 * umax:
            raise ResolutionError(f"solution blew up at step {n + 1}")
    t = np.linspace(0.0, t_end, len(frames))
    return Grid1dSolution(x, t, np.array(frames)[..., None])


def fd_diffusion_reaction(D: float, kf: float, nx: int, nt: int, t_end: float = 10.0,
                          n_save: int = 101) -> Grid1dSolution:
    """Species A, B with ``A + 2B -> C`` on [0, 1] x [0, t_end].

    ``C_A,t = D C_A,xx - kf C_A C_B^2``, ``C_B,t = D C_B,xx - 2 kf C_A C_B^2``,
    initial data ``exp(-20 x)`` for both, Dirichlet values 1 at x = 0 and 0
    at x = 1.  Explicit Euler with central differences.  ``values[..., 0]``
    is C_A and ``values[..., 1]`` is C_B.
    """
    x = np.linspace(0.0, 1.0, nx)
    dx = x[1] - x[0]
    dt = t_end / nt
    if D * dt / dx ** 2 > 0.5 or 2 * kf * dt > 0.5:
        raise ResolutionError(f"unstable step: D dt/dx^2 = {D * dt / dx**2:.3g}")
    a = np.exp(-20 * x)
    b = a.copy()
    for c in (a, b):
        c[0], c[-1] = 1.0, 0.0
    save = set(_save_plan(nt, n_save).tolist())
    frames = []
    r = D * dt / dx ** 2
    for n in range(nt + 1):
        if n in save:
            frames.append(np.stack([a, b], axis=-1))
        if n == nt:
            break
        rate = kf * a[1:-1] * b[1:-1] ** 2
        an, bn = a.copy(), b.copy()
        an[1:-1] = a[1:-1] + r * (a[2:] - 2 * a[1:-1] + a[:-2]) - dt * rate
        bn[1:-1] = b[1:-1] + r * (b[2:] - 2 * b[1:-1] + b[:-2]) - 2 * dt * rate
        a, b = an, bn
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ResolutionError(f"solution blew up at step {n + 1}")
    t = np.linspace(0.0, t_end, len(frames))
    return Grid1dSolution(x, t, np.array(frames))


@dataclass
class LShapeSolution:
    """Nodal values on the grid of [-1, 1]^2; NaN outside the L-shape."""

    x: np.ndarray
    y: np.ndarray
    u: np.ndarray  # u[j, i] at (x[i], y[j])

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Points (M, 2) and values (M,) of every node in the closed domain."""
        xx, yy = np.meshgrid(self.x, self.y)
        keep = np.isfinite(self.u)
        return np.stack([xx[keep], yy[keep]], axis=1), self.u[keep]


def fd_poisson_lshape(n: int, source: float = 1.0) -> LShapeSolution:
    """Five-point solve of ``-laplace(u) = source`` on [-1,1]^2 minus [0,1]^2, u = 0 on the boundary.

    ``n`` intervals per side (even, so x = 0 and y = 0 are grid lines).
    """
    if n < 2 or n % 2:
        raise ValueError("n must be an even integer >= 2")
    x = np.linspace(-1.0, 1.0, n + 1)
    h = x[1] - x[0]
    X, Y = np.meshgrid(x, x)
    in_closed = ~((X > 1e-12) & (Y > 1e-12))
    on_edge = (np.abs(X) > 1 - 1e-12) | (np.abs(Y) > 1 - 1e-12)
    on_edge |= ((np.abs(X) < 1e-12) & (Y > -1e-12)) | ((np.abs(Y) < 1e-12) & (X > -1e-12))
    unknown = in_closed & ~on_edge
    idx = -np.ones(X.shape, dtype=int)
    idx[unknown] = np.arange(unknown.sum())
    rows, cols, vals = [], [], []
    jj, ii = np.nonzero(unknown)
    k = idx[jj, ii]
    rows.append(k), cols.append(k), vals.append(np.full(k.size, 4.0))
    for dj, di in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        nb = idx[jj + dj, ii + di]
        ok = nb >= 0
        rows.append(k[ok]), cols.append(nb[ok]), vals.append(-np.ones(ok.sum()))
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(k.size, k.size))
    sol = spla.spsolve(A, np.full(k.size, source * h * h))
    u = np.full(X.shape, np.nan)
    u[in_closed] = 0.0
    u[unknown] = sol[idx[unknown]]
    return LShapeSolution(x, x.copy(), u)
