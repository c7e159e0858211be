"""Synthetic observation data for the inverse problems."""

from __future__ import annotations

import csv
from typing import Sequence

import numpy as np

from pinnkit.oracles.fd import fd_diffusion_reaction
from pinnkit.oracles.rk45 import OdeSystem, rk45

LORENZ_PARAMS = (10.0, 15.0, 8.0 / 3.0)
LORENZ_START = (-8.0, 7.0, 27.0)


def _lorenz(rho, sigma, beta):
    def rhs(t, s):
        x, y, z = s
        return [rho * (y - x), x * (sigma - z) - y, x * y - beta * z]
    return rhs


def lorenz_observations(n: int = 25, t_end: float = 3.0, params=LORENZ_PARAMS, y0=LORENZ_START,
                        rtol: float = 1e-10, atol: float = 1e-12, noise: float = 0.0, rng=None):
    """States at ``n`` equispaced times in [0, t_end]; returns (t (n, 1), states (n, 3)).

    ``noise`` is the standard deviation of optional additive Gaussian noise.
    """
    traj = rk45(OdeSystem(_lorenz(*params), y0, (0.0, t_end)), rtol=rtol, atol=atol)
    t = np.linspace(0.0, t_end, n)
    values = traj(t)
    if noise:
        values = values + noise * np.random.default_rng(rng).standard_normal(values.shape)
    return t[:, None], values


def diffusion_reaction_observations(n: int = 2000, D: float = 2e-3, kf: float = 0.1,
                                    nx: int = 101, nt: int = 10000, noise: float = 0.0, rng=None):
    """A uniform random subsample of the FD grid; returns (points (n, 2), values (n, 2))."""
    sol = fd_diffusion_reaction(D, kf, nx, nt)
    pts = sol.points()
    vals = sol.values.reshape(-1, 2)
    rng = np.random.default_rng(rng)
    pick = np.sort(rng.choice(len(pts), size=n, replace=False))
    values = vals[pick]
    if noise:
        values = values + noise * rng.standard_normal(values.shape)
    return pts[pick], values


def write_observations_csv(path, points, values, coords: Sequence[str], names: Sequence[str]) -> None:
    points = np.atleast_2d(points)
    values = np.asarray(values).reshape(len(points), -1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(coords) + list(names))
        for p, v in zip(points, values):
            w.writerow([repr(float(a)) for a in p] + [repr(float(a)) for a in v])


def read_observations_csv(path, n_coords: int) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :n_coords], data[:, n_coords:]
