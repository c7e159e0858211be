import numpy as np
import pytest

from pinnkit.network import NetworkSpec, init


def central_diff(f, x, h=1e-5):
    """Central-difference gradient of a scalar numpy function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e.flat[k] = h
        g.flat[k] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def central_hessian(f, x, h=1e-4):
    x = np.asarray(x, dtype=float)
    d = x.size
    H = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            ei = np.zeros(d)
            ej = np.zeros(d)
            ei[i] = h
            ej[j] = h
            H[i, j] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h * h)
    return H


def rel_err(a, b, floor=1e-3):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), floor)))


def random_spec(rng, d_in=None, max_depth=3, max_width=20):
    d_in = d_in or int(rng.integers(1, 4))
    depth = int(rng.integers(1, max_depth + 1))
    width = int(rng.integers(2, max_width + 1))
    return NetworkSpec.fnn(d_in, depth, width, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_net():
    spec = NetworkSpec.fnn(2, 2, 8, 1)
    return spec, init(spec, 3)
