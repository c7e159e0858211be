"""Feed-forward network surrogate.

Weights follow the layer convention ``W[l]`` of shape ``(N_l, N_{l-1})``;
batches are row-major, so a layer computes ``h @ W.T + b``.  Every function
here is written with the generic primitives of :mod:`pinnkit.autodiff.ops`
and therefore runs unchanged on arrays, tape Variables, or Duals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from pinnkit.autodiff import ops
from pinnkit.autodiff.tape import Tape, Variable

ACTIVATIONS: dict[str, Callable] = {
    "tanh": ops.tanh,
    "sigmoid": ops.sigmoid,
    "relu": ops.relu,
}


@dataclass(frozen=True)
class NetworkSpec:
    layer_sizes: tuple[int, ...]
    activation: str = "tanh"
    initializer: str = "glorot_uniform"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"invalid layer sizes {sizes}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.initializer != "glorot_uniform":
            raise ValueError(f"unknown initializer {self.initializer!r}")

    @classmethod
    def fnn(cls, d_in: int, depth: int, width: int, d_out: int, activation: str = "tanh"):
        """``depth`` hidden layers of ``width`` neurons."""
        return cls((d_in,) + (width,) * depth + (d_out,), activation)

    @property
    def d_in(self) -> int:
        return self.layer_sizes[0]

    @property
    def d_out(self) -> int:
        return self.layer_sizes[-1]

    def n_weights(self) -> int:
        s = self.layer_sizes
        return sum(s[i] * s[i - 1] + s[i] for i in range(1, len(s)))


@dataclass
class Parameters:
    weights: list
    biases: list
    externals: list = field(default_factory=list)

    def flatten(self) -> np.ndarray:
        parts = [np.ravel(ops.primal(w)) for w in self.weights]
        parts += [np.ravel(ops.primal(b)) for b in self.biases]
        parts.append(np.asarray([float(ops.primal(e)) for e in self.externals]))
        return np.concatenate(parts).astype(float)

    @classmethod
    def unflatten(cls, spec: NetworkSpec, flat: np.ndarray, n_externals: int | None = None):
        flat = np.asarray(flat, dtype=float)
        s = spec.layer_sizes
        expected = spec.n_weights()
        if n_externals is None:
            n_externals = flat.size - expected
        if flat.size != expected + n_externals or n_externals < 0:
            raise ValueError(f"flat vector has {flat.size} entries, expected {expected + n_externals}")
        weights, biases, k = [], [], 0
        for i in range(1, len(s)):
            n = s[i] * s[i - 1]
            weights.append(flat[k:k + n].reshape(s[i], s[i - 1]).copy())
            k += n
        for i in range(1, len(s)):
            biases.append(flat[k:k + s[i]].copy())
            k += s[i]
        return cls(weights, biases, [float(e) for e in flat[k:]])

    def count(self) -> int:
        return self.flatten().size

    def lift(self, tape: Tape) -> "Parameters":
        """Leaves on ``tape`` for every array; externals become scalar leaves."""
        return Parameters([tape.variable(w) for w in self.weights],
                          [tape.variable(b) for b in self.biases],
                          [tape.variable(float(e)) for e in self.externals])

    def leaves(self) -> list:
        return list(self.weights) + list(self.biases) + list(self.externals)

    def copy(self) -> "Parameters":
        return Parameters([np.array(w, dtype=float) for w in self.weights],
                          [np.array(b, dtype=float) for b in self.biases],
                          [float(e) for e in self.externals])


def init(spec: NetworkSpec, seed: int, externals: Sequence[float] = ()) -> Parameters:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    s = spec.layer_sizes
    weights, biases = [], []
    for i in range(1, len(s)):
        limit = np.sqrt(6.0 / (s[i - 1] + s[i]))
        weights.append(rng.uniform(-limit, limit, size=(s[i], s[i - 1])))
        biases.append(np.zeros(s[i]))
    return Parameters(weights, biases, [float(e) for e in externals])


def forward(spec: NetworkSpec, params: Parameters, x, tape: Tape | None = None):
    """Evaluate the raw network.

    ``x`` is one point of shape ``(d_in,)`` or a batch ``(N, d_in)``.  With
    ``tape`` given and ``x`` not yet lifted, ``x`` is recorded as an input
    leaf so that input derivatives can be taken afterwards.
    """
    if tape is not None and not isinstance(x, Variable):
        x = tape.variable(np.asarray(x, dtype=float))
    if ops.shape(x)[-1:] != (spec.d_in,):
        raise ValueError(f"input has shape {ops.shape(x)}, network expects (..., {spec.d_in})")
    act = ACTIVATIONS[spec.activation]
    h = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ ops.swapaxes(w) + b
        if i < last:
            h = act(h)
    return h


OutputTransform = Callable  # (x, raw) -> u_hat


def identity_transform(x, raw):
    return raw


def apply_transform(transform: OutputTransform | None, x, raw):
    return raw if transform is None else transform(x, raw)


class Network:
    """A network spec bundled with an optional output transform."""

    def __init__(self, spec: NetworkSpec, transform: OutputTransform | None = None):
        self.spec = spec
        self.transform = transform

    def __call__(self, params: Parameters, x):
        raw = forward(self.spec, params, x)
        return apply_transform(self.transform, x, raw)

    def predict(self, params: Parameters, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self(params, x), dtype=float)
