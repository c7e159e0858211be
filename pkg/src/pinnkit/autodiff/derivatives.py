"""Input derivatives of scalar and batched maps.

Second derivatives are forward-over-reverse: inputs are seeded as Duals,
the tape records Dual values, and the single reverse sweep then carries a
tangent channel, so the adjoint of input ``i`` holds ``du/dx_i`` in its
value and ``d2u/dx_i dx_j`` in its tangent along seed ``j``.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from pinnkit.autodiff import ops
from pinnkit.autodiff.dual import Dual, DualTag, seed
from pinnkit.autodiff.tape import Tape, Variable


class UnsupportedOrderError(ValueError):
    pass


def _scalar_output(y):
    if isinstance(y, Variable) and ops.shape(y.value) not in ((), (1,)):
        raise ValueError(f"expected a scalar output, got shape {ops.shape(y.value)}")
    return y


def gradient(f: Callable, x) -> np.ndarray:
    """Full input gradient of a scalar function in one reverse sweep."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    tape = Tape()
    xv = tape.variable(x)
    y = _scalar_output(f(xv))
    if not isinstance(y, Variable):
        return np.zeros_like(x)
    return np.asarray(tape.backward(y)[xv], dtype=float)


def derivative(f: Callable, x, order: int = 1, i: int = 0, j: int | None = None) -> float:
    """``du/dx_i`` (order 1) or ``d2u/dx_i dx_j`` (order 2) of a scalar map.

    ``f`` receives the point as a 1-D Variable and must return a scalar
    built from the primitives in :mod:`pinnkit.autodiff.ops`.
    """
    if order not in (1, 2):
        raise UnsupportedOrderError(f"derivative order {order} not supported (max 2)")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if order == 1:
        return float(gradient(f, x)[i])
    j = i if j is None else j
    xd = seed(x, [j])
    tape = Tape()  # created after the seed tag, so it wraps the Duals
    xv = tape.variable(xd)
    y = _scalar_output(f(xv))
    if not isinstance(y, Variable):
        return 0.0
    adj = tape.backward(y)[xv]
    if not isinstance(adj, Dual):
        return 0.0
    return float(np.broadcast_to(adj.tangent, (1,) + x.shape)[0, i])


def hessian(f: Callable, x) -> np.ndarray:
    """Full Hessian via one forward-over-reverse sweep seeded in every direction."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    xd = seed(x, list(range(d)))
    tape = Tape()
    xv = tape.variable(xd)
    y = _scalar_output(f(xv))
    if not isinstance(y, Variable):
        return np.zeros((d, d))
    adj = tape.backward(y)[xv]
    if not isinstance(adj, Dual):
        return np.zeros((d, d))
    return np.array(np.broadcast_to(adj.tangent, (d, d)), dtype=float)


class BatchDerivatives:
    """Values and input derivatives of a row-wise map on a batch of points.

    ``fn`` maps an (N, d) Variable to an (N, m) Variable and must treat rows
    independently; one reverse sweep per output component then yields every
    point's gradient.  ``second`` lists the input axes along which second
    derivatives will be requested.  Results live at the level of whatever
    ``fn`` closes over (typically Variables of a parameter tape), so they
    remain differentiable with respect to those parameters.
    """

    def __init__(self, fn: Callable, x: np.ndarray, second: Sequence[int] = ()):
        self.x = np.asarray(x, dtype=float)
        self.second_axes = tuple(sorted(set(second)))
        xval = seed(self.x, self.second_axes, DualTag()) if self.second_axes else self.x
        self.tape = Tape()
        self.input = self.tape.variable(xval)
        self.output = fn(self.input)
        self._adjoints: dict[int, object] = {}

    def _outer(self, v):
        return v.value if isinstance(v, Dual) else v

    def _out_value(self):
        v = self.output.value if isinstance(self.output, Variable) and self.output.tape is self.tape else self.output
        return self._outer(v)

    def value(self, c: int = 0):
        return ops.take(self._out_value(), c, -1)

    def values(self):
        return self._out_value()

    def _adjoint(self, c: int):
        if c not in self._adjoints:
            out = self.output
            if not (isinstance(out, Variable) and out.tape is self.tape):
                self._adjoints[c] = None
            else:
                s = np.zeros(ops.shape(out.value))
                s[..., c] = 1.0
                self._adjoints[c] = self.tape.backward(out, s)[self.input]
        return self._adjoints[c]

    def first(self, c: int, i: int):
        a = self._adjoint(c)
        if a is None:
            return np.zeros(self.x.shape[:-1])
        return ops.take(self._outer(a), i, -1)

    def gradient(self, c: int = 0):
        a = self._adjoint(c)
        return np.zeros(self.x.shape) if a is None else self._outer(a)

    def second(self, c: int, i: int, j: int):
        if j not in self.second_axes:
            i, j = j, i
        if j not in self.second_axes:
            raise ValueError(f"axis {j} was not seeded for second derivatives")
        a = self._adjoint(c)
        if not isinstance(a, Dual):
            return np.zeros(self.x.shape[:-1])
        k = self.second_axes.index(j)
        t = a.tangent
        if ops.shape(t)[: 1] != (len(self.second_axes),):
            t = t * np.ones((len(self.second_axes),) + self.x.shape)
        return ops.take(t[k], i, -1)
