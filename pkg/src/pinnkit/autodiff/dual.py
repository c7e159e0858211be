"""Forward-mode dual numbers.

A :class:`Dual` pairs a value with a tangent.  The tangent may carry extra
leading axes, one per seeded direction, so a single pass propagates several
directional derivatives at once; all primitive code addresses trailing axes
only, which keeps those leading axes intact.
"""

from __future__ import annotations

import numpy as np

from pinnkit.autodiff import ops
from pinnkit.autodiff.ops import Lifted, outranks


class DualTag:
    """Identity of one forward-mode perturbation."""

    __slots__ = ("level",)

    def __init__(self):
        self.level = ops.next_level()


class Dual(Lifted):
    __slots__ = ("value", "tangent", "tag")

    def __init__(self, value, tangent, tag: DualTag):
        self.value = value
        self.tangent = tangent
        self.tag = tag

    @property
    def _level(self) -> int:
        return self.tag.level

    @property
    def shape(self) -> tuple:
        return ops.shape(self.value)

    def __repr__(self) -> str:
        return f"Dual({self.value!r}, {self.tangent!r})"

    def _mine(self, other) -> bool:
        return isinstance(other, Dual) and other.tag is self.tag

    def _new(self, value, tangent) -> "Dual":
        return Dual(value, tangent, self.tag)

    def __add__(self, other):
        if outranks(other, self):
            return NotImplemented
        if self._mine(other):
            return self._new(self.value + other.value, self.tangent + other.tangent)
        return self._new(self.value + other, self.tangent)

    __radd__ = __add__

    def __sub__(self, other):
        if outranks(other, self):
            return NotImplemented
        if self._mine(other):
            return self._new(self.value - other.value, self.tangent - other.tangent)
        return self._new(self.value - other, self.tangent)

    def __rsub__(self, other):
        if outranks(other, self):
            return NotImplemented
        return self._new(other - self.value, -self.tangent)

    def __neg__(self):
        return self._new(-self.value, -self.tangent)

    def __mul__(self, other):
        if outranks(other, self):
            return NotImplemented
        if self._mine(other):
            return self._new(self.value * other.value,
                             self.tangent * other.value + self.value * other.tangent)
        return self._new(self.value * other, self.tangent * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if outranks(other, self):
            return NotImplemented
        if self._mine(other):
            q = self.value / other.value
            return self._new(q, (self.tangent - q * other.tangent) / other.value)
        return self._new(self.value / other, self.tangent / other)

    def __rtruediv__(self, other):
        if outranks(other, self):
            return NotImplemented
        q = other / self.value
        return self._new(q, -q / self.value * self.tangent)

    def __pow__(self, other):
        if outranks(other, self):
            return NotImplemented
        if isinstance(other, Lifted):
            return ops.exp(other * ops.log(self))
        a = self.value
        if other == 2:
            return self._new(a * a, 2.0 * a * self.tangent)
        return self._new(a ** other, other * a ** (other - 1) * self.tangent)

    def __rpow__(self, other):
        if outranks(other, self):
            return NotImplemented
        return ops.exp(self * np.log(other))

    def __matmul__(self, other):
        if outranks(other, self):
            return NotImplemented
        if self._mine(other):
            return self._new(self.value @ other.value,
                             self.tangent @ other.value + self.value @ other.tangent)
        return self._new(self.value @ other, self.tangent @ other)

    def __rmatmul__(self, other):
        if outranks(other, self):
            return NotImplemented
        return self._new(other @ self.value, other @ self.tangent)

    def exp(self):
        y = ops.exp(self.value)
        return self._new(y, y * self.tangent)

    def log(self):
        return self._new(ops.log(self.value), self.tangent / self.value)

    def sin(self):
        return self._new(ops.sin(self.value), ops.cos(self.value) * self.tangent)

    def cos(self):
        return self._new(ops.cos(self.value), -ops.sin(self.value) * self.tangent)

    def tanh(self):
        y, s = ops.tanh_and_slope(self.value)
        return self._new(y, s * self.tangent)

    def tanh_and_slope(self):
        y, s = ops.tanh_and_slope(self.value)
        yt = s * self.tangent
        return self._new(y, yt), self._new(s, (y * -2.0) * yt)

    @classmethod
    def maximum(cls, a, b, top: "Dual"):
        va = a.value if top._mine(a) else a
        vb = b.value if top._mine(b) else b
        mask = (ops.primal(va) > ops.primal(vb)).astype(float)
        ta = a.tangent if top._mine(a) else 0.0
        tb = b.tangent if top._mine(b) else 0.0
        return top._new(ops.where(mask, va, vb), ta * mask + tb * (1.0 - mask))

    def swapaxes(self):
        return self._new(ops.swapaxes(self.value), ops.swapaxes(self.tangent))

    @property
    def T(self):
        return self.swapaxes()

    def sum(self, axes: tuple, keepdims: bool = False):
        return self._new(ops.sum(self.value, axes, keepdims),
                         _sum_trailing(self.tangent, axes, keepdims, len(self.shape)))

    def reshape(self, newshape):
        extra = ops.shape(self.tangent)[: len(ops.shape(self.tangent)) - len(self.shape)]
        return self._new(ops.reshape(self.value, newshape),
                         ops.reshape(self.tangent, extra + tuple(newshape)))

    def __getitem__(self, key):
        return self._new(self.value[key], self.tangent[ops.pad_key(key, len(self.shape))])

    def index_add(self, key, target_shape):
        return self._new(ops.index_add(self.value, key, target_shape),
                         ops.index_add(self.tangent, key, target_shape))

    @classmethod
    def concat(cls, parts, axis: int, top: "Dual"):
        values = [p.value if top._mine(p) else p for p in parts]
        lead = None
        for p in parts:
            if top._mine(p):
                t_shape = ops.shape(p.tangent)
                lead = t_shape[: len(t_shape) - len(p.shape)]
                break
        tangents = []
        for p, v in zip(parts, values):
            if top._mine(p):
                t = p.tangent
                if ops.shape(t) != lead + p.shape:
                    t = t * np.ones(lead + p.shape)
            else:
                t = np.zeros(lead + ops.shape(v))
            tangents.append(t)
        return top._new(ops.concatenate(values, axis), ops.concatenate(tangents, axis))


def _sum_trailing(t, axes: tuple, keepdims: bool, nd: int):
    """Sum a tangent over the primal axes ``axes`` (negative indices).

    A tangent may have fewer dimensions than the primal when it was
    broadcast; the primal shape is used to express reductions in negative
    indices, which stay valid for any number of extra leading axes.
    """
    tnd = len(ops.shape(t))
    if tnd < nd:
        t = ops.reshape(t, (1,) * (nd - tnd) + ops.shape(t))
    return ops.sum(t, axes, keepdims)


def seed(x, directions, tag: DualTag | None = None) -> Dual:
    """Lift a batch of points ``x`` (..., d) into a Dual.

    ``directions`` lists input axes; direction ``k`` perturbs axis
    ``directions[k]`` of every point, giving a tangent of shape
    ``(len(directions),) + x.shape``.
    """
    x = np.asarray(x, dtype=float)
    tangent = np.zeros((len(directions),) + x.shape)
    for k, axis in enumerate(directions):
        tangent[k, ..., axis] = 1.0
    return Dual(x, tangent, tag or DualTag())
