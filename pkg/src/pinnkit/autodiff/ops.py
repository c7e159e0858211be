"""Generic primitive operations.

Every primitive here accepts plain floats, numpy arrays, and the lifted
types of this package (:class:`~pinnkit.autodiff.tape.Variable` and
:class:`~pinnkit.autodiff.dual.Dual`).  Lifted values may nest: a tape can
record Duals whose components are Variables of another tape.  Nesting is
resolved by *level*: every tape and every dual tag draws a level from one
global counter, and in a mixed operation the operand with the highest level
wraps the others, which it treats as constants.
"""

from __future__ import annotations

import itertools

import numpy as np

_levels = itertools.count(1)


def next_level() -> int:
    return next(_levels)


class Lifted:
    """Base class of values that carry derivative information."""

    __slots__ = ()
    __array_ufunc__ = None  # make numpy defer to our reflected operators
    _level: int

    # the unary primitives each lifted type must provide
    def exp(self): raise NotImplementedError
    def log(self): raise NotImplementedError
    def sin(self): raise NotImplementedError
    def cos(self): raise NotImplementedError
    def tanh(self): raise NotImplementedError


def level(x) -> int:
    return x._level if isinstance(x, Lifted) else 0


def outranks(a, b) -> bool:
    """True if ``a`` must wrap ``b`` in a mixed operation."""
    return isinstance(a, Lifted) and a._level > level(b)


def _top(*args):
    best = None
    for a in args:
        if isinstance(a, Lifted) and (best is None or a._level > best._level):
            best = a
    return best


def primal(x):
    """Strip every derivative layer and return the underlying number/array."""
    while isinstance(x, Lifted):
        x = x.value
    return x


def shape(x) -> tuple:
    return np.shape(primal(x))


# --- unary -----------------------------------------------------------------

def exp(x):
    return x.exp() if isinstance(x, Lifted) else np.exp(x)


def log(x):
    return x.log() if isinstance(x, Lifted) else np.log(x)


def sin(x):
    return x.sin() if isinstance(x, Lifted) else np.sin(x)


def cos(x):
    return x.cos() if isinstance(x, Lifted) else np.cos(x)


def tanh(x):
    return x.tanh() if isinstance(x, Lifted) else np.tanh(x)


def tanh_and_slope(x):
    """``(tanh x, 1 - tanh(x)**2)`` sharing work between the two."""
    if isinstance(x, Lifted):
        return x.tanh_and_slope()
    y = np.tanh(x)
    return y, 1.0 - y * y


def sqrt(x):
    return x ** 0.5 if isinstance(x, Lifted) else np.sqrt(x)


def square(x):
    return x * x


def sigmoid(x):
    return 1.0 / (1.0 + exp(-x))


def relu(x):
    return maximum(x, 0.0)


def swapaxes(x):
    """Swap the two trailing axes (matrix transpose for stacked matrices)."""
    if isinstance(x, Lifted):
        return x.swapaxes()
    x = np.asarray(x)
    return x if x.ndim < 2 else np.swapaxes(x, -1, -2)


def sum(x, axis=None, keepdims=False):  # noqa: A001 - mirrors numpy
    """Sum over ``axis`` of the primal shape.

    Axes are normalised to negative indices so that Dual tangents, which
    may carry extra leading axes, reduce over the matching dimensions.
    """
    nd = len(shape(x))
    axes = _negative_axes(axis, nd)
    if isinstance(x, Lifted):
        return x.sum(axes, keepdims)
    return np.sum(x, axis=axes, keepdims=keepdims)


def mean(x, axis=None):
    nd = len(shape(x))
    axes = _negative_axes(axis, nd)
    count = int(np.prod([shape(x)[a] for a in axes])) if axes else 1
    return sum(x, axes) * (1.0 / count)


def _negative_axes(axis, nd) -> tuple:
    if axis is None:
        return tuple(range(-nd, 0))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a - nd if a >= 0 else a for a in axis)


def reshape(x, newshape):
    if isinstance(x, Lifted):
        return x.reshape(tuple(newshape))
    return np.reshape(x, newshape)


def getitem(x, key):
    return x[key]


def index_add(g, key, target_shape):
    """Adjoint of ``x[key]``: scatter ``g`` into zeros of ``target_shape``."""
    if isinstance(g, Lifted):
        return g.index_add(key, target_shape)
    src_nd = np.broadcast_to(0.0, target_shape)[key].ndim
    out = np.zeros(np.shape(g)[: np.ndim(g) - src_nd] + tuple(target_shape))
    padded = pad_key(key, len(target_shape))
    if all(isinstance(k, (int, np.integer, slice)) or k is Ellipsis for k in padded):
        out[padded] += g  # basic indexing cannot repeat an element
    else:
        np.add.at(out, padded, g)
    return out


def pad_key(key, nd) -> tuple:
    """Right-pad a basic index with full slices and prefix an Ellipsis.

    The result indexes the trailing ``nd`` axes, leaving any leading
    tangent axes untouched.
    """
    if not isinstance(key, tuple):
        key = (key,)
    return (Ellipsis,) + key + (slice(None),) * (nd - len(key))


def take(x, i: int, axis: int = -1):
    """Select index ``i`` along ``axis`` (dimension dropped)."""
    nd = len(shape(x))
    ax = axis if axis < 0 else axis - nd
    key = (slice(None),) * (nd + ax) + (i,)
    return x[key]


def concatenate(parts, axis: int = -1):
    top = _top(*parts)
    if top is None:
        return np.concatenate([np.asarray(p, dtype=float) for p in parts], axis=axis)
    nd = len(shape(top))
    ax = axis if axis < 0 else axis - nd
    return type(top).concat(parts, ax, top)


def maximum(a, b):
    top = _top(a, b)
    if top is None:
        return np.maximum(a, b)
    return type(top).maximum(a, b, top)


def matmul(a, b):
    return a @ b


def where(mask, a, b):
    """Select elementwise with a constant boolean mask."""
    return a * mask + b * (1.0 - mask)


def zeros_like_primal(x):
    return np.zeros(shape(x))


def isfinite(x) -> bool:
    return bool(np.all(np.isfinite(primal(x))))
