"""Reverse-mode automatic differentiation on an append-only tape.

A :class:`Tape` stores one node per primitive operation: the op tag, the
indices of its parents, its forward value, and one local partial per
parent.  A partial is either a number/array (an elementwise factor,
broadcast like numpy) or a callable mapping the node's adjoint to the
parent's adjoint contribution (used for matmul, reductions and indexing).

Values and partials may themselves be lifted objects: when a tape records
:class:`~pinnkit.autodiff.dual.Dual` values the reverse sweep carries a
tangent channel (forward-over-reverse), and when they are Variables of an
outer tape the sweep is itself differentiable by that outer tape.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from pinnkit.autodiff import ops
from pinnkit.autodiff.ops import Lifted, outranks


class TapeError(ValueError):
    """Structural misuse of a tape (foreign variables, bad partials)."""


class NonFiniteError(FloatingPointError):
    """A recorded value became NaN or infinite."""

    def __init__(self, op: str, index: int):
        super().__init__(f"non-finite value produced by op {op!r} at node {index}")
        self.op = op
        self.index = index


class Tape:
    """Append-only record of primitive operations.

    Args:
        check_finite: validate every recorded value eagerly.  When off,
            :meth:`backward` still validates the output and locates the
            first offending node on failure.
    """

    def __init__(self, check_finite: bool = False):
        self.level = ops.next_level()
        self.check_finite = check_finite
        self.ops: list[str] = []
        self.parents: list[tuple[int, ...]] = []
        self.values: list = []
        self.partials: list[tuple] = []
        self.sweeps = 0

    def __len__(self) -> int:
        return len(self.values)

    def variable(self, value) -> "Variable":
        """Record an input (leaf) node."""
        if not isinstance(value, Lifted):
            value = np.asarray(value, dtype=float) if np.ndim(value) else float(value)
        return self._push("input", (), value, ())

    def constant(self, value) -> "Variable":
        return self._push("const", (), value, ())

    def record(self, op: str, parents: Sequence[int], value, partials: Sequence) -> "Variable":
        """Append a node given explicit parent indices and local partials."""
        parents = tuple(int(p) for p in parents)
        partials = tuple(partials)
        if len(parents) != len(partials):
            raise TapeError(
                f"op {op!r}: {len(partials)} partials for {len(parents)} parents")
        for p in parents:
            if not 0 <= p < len(self.values):
                raise TapeError(f"op {op!r}: parent {p} not on tape")
        return self._push(op, parents, value, partials)

    def _push(self, op, parents, value, partials) -> "Variable":
        index = len(self.values)
        self.ops.append(op)
        self.parents.append(parents)
        self.values.append(value)
        self.partials.append(partials)
        if self.check_finite and not ops.isfinite(value):
            raise NonFiniteError(op, index)
        return Variable(self, index)

    def find_nonfinite(self) -> int | None:
        for i, v in enumerate(self.values):
            if not ops.isfinite(v):
                return i
        return None

    def backward(self, output: "Variable", seed=None) -> "Gradient":
        """One reverse sweep from ``output``.

        ``seed`` is the adjoint of the output node; it defaults to ones,
        which for a network evaluated row-wise on a batch yields every
        point's input gradient in the same sweep.
        """
        if not isinstance(output, Variable) or output.tape is not self:
            raise TapeError("output does not belong to this tape")
        if not ops.isfinite(output.value):
            bad = self.find_nonfinite()
            raise NonFiniteError(self.ops[bad], bad)
        adj: list = [None] * (output.index + 1)
        adj[output.index] = (np.ones(ops.shape(output.value)) if ops.shape(output.value)
                             else 1.0) if seed is None else seed
        values, parents, partials = self.values, self.parents, self.partials
        for i in range(output.index, -1, -1):
            g = adj[i]
            if g is None or not parents[i]:
                continue
            for p, d in zip(parents[i], partials[i]):
                if callable(d):
                    c = d(g)
                elif type(d) is float and d == 1.0:
                    c = g
                else:
                    c = g * d
                c = unbroadcast(c, ops.shape(values[p]))
                adj[p] = c if adj[p] is None else adj[p] + c
        self.sweeps += 1
        return Gradient(self, adj, output.index)


class Gradient:
    """Adjoints of one reverse sweep, indexed like the tape."""

    def __init__(self, tape: Tape, adjoints: list, output: int):
        self.tape = tape
        self.adjoints = adjoints
        self.output = output

    def __getitem__(self, var: "Variable"):
        if var.tape is not self.tape:
            raise TapeError("variable belongs to a different tape")
        a = self.adjoints[var.index] if var.index < len(self.adjoints) else None
        if a is None:
            return np.zeros(ops.shape(var.value)) if ops.shape(var.value) else 0.0
        return a


def unbroadcast(g, target: tuple):
    """Sum ``g`` down to ``target`` (the primal shape of a parent)."""
    gs = ops.shape(g)
    if gs == target:
        return g
    nd, m = len(gs), len(target)
    if nd > m:
        g = ops.sum(g, tuple(range(-nd, -m)) if m else None)
        gs = ops.shape(g)
    keep = tuple(a - m for a, (s, t) in enumerate(zip(gs, target)) if t == 1 and s != 1)
    if keep:
        g = ops.sum(g, keep, keepdims=True)
    return g


def _same_tape(a, b) -> bool:
    return isinstance(b, Variable) and b.tape is a.tape


class Variable(Lifted):
    """Handle to one node of a tape."""

    __slots__ = ("tape", "index")

    def __init__(self, tape: Tape, index: int):
        self.tape = tape
        self.index = index

    @property
    def _level(self) -> int:
        return self.tape.level

    @property
    def value(self):
        return self.tape.values[self.index]

    @property
    def shape(self) -> tuple:
        return ops.shape(self.value)

    def __repr__(self) -> str:
        return f"Variable(node={self.index}, op={self.tape.ops[self.index]!r}, value={self.value!r})"

    def _unary(self, op, value, partial):
        return self.tape._push(op, (self.index,), value, (partial,))

    def _binary(self, op, other, value, pa, pb):
        if _same_tape(self, other):
            return self.tape._push(op, (self.index, other.index), value, (pa, pb))
        return self.tape._push(op, (self.index,), value, (pa,))

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if outranks(other, self):
            return NotImplemented
        o = other.value if _same_tape(self, other) else other
        return self._binary("add", other, self.value + o, 1.0, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        if outranks(other, self):
            return NotImplemented
        o = other.value if _same_tape(self, other) else other
        return self._binary("sub", other, self.value - o, 1.0, -1.0)

    def __rsub__(self, other):
        if outranks(other, self):
            return NotImplemented
        return self._unary("sub", other - self.value, -1.0)

    def __neg__(self):
        return self._unary("neg", -self.value, -1.0)

    def __mul__(self, other):
        if outranks(other, self):
            return NotImplemented
        if _same_tape(self, other):
            a, b = self.value, other.value
            return self.tape._push("mul", (self.index, other.index), a * b, (b, a))
        return self._unary("mul", self.value * other, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if outranks(other, self):
            return NotImplemented
        if _same_tape(self, other):
            a, b = self.value, other.value
            q = a / b
            return self.tape._push("div", (self.index, other.index), q, (1.0 / b, -q / b))
        return self._unary("div", self.value / other, 1.0 / other)

    def __rtruediv__(self, other):
        if outranks(other, self):
            return NotImplemented
        q = other / self.value
        return self._unary("div", q, -q / self.value)

    def __pow__(self, other):
        if outranks(other, self):
            return NotImplemented
        if isinstance(other, Lifted):
            return ops.exp(other * ops.log(self))
        a = self.value
        if other == 2:
            return self._unary("pow", a * a, 2.0 * a)
        return self._unary("pow", a ** other, other * a ** (other - 1))

    def __rpow__(self, other):
        if outranks(other, self):
            return NotImplemented
        return ops.exp(self * np.log(other))

    def __matmul__(self, other):
        if outranks(other, self):
            return NotImplemented
        same = _same_tape(self, other)
        a, b = self.value, (other.value if same else other)
        va, vb = _matmul_vjps(a, b)
        if same:
            return self.tape._push("matmul", (self.index, other.index), a @ b, (va, vb))
        return self._unary("matmul", a @ b, va)

    def __rmatmul__(self, other):
        if outranks(other, self):
            return NotImplemented
        b = self.value
        _, vb = _matmul_vjps(other, b)
        return self._unary("matmul", other @ b, vb)

    # elementary functions ----------------------------------------------
    def exp(self):
        y = ops.exp(self.value)
        return self._unary("exp", y, y)

    def log(self):
        a = self.value
        return self._unary("log", ops.log(a), 1.0 / a)

    def sin(self):
        a = self.value
        return self._unary("sin", ops.sin(a), ops.cos(a))

    def cos(self):
        a = self.value
        return self._unary("cos", ops.cos(a), -ops.sin(a))

    def tanh(self):
        y, slope = ops.tanh_and_slope(self.value)
        return self._unary("tanh", y, slope)

    def tanh_and_slope(self):
        y = self.tanh()
        return y, 1.0 - y * y

    @classmethod
    def maximum(cls, a, b, top: "Variable"):
        # derivative of max at a tie goes entirely to the second argument,
        # so relu = max(x, 0) has derivative 0 at x = 0
        va = a.value if _same_tape(top, a) else a
        vb = b.value if _same_tape(top, b) else b
        mask = (ops.primal(va) > ops.primal(vb)).astype(float)
        value = ops.where(mask, va, vb)
        parents, partials = [], []
        for v, m in ((a, mask), (b, 1.0 - mask)):
            if _same_tape(top, v):
                parents.append(v.index)
                partials.append(m)
        return top.tape._push("max", tuple(parents), value, tuple(partials))

    # structural ----------------------------------------------------------
    def swapaxes(self):
        return self._unary("transpose", ops.swapaxes(self.value), ops.swapaxes)

    @property
    def T(self):
        return self.swapaxes()

    def sum(self, axes: tuple, keepdims: bool = False):
        in_shape = self.shape

        def vjp(g):
            if not keepdims:
                g = ops.reshape(g, _kept_shape(in_shape, axes))
            if isinstance(g, Lifted):
                return g * np.ones(in_shape)
            return np.broadcast_to(g, np.broadcast_shapes(np.shape(g), in_shape))

        return self._unary("sum", ops.sum(self.value, axes, keepdims), vjp)

    def reshape(self, newshape):
        in_shape = self.shape
        return self._unary("reshape", ops.reshape(self.value, newshape),
                           lambda g: ops.reshape(g, in_shape))

    def __getitem__(self, key):
        in_shape = self.shape
        return self._unary("index", self.value[key],
                           lambda g: ops.index_add(g, key, in_shape))

    def index_add(self, key, target_shape):
        nd = len(target_shape)
        out = ops.index_add(self.value, key, target_shape)
        return self._unary("index_add", out, lambda g: g[ops.pad_key(key, nd)])

    @classmethod
    def concat(cls, parts, axis: int, top: "Variable"):
        values = [p.value if _same_tape(top, p) else p for p in parts]
        value = ops.concatenate(values, axis)
        nd = len(ops.shape(value))
        parents, partials, start = [], [], 0
        for p, v in zip(parts, values):
            width = ops.shape(v)[axis]
            if _same_tape(top, p):
                key = (slice(None),) * (nd + axis) + (slice(start, start + width),)
                parents.append(p.index)
                partials.append(lambda g, key=key: g[key])
            start += width
        return top.tape._push("concat", tuple(parents), value, tuple(partials))


def _kept_shape(in_shape: tuple, axes: tuple) -> tuple:
    nd = len(in_shape)
    red = {a % nd for a in axes}
    return tuple(1 if i in red else s for i, s in enumerate(in_shape))


def _matmul_vjps(a, b) -> tuple[Callable, Callable]:
    sa, sb = ops.shape(a), ops.shape(b)
    if len(sa) == 1 and len(sb) == 1:
        return (lambda g: g * b), (lambda g: g * a)
    if len(sa) == 1:
        m = sa[0]
        return (lambda g: g @ ops.swapaxes(b),
                lambda g: ops.reshape(a, (m, 1)) @ ops.reshape(g, (1, ops.shape(g)[-1])))
    if len(sb) == 1:
        m = sb[0]
        return (lambda g: ops.reshape(g, (ops.shape(g)[-1], 1)) @ ops.reshape(b, (1, m)),
                lambda g: ops.swapaxes(a) @ g)
    return (lambda g: g @ ops.swapaxes(b)), (lambda g: ops.swapaxes(a) @ g)


def record(tape: Tape, op: str, parents: Sequence[int], value, partials: Sequence) -> Variable:
    """Append a primitive node to ``tape``; see :meth:`Tape.record`."""
    return tape.record(op, parents, value, partials)


def backward(tape: Tape, output: Variable, seed=None) -> Gradient:
    return tape.backward(output, seed)
