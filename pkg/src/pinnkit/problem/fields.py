"""Network values and input derivatives at a batch of points."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from pinnkit.autodiff import BatchDerivatives, ops
from pinnkit.network import Network, Parameters


class Fields:
    """Accessor handed to residual closures.

    ``u(c)`` is output component ``c`` at every point, ``d(c, i)`` its first
    derivative along input axis ``i`` and ``dd(c, i, j)`` the second
    derivative (``j`` or ``i`` must be listed in ``second``).  All results
    are lifted on the parameter tape when ``params`` are lifted.

    Args:
        net: network with its output transform.
        params: parameters, plain or lifted.
        x: points of shape (N, d).
        second: input axes for which second derivatives are needed.
        derivatives: if False, only values are computed (no input tape).
    """

    def __init__(self, net: Network, params: Parameters, x, second: Sequence[int] = (),
                 derivatives: bool = True):
        self.net = net
        self.params = params
        self.x = np.atleast_2d(np.asarray(x, dtype=float))
        self.lam = params.externals
        if derivatives or second:
            self._bd = BatchDerivatives(lambda xv: net(params, xv), self.x, second)
            self._values = None
        else:
            self._bd = None
            self._values = net(params, self.x)

    def __len__(self) -> int:
        return len(self.x)

    def values(self):
        return self._values if self._bd is None else self._bd.values()

    def u(self, c: int = 0):
        return ops.take(self.values(), c, -1)

    def _need_bd(self):
        if self._bd is None:
            raise ValueError("derivatives were not requested for these fields")
        return self._bd

    def d(self, c: int, i: int):
        return self._need_bd().first(c, i)

    def dd(self, c: int, i: int, j: int | None = None):
        return self._need_bd().second(c, i, i if j is None else j)

    def grad(self, c: int = 0):
        return self._need_bd().gradient(c)

    def laplacian(self, c: int, axes: Sequence[int]):
        out = 0.0
        for a in axes:
            out = out + self.dd(c, a)
        return out

    def at(self, points):
        """Network output at other points, on the same parameter tape."""
        return self.net(self.params, np.atleast_2d(np.asarray(points, dtype=float)))
