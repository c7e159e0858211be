"""Training callbacks and the Fourier-spectrum monitor."""

from __future__ import annotations

import csv
import warnings
from typing import Callable, Sequence

import numpy as np

from pinnkit.network import Network, Parameters
from pinnkit.problem.fields import Fields
from pinnkit.training.state import save_checkpoint


class Callback:
    def __init__(self, period: int = 1):
        if period < 1:
            raise ValueError("callback period must be >= 1")
        self.period = int(period)

    def __call__(self, model, state) -> None:
        raise NotImplementedError


class ModelCheckpoint(Callback):
    """Saves a checkpoint every ``period`` iterations; write errors only warn."""

    def __init__(self, path, period: int = 1000):
        super().__init__(period)
        self.path = path
        self.saved: list[int] = []

    def __call__(self, model, state):
        try:
            save_checkpoint(self.path, model.spec, state)
            self.saved.append(state.iteration)
        except OSError as exc:
            warnings.warn(f"checkpoint not written: {exc}", stacklevel=2)


class _Recording(Callback):
    def __init__(self, points, period: int, path=None):
        super().__init__(period)
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.path = path
        self.iterations: list[int] = []
        self.frames: list[np.ndarray] = []

    def _value(self, model, params) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, model, state):
        v = np.asarray(self._value(model, state.params), dtype=float).ravel()
        self.iterations.append(state.iteration)
        self.frames.append(v)
        if self.path is not None:
            try:
                self._append(state.iteration, v)
            except OSError as exc:
                warnings.warn(f"{type(self).__name__} output not written: {exc}", stacklevel=2)

    def _header(self) -> list:
        return ["iteration"] + [f"p{k}" for k in range(len(self.points))]

    def _append(self, iteration, v):
        new = len(self.iterations) == 1
        with open(self.path, "w" if new else "a", newline="") as fh:
            w = csv.writer(fh)
            if new:
                w.writerow(self._header())
            w.writerow([iteration] + [repr(float(a)) for a in v])


class OperatorPredictor(_Recording):
    """Records ``op(x, F, lam)`` at fixed points, called like a residual closure."""

    def __init__(self, op: Callable, points, period: int = 1, second: Sequence[int] = (), path=None):
        super().__init__(points, period, path)
        self.op, self.second = op, tuple(second)

    def _value(self, model, params):
        F = Fields(model.net, params, self.points, self.second)
        return self.op(self.points, F, params.externals)


class FirstDerivative(_Recording):
    """Records ``du_c/dx_axis`` at fixed points."""

    def __init__(self, points, axis: int, component: int = 0, period: int = 1, path=None):
        super().__init__(points, period, path)
        self.axis, self.component = axis, component

    def _value(self, model, params):
        return Fields(model.net, params, self.points).d(self.component, self.axis)


class MovieDumper(_Recording):
    """Dumps one CSV frame of the predicted component per period."""

    def __init__(self, points, period: int = 100, component: int = 0, path=None):
        super().__init__(points, period, path)
        self.component = component

    def _value(self, model, params):
        return model.net.predict(params, self.points)[:, self.component]


def fourier_amplitudes(values: np.ndarray, probes: np.ndarray, freqs: Sequence[float]) -> np.ndarray:
    """Amplitude of each angular frequency in samples on a periodic grid.

    ``probes`` must be equispaced over one period of length ``2 pi`` with
    the right endpoint excluded; a pure ``a sin(w x + c)`` gives ``|a|``.
    """
    values = np.asarray(values, dtype=float).ravel()
    x = np.asarray(probes, dtype=float).ravel()
    n = len(x)
    return np.array([2.0 / n * abs(np.sum(values * np.exp(-1j * w * x))) for w in freqs])


def spectrum_probes(n: int = 512) -> np.ndarray:
    return np.linspace(-np.pi, np.pi, n, endpoint=False)


def spectrum_monitor(net: Network, params: Parameters, ks: Sequence[int] = (1, 2, 3, 4, 5),
                     probes: np.ndarray | None = None, reference: Sequence[float] | None = None):
    """Normalised amplitudes of the network at frequencies ``2k``.

    The raw amplitude at ``2k`` is divided by ``reference[k]``, by default
    ``1 / (2k)`` (the amplitude of the target sum ``sin(2kx) / (2k)``), so a
    perfectly learnt mode reads 1.
    """
    probes = spectrum_probes() if probes is None else np.asarray(probes, dtype=float).ravel()
    values = net.predict(params, probes[:, None])[:, 0]
    freqs = [2 * k for k in ks]
    ref = np.array(reference if reference is not None else [1.0 / (2 * k) for k in ks])
    return fourier_amplitudes(values, probes, freqs) / ref


class SpectrumMonitor(Callback):
    """Spectrum of the prediction over training; CSV columns iteration, amp_k1..."""

    def __init__(self, ks: Sequence[int] = (1, 2, 3, 4, 5), period: int = 100, probes=None,
                 reference=None, path=None):
        super().__init__(period)
        self.ks = tuple(ks)
        self.probes = spectrum_probes() if probes is None else np.asarray(probes, dtype=float)
        self.reference = reference
        self.path = path
        self.iterations: list[int] = []
        self.amplitudes: list[np.ndarray] = []

    def __call__(self, model, state):
        a = spectrum_monitor(model.net, state.params, self.ks, self.probes, self.reference)
        self.iterations.append(state.iteration)
        self.amplitudes.append(a)
        if self.path is not None:
            try:
                write_spectrum_csv(self.path, self.ks, self.iterations, self.amplitudes)
            except OSError as exc:
                warnings.warn(f"spectrum output not written: {exc}", stacklevel=2)

    def first_crossing(self, threshold: float = 0.9) -> dict:
        """First recorded iteration at which each mode's amplitude exceeds ``threshold``."""
        out = {}
        amps = np.array(self.amplitudes).reshape(len(self.amplitudes), len(self.ks))
        for j, k in enumerate(self.ks):
            hit = np.flatnonzero(amps[:, j] > threshold)
            out[k] = self.iterations[hit[0]] if hit.size else None
        return out


def write_spectrum_csv(path, ks, iterations, amplitudes) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration"] + [f"amp_k{k}" for k in ks])
        for it, a in zip(iterations, amplitudes):
            w.writerow([it] + [repr(float(v)) for v in a])
