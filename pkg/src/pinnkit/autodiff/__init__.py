"""Tape-based reverse-mode AD with a forward-mode channel for second order."""

from pinnkit.autodiff import ops
from pinnkit.autodiff.derivatives import (
    BatchDerivatives,
    UnsupportedOrderError,
    derivative,
    gradient,
    hessian,
)
from pinnkit.autodiff.dual import Dual, DualTag, seed
from pinnkit.autodiff.tape import (
    Gradient,
    NonFiniteError,
    Tape,
    TapeError,
    Variable,
    backward,
    record,
)

__all__ = [
    "BatchDerivatives", "Dual", "DualTag", "Gradient", "NonFiniteError", "Tape",
    "TapeError", "UnsupportedOrderError", "Variable", "backward", "derivative",
    "gradient", "hessian", "ops", "record", "seed",
]
