"""Physics-informed neural network solvers for forward and inverse problems."""

__version__ = "0.1.0"
