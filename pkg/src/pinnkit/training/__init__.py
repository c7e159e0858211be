"""Optimizers, the training loop and callbacks."""

from pinnkit.training.callbacks import (
    Callback,
    FirstDerivative,
    ModelCheckpoint,
    MovieDumper,
    OperatorPredictor,
    SpectrumMonitor,
    fourier_amplitudes,
    spectrum_monitor,
    spectrum_probes,
)
from pinnkit.training.loop import Model, select_best, train, write_history_csv
from pinnkit.training.optimizers import (
    AdamConfig,
    AdamState,
    LbfgsConfig,
    LbfgsMemory,
    LbfgsResult,
    OptimizerError,
    adam_step,
    lbfgs_run,
    strong_wolfe,
)
from pinnkit.training.state import CheckpointError, TrainState, load_checkpoint, save_checkpoint

__all__ = [
    "Callback", "FirstDerivative", "ModelCheckpoint", "MovieDumper", "OperatorPredictor",
    "SpectrumMonitor", "fourier_amplitudes", "spectrum_monitor", "spectrum_probes",
    "Model", "select_best", "train", "write_history_csv",
    "AdamConfig", "AdamState", "LbfgsConfig", "LbfgsMemory", "LbfgsResult", "OptimizerError",
    "adam_step", "lbfgs_run", "strong_wolfe",
    "CheckpointError", "TrainState", "load_checkpoint", "save_checkpoint",
]
