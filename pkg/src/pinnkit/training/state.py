"""Training state and its checkpoint file.

A checkpoint is an ``.npz`` archive holding:

``spec``        JSON of the network spec (layer sizes, activation, initializer)
``params``      flattened parameters (weights, then biases, then externals)
``n_externals`` number of trailing external scalars in ``params``
``iteration``, ``stage``, ``stage_iter``  loop counters
``adam_m``, ``adam_v``, ``adam_t``        Adam moments (empty if none)
``lbfgs_s``, ``lbfgs_y``                  L-BFGS curvature pairs, one per row
``rng``         JSON of the numpy bit-generator state
``history``     JSON list of loss-history rows
``T_f``         current residual points (grows under refinement)
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from pinnkit.network import NetworkSpec, Parameters
from pinnkit.training.optimizers import AdamState, LbfgsMemory


class CheckpointError(OSError):
    pass


@dataclass
class TrainState:
    params: Parameters
    iteration: int = 0
    stage: int = 0
    stage_iter: int = 0
    adam: AdamState | None = None
    lbfgs: LbfgsMemory | None = None
    history: list = field(default_factory=list)
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    status: str = "running"
    T_f: np.ndarray | None = None
    lbfgs_status: str = ""

    def final_loss(self) -> float:
        if not self.history:
            return float("inf")
        return float(self.history[-1]["loss_total"])


def save_checkpoint(path, spec: NetworkSpec, state: TrainState) -> None:
    flat = state.params.flatten()
    adam = state.adam
    mem = state.lbfgs
    n = flat.size
    np.savez(
        path,
        spec=np.array(json.dumps({"layer_sizes": list(spec.layer_sizes),
                                  "activation": spec.activation,
                                  "initializer": spec.initializer})),
        params=flat,
        n_externals=np.array(len(state.params.externals)),
        iteration=np.array(state.iteration),
        stage=np.array(state.stage),
        stage_iter=np.array(state.stage_iter),
        adam_m=adam.m if adam else np.empty(0),
        adam_v=adam.v if adam else np.empty(0),
        adam_t=np.array(adam.t if adam else -1),
        lbfgs_s=np.array(mem.s).reshape(-1, n) if mem and mem.s else np.empty((0, n)),
        lbfgs_y=np.array(mem.y).reshape(-1, n) if mem and mem.y else np.empty((0, n)),
        rng=np.array(json.dumps(state.rng.bit_generator.state)),
        # rows at or after the current iteration are recomputed on resume
        history=np.array(json.dumps([r for r in state.history if r["iteration"] < state.iteration])),
        T_f=state.T_f if state.T_f is not None else np.empty((0, spec.d_in)),
    )


def load_checkpoint(path) -> tuple[NetworkSpec, TrainState]:
    try:
        with np.load(path, allow_pickle=False) as z:
            data = {k: z[k] for k in z.files}
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    s = json.loads(str(data["spec"]))
    spec = NetworkSpec(tuple(s["layer_sizes"]), s["activation"], s["initializer"])
    params = Parameters.unflatten(spec, data["params"], int(data["n_externals"]))
    adam = None
    if int(data["adam_t"]) >= 0:
        adam = AdamState(data["adam_m"].copy(), data["adam_v"].copy(), int(data["adam_t"]))
    mem = None
    if len(data["lbfgs_s"]):
        mem = LbfgsMemory([r.copy() for r in data["lbfgs_s"]], [r.copy() for r in data["lbfgs_y"]])
    rng = np.random.default_rng()
    rng.bit_generator.state = json.loads(str(data["rng"]))
    T_f = data["T_f"] if len(data["T_f"]) else None
    state = TrainState(params, int(data["iteration"]), int(data["stage"]), int(data["stage_iter"]),
                       adam, mem, json.loads(str(data["history"])), rng, "running", T_f)
    return spec, state
