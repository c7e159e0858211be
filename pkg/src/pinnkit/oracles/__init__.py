"""Independent reference solvers and observation generators."""

from pinnkit.oracles.fd import (
    Grid1dSolution,
    LShapeSolution,
    ResolutionError,
    fd_burgers_1d,
    fd_diffusion_reaction,
    fd_poisson_lshape,
)
from pinnkit.oracles.observations import (
    diffusion_reaction_observations,
    lorenz_observations,
    read_observations_csv,
    write_observations_csv,
)
from pinnkit.oracles.rk45 import OdeSystem, StiffnessError, Trajectory, rk45

__all__ = [
    "Grid1dSolution", "LShapeSolution", "ResolutionError", "fd_burgers_1d",
    "fd_diffusion_reaction", "fd_poisson_lshape", "diffusion_reaction_observations",
    "lorenz_observations", "read_observations_csv", "write_observations_csv",
    "OdeSystem", "StiffnessError", "Trajectory", "rk45",
]
