"""Problem definition: residuals, conditions, point sets and losses."""

from pinnkit.problem.builtins import (
    DR_TRUE,
    LORENZ_TRUE,
    LORENZ_X0,
    burgers2d_exact,
    burgers2d_exact_lifted,
    burgers2d_residual,
    burgers_residual,
    diffusion_reaction_residual,
    lorenz_residual,
    lorenz_rhs,
    poisson_residual,
)
from pinnkit.problem.core import (
    Condition,
    DirichletBC,
    InitialCondition,
    LossBreakdown,
    LossWeights,
    NeumannBC,
    Observation,
    OperatorBC,
    PeriodicBC,
    PointSets,
    Problem,
    Residual,
    ResidualError,
    RobinBC,
    bc_loss,
    observation_loss,
    pde_loss,
    total_loss,
)
from pinnkit.problem.fields import Fields

__all__ = [
    "DR_TRUE", "LORENZ_TRUE", "LORENZ_X0", "burgers2d_exact", "burgers2d_exact_lifted",
    "burgers2d_residual", "burgers_residual", "diffusion_reaction_residual", "lorenz_residual",
    "lorenz_rhs", "poisson_residual",
    "Condition", "DirichletBC", "InitialCondition", "LossBreakdown", "LossWeights", "NeumannBC",
    "Observation", "OperatorBC", "PeriodicBC", "PointSets", "Problem", "Residual",
    "ResidualError", "RobinBC", "bc_loss", "observation_loss", "pde_loss", "total_loss",
    "Fields",
]
