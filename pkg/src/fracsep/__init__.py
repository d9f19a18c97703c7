"""Boundary-driven exclusion process with Levy jumps, its fractional
reaction-diffusion limits, and desk-scale verification experiments."""

from .bumps import Bump, TimeModulatedBump, bump_battery, time_space_battery
from .fracop import (
    MODE_PINNED,
    MODE_REGIONAL,
    GridProfile,
    NormsResult,
    NumericalError,
    OperatorMatrix,
    build_operator,
    norms,
    quadrature_regional,
)
from .kernel import (
    ContinuumPotentials,
    JumpKernel,
    ModelParams,
    build_kernel,
    continuum_potentials,
    normalizing_constant,
    reservoir_rates,
    transition_prob,
)
from .lattice import (
    Configuration,
    MartingaleSeries,
    SimResult,
    empirical_pairing,
    sample_initial,
    simulate,
    track_martingale,
)
from .pde import (
    EvolutionResult,
    PdeSpec,
    reaction_solution,
    reaction_trajectory,
    solve_evolution,
    solve_stationary,
    weak_residual,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # kernel
    "ModelParams",
    "JumpKernel",
    "build_kernel",
    "normalizing_constant",
    "transition_prob",
    "reservoir_rates",
    "continuum_potentials",
    "ContinuumPotentials",
    # lattice
    "Configuration",
    "SimResult",
    "MartingaleSeries",
    "sample_initial",
    "simulate",
    "empirical_pairing",
    "track_martingale",
    # fracop
    "GridProfile",
    "OperatorMatrix",
    "NormsResult",
    "NumericalError",
    "MODE_REGIONAL",
    "MODE_PINNED",
    "build_operator",
    "norms",
    "quadrature_regional",
    # pde
    "PdeSpec",
    "EvolutionResult",
    "solve_evolution",
    "reaction_solution",
    "reaction_trajectory",
    "solve_stationary",
    "weak_residual",
    # test functions
    "Bump",
    "TimeModulatedBump",
    "bump_battery",
    "time_space_battery",
]
