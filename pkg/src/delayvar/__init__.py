"""Variational problems with a delay: measures, trajectories, criteria and a direct solver."""

from .criterion import (
    LagrangianAlong,
    QuadratureRule,
    derivative_load,
    directional_derivative,
    evaluate_J,
    free_gradient,
    gradient,
)
from .euler_lagrange import ELReport, advance_integral, el_data, fubini_identity_check, weak_stationarity
from .measures import (
    CovectorMeasure,
    covector_norm,
    cumulative,
    cumulative_limit,
    integrate_by_parts_check,
    pair,
    total_variation,
    vector_norm,
)
from .problem import (
    BUILTIN_PROBLEMS,
    DelayLagrangian,
    classical_quadratic,
    distributed_delay_lagrangian,
    distributed_delay_quadratic,
    make_problem,
    point_delay_lagrangian,
    point_delay_quadratic,
    validate_d2,
    validate_d3,
)
from .solver import SolveConfig, SolveResult, convergence_study, minimize
from .trajectory import (
    GridError,
    HistoryFunction,
    Perturbation,
    Trajectory,
    affine_initial_guess,
    basis_perturbations,
    commensurate_steps,
    derivative,
    norm_X,
    segment,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_PROBLEMS",
    "CovectorMeasure",
    "DelayLagrangian",
    "ELReport",
    "GridError",
    "HistoryFunction",
    "LagrangianAlong",
    "Perturbation",
    "QuadratureRule",
    "SolveConfig",
    "SolveResult",
    "Trajectory",
    "advance_integral",
    "affine_initial_guess",
    "basis_perturbations",
    "classical_quadratic",
    "commensurate_steps",
    "convergence_study",
    "covector_norm",
    "cumulative",
    "cumulative_limit",
    "derivative",
    "derivative_load",
    "directional_derivative",
    "distributed_delay_lagrangian",
    "distributed_delay_quadratic",
    "el_data",
    "evaluate_J",
    "free_gradient",
    "fubini_identity_check",
    "gradient",
    "integrate_by_parts_check",
    "make_problem",
    "minimize",
    "norm_X",
    "pair",
    "point_delay_lagrangian",
    "point_delay_quadratic",
    "segment",
    "total_variation",
    "validate_d2",
    "validate_d3",
    "vector_norm",
    "weak_stationarity",
]
