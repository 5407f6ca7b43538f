"""Solvers for oscillators with a variable-order fractional damping term.

The fractional term is the Caputo-type history derivative whose order may
change with time or with the state itself. vo_core holds the discrete
derivative machinery, explicit_solver the direct stepping for time-only
orders, implicit_solver the per-step root solve for state-dependent orders
and nonlinear restoring forces, stability the spectral-radius check, and
reference the benchmark scenarios with their closed-form references.
"""

from .errors import (
    ConvergenceError,
    DegenerateProblemError,
    OrderDomainError,
    StepFailureError,
)
from .explicit_solver import solve as solve_explicit
from .implicit_solver import RootSolveConfig, solve as solve_implicit
from .model import (
    AlphaKind,
    AlphaSpec,
    OscillatorProblem,
    SolutionTrace,
    StepState,
    discrete_residuals,
    initial_acceleration,
)
from .reference import (
    SCENARIO_NAMES,
    Scenario,
    list_scenarios,
    scenario,
)
from .special_functions import gamma, lower_incomplete_gamma
from .stability import (
    StabilityReport,
    amplification_matrix,
    spectral_radius,
    stability_report,
    stability_report_along_trace,
)
from .vo_core import (
    CoefficientRow,
    Grid,
    VelocityHistory,
    caputo_quadrature_oracle,
    coefficient,
    coefficient_row,
    vo_derivative_at,
    vo_derivative_series,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaKind",
    "AlphaSpec",
    "CoefficientRow",
    "ConvergenceError",
    "DegenerateProblemError",
    "Grid",
    "OrderDomainError",
    "OscillatorProblem",
    "RootSolveConfig",
    "SCENARIO_NAMES",
    "Scenario",
    "SolutionTrace",
    "StabilityReport",
    "StepFailureError",
    "StepState",
    "VelocityHistory",
    "amplification_matrix",
    "caputo_quadrature_oracle",
    "coefficient",
    "coefficient_row",
    "discrete_residuals",
    "gamma",
    "initial_acceleration",
    "list_scenarios",
    "lower_incomplete_gamma",
    "scenario",
    "solve_explicit",
    "solve_implicit",
    "spectral_radius",
    "stability_report",
    "stability_report_along_trace",
    "vo_derivative_at",
    "vo_derivative_series",
]
