"""Moment-system solvers: IPM, One-Shot IPM, adaptive variants and diagnostics."""

from .adaptivity import adapt_levels, moments_to_quantities, smoothness_indicator
from .config import Level, RefinementLadder, RetardationSchedule, SolverConfig
from .diagnostics import OneShotJacobianReport, oneshot_jacobian_spectral_radius, oneshot_map
from .discretization import FVGrid, StencilPlan, build_grid
from .engine import MomentSolver, RunResult, run_adaptive, run_ipm, run_steady
from .problem import Problem, project_initial

__all__ = [
    "adapt_levels",
    "moments_to_quantities",
    "smoothness_indicator",
    "Level",
    "RefinementLadder",
    "RetardationSchedule",
    "SolverConfig",
    "OneShotJacobianReport",
    "oneshot_jacobian_spectral_radius",
    "oneshot_map",
    "FVGrid",
    "StencilPlan",
    "build_grid",
    "MomentSolver",
    "RunResult",
    "run_adaptive",
    "run_ipm",
    "run_steady",
    "Problem",
    "project_initial",
]
