"""Finite-element solver for the steady scalar convection-diffusion equation."""

from .analytic import SeriesParams, exact_1d, exact_2d, oracle_residual_check
from .assembly import Solution, assemble, apply_dirichlet, build_dof_map, solve_problem
from .mesh import Marker, Mesh, build_interval_mesh, build_unit_square_mesh, mesh_stats
from .metrics import ErrorReport, convergence_rates, error_norms, oscillation_indicator
from .problem import ProblemSpec, paper_1d, paper_2d
from .stabilization import Mode, StabilizationConfig

__version__ = "0.1.0"

__all__ = [
    "ErrorReport", "Marker", "Mesh", "Mode", "ProblemSpec", "SeriesParams", "Solution",
    "StabilizationConfig", "apply_dirichlet", "assemble", "build_dof_map", "build_interval_mesh",
    "build_unit_square_mesh", "convergence_rates", "error_norms", "exact_1d", "exact_2d",
    "mesh_stats", "oracle_residual_check", "oscillation_indicator", "paper_1d", "paper_2d",
    "solve_problem",
]
