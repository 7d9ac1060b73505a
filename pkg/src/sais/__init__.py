"""String-averaging incremental subgradient solver with subgradient
projection feasibility operators and a TV-constrained tomography
application."""

from .experiment import (ExperimentConfig, ExperimentResult, RunRecord,
                         best_value, first_below, profile_line, rse,
                         run_experiment)
from .feasibility import (ConstraintFunction, FeasibilityOperator,
                          apply_averaged, apply_sequential,
                          project_nonnegative, subgradient_projection_step)
from .phantom import shepp_logan
from .radon import SparseRowMatrix, build_radon
from .solver import (ConvexComponent, Problem, SolverState, StepSizeSchedule,
                     StringPartition, cosine_factor, initial_step_size,
                     iterate, make_random_partition, next_step_size,
                     objective_value, optimality_operator, run, string_pass)
from .tomo import (Sinogram, TomoSetup, initial_image, l1_components,
                   make_tomo_problem, residual_l1, simulate_sinogram, tv,
                   tv_subgradient)

__version__ = "0.1.0"

__all__ = [
    "ConstraintFunction", "ConvexComponent", "ExperimentConfig",
    "ExperimentResult", "FeasibilityOperator", "Problem", "RunRecord",
    "Sinogram", "SolverState", "SparseRowMatrix", "StepSizeSchedule",
    "StringPartition", "TomoSetup", "apply_averaged", "apply_sequential",
    "best_value", "build_radon", "cosine_factor", "first_below",
    "initial_image", "initial_step_size", "iterate", "l1_components",
    "make_random_partition", "make_tomo_problem", "next_step_size",
    "objective_value", "optimality_operator", "profile_line",
    "project_nonnegative", "residual_l1", "rse", "run", "run_experiment",
    "shepp_logan", "simulate_sinogram", "string_pass",
    "subgradient_projection_step", "tv", "tv_subgradient",
]
