"""Data-driven piecewise-affine Lyapunov functions via second-order cone programming."""

from .dataset import Dataset, covering_check, lipschitz_floor, load_dataset, relevance_sets
from .geometry import Polytope, Tessellation, delaunay_tessellate, refine_cell
from .lyapunov import (
    Certificate,
    LearnOptions,
    PwaLyapunov,
    RoaEstimate,
    algorithm1_learn,
    algorithm2_sequential,
    algorithm3_learn_roa,
    extract,
    extract_roa,
)
from .program import ConicProgram, ProgramConfig, assemble, scale_invariance_transform
from .solver import Solution, SolverSettings, project_cone, register_external_solver, solve

__all__ = [
    "Certificate",
    "ConicProgram",
    "Dataset",
    "LearnOptions",
    "Polytope",
    "ProgramConfig",
    "PwaLyapunov",
    "RoaEstimate",
    "Solution",
    "SolverSettings",
    "Tessellation",
    "algorithm1_learn",
    "algorithm2_sequential",
    "algorithm3_learn_roa",
    "assemble",
    "covering_check",
    "delaunay_tessellate",
    "extract",
    "extract_roa",
    "lipschitz_floor",
    "load_dataset",
    "project_cone",
    "refine_cell",
    "register_external_solver",
    "relevance_sets",
    "scale_invariance_transform",
    "solve",
]

__version__ = "0.1.0"
