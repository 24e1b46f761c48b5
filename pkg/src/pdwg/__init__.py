"""Primal-dual weak Galerkin finite elements for Fokker-Planck type equations.

Solves ``div(mu u) - 1/2 sum_ij d_ij(a_ij u) = f`` with Dirichlet data on
triangular meshes, including discontinuous diffusion tensors.
"""
from .mesh import Mesh, initial_mesh, refine_uniform, refined
from .problems import ModelProblem, catalog, cordes_check, nodal_interpolant
from .solver import SolutionPair, solve_saddle
from .study import compute_norms, emit_field, emit_table, run_convergence
from .system import SaddleSystem, assemble, build_dof_map

__all__ = [
    "Mesh", "initial_mesh", "refine_uniform", "refined",
    "ModelProblem", "catalog", "cordes_check", "nodal_interpolant",
    "SolutionPair", "solve_saddle",
    "compute_norms", "emit_field", "emit_table", "run_convergence",
    "SaddleSystem", "assemble", "build_dof_map",
]
