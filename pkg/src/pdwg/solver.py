"""Direct solution of the symmetric indefinite saddle-point system."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .system import SaddleSystem

RESIDUAL_TOL = 1e-9
DENSE_LIMIT = 500


class SolverError(RuntimeError):
    pass


class SingularSystemError(SolverError):
    """The factorization broke down; the mesh may be too coarse for a unique solution."""


class ResidualError(SolverError):
    pass


@dataclass
class SolutionPair:
    rho: np.ndarray          # free rho coefficients
    u: np.ndarray            # (nt, dim P_s) primal coefficients
    residual_norm: float


def relative_residual(A, x, b) -> float:
    return float(np.linalg.norm(A @ x - b) / max(1.0, np.linalg.norm(b)))


def solve_dense(A, b) -> np.ndarray:
    """Dense LU solve, used as a test oracle for small systems."""
    A = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    try:
        with warnings.catch_warnings(), np.errstate(divide="ignore", invalid="ignore"):
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            return scipy.linalg.solve(A, b)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        raise SingularSystemError(str(exc)) from exc


def solve_sparse(A, b, refine_steps: int = 2) -> np.ndarray:
    """SuperLU solve with a couple of iterative-refinement sweeps."""
    A = sp.csc_matrix(A)
    try:
        lu = spla.splu(A, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularSystemError(str(exc)) from exc
    x = lu.solve(b)
    for _ in range(refine_steps):
        if not np.all(np.isfinite(x)):
            break
        x = x + lu.solve(b - A @ x)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("factorization produced non-finite values")
    return x


def solve_linear(A, b, tol: float = RESIDUAL_TOL) -> tuple[np.ndarray, float]:
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise ValueError("system must be square and match the right-hand side")
    if A.shape[0] < DENSE_LIMIT:
        x = solve_dense(A, b)
    else:
        x = solve_sparse(A, b)
    res = relative_residual(A, x, b)
    if not res <= tol:
        raise ResidualError(f"relative residual {res:.3e} exceeds {tol:.1e}")
    return x, res


def solve_saddle(system: SaddleSystem, tol: float = RESIDUAL_TOL) -> SolutionPair:
    """Solve the assembled system and verify the relative residual."""
    x, res = solve_linear(system.matrix, system.rhs, tol)
    dm = system.dofmap
    u = x[dm.n_rho:].reshape(dm.u_dofs.shape)
    return SolutionPair(x[:dm.n_rho].copy(), u, res)
