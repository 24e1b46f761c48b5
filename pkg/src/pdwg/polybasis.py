"""Polynomial bases on triangles and edges, and quadrature rules.

Element spaces use scaled, centred monomials
``phi_(a,b)(x) = ((x1 - c1)/h)^a ((x2 - c2)/h)^b`` in graded order,
edge spaces use Legendre polynomials in the edge parameter ``t`` in
[-1, 1].  All evaluators broadcast over leading axes so that whole
meshes can be processed at once.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre
from scipy.special import roots_jacobi

MAX_QUAD_DEGREE = 40


def dim_p(k: int) -> int:
    """Dimension of P_k on a triangle."""
    return (k + 1) * (k + 2) // 2 if k >= 0 else 0


@lru_cache(maxsize=None)
def monomial_exponents(k: int) -> np.ndarray:
    """Exponents (a, b) of the monomials of P_k in graded order."""
    exps = [(d - j, j) for d in range(k + 1) for j in range(d + 1)]
    out = np.array(exps, dtype=np.int64).reshape(-1, 2)
    out.setflags(write=False)
    return out


# ----------------------------------------------------------------------
# quadrature

@dataclass(frozen=True)
class QuadRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int
    domain: str  # "triangle" (reference (0,0),(1,0),(0,1)) or "interval" ([-1, 1])


def _check_degree(degree):
    if not 0 <= degree <= MAX_QUAD_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree} (0..{MAX_QUAD_DEGREE})")


@lru_cache(maxsize=None)
def quad_edge(degree: int) -> QuadRule:
    """Gauss-Legendre rule on [-1, 1] exact for polynomials of ``degree``."""
    _check_degree(degree)
    n = degree // 2 + 1
    t, w = legendre.leggauss(n)
    return QuadRule(t, w, degree, "interval")


@lru_cache(maxsize=None)
def quad_triangle(degree: int) -> QuadRule:
    """Collapsed Gauss rule on the reference triangle.

    Tensor product of Gauss-Legendre in the collapsed coordinate and
    Gauss-Jacobi(1, 0) in the other; all weights are positive.
    """
    _check_degree(degree)
    n = degree // 2 + 1
    s, ws = legendre.leggauss(n)
    r, wr = roots_jacobi(n, 1.0, 0.0)
    u = 0.5 * (1.0 + s)
    v = 0.5 * (1.0 + r)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    pts = np.stack([(uu * (1.0 - vv)).ravel(), vv.ravel()], axis=1)
    wts = (0.125 * ws[:, None] * wr[None, :]).ravel()
    return QuadRule(pts, wts, degree, "triangle")


# ----------------------------------------------------------------------
# triangle basis

@dataclass(frozen=True)
class TriBasis:
    degree: int
    center: tuple[float, float]
    scale: float

    @property
    def dim(self) -> int:
        return dim_p(self.degree)

    @property
    def exponents(self) -> np.ndarray:
        return monomial_exponents(self.degree)


def scaled_monomials(points, center, scale, k: int, deriv: int = 0) -> np.ndarray:
    """Scaled monomials of P_k or their derivatives.

    Parameters
    ----------
    points : ndarray, shape (..., 2)
    center : ndarray, broadcastable to ``points``
    scale : ndarray, broadcastable to ``points.shape[:-1]``
    deriv : {0, 1, 2}

    Returns
    -------
    ndarray
        Shape (..., dim) for values, (..., dim, 2) for gradients and
        (..., dim, 2, 2) for Hessians.
    """
    exps = monomial_exponents(k)
    scale = np.asarray(scale, dtype=float)[..., None]
    xi = (np.asarray(points, dtype=float) - center) / scale
    powers = np.arange(k + 1)
    px = xi[..., 0:1] ** powers
    py = xi[..., 1:2] ** powers
    a, b = exps[:, 0], exps[:, 1]
    if deriv == 0:
        return px[..., a] * py[..., b]

    def dpow(p, e, order):
        coef = np.ones_like(e, dtype=float)
        for j in range(order):
            coef = coef * np.maximum(e - j, 0)
        return coef * p[..., np.maximum(e - order, 0)]

    if deriv == 1:
        gx = dpow(px, a, 1) * py[..., b]
        gy = px[..., a] * dpow(py, b, 1)
        return np.stack([gx, gy], axis=-1) / scale[..., None]
    if deriv == 2:
        hxx = dpow(px, a, 2) * py[..., b]
        hxy = dpow(px, a, 1) * dpow(py, b, 1)
        hyy = px[..., a] * dpow(py, b, 2)
        hess = np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -1)
        return hess / (scale ** 2)[..., None, None]
    raise ValueError("deriv must be 0, 1 or 2")


def eval_basis(b: TriBasis, p) -> np.ndarray:
    return scaled_monomials(p, np.asarray(b.center), b.scale, b.degree, 0)


def eval_grad(b: TriBasis, p) -> np.ndarray:
    return scaled_monomials(p, np.asarray(b.center), b.scale, b.degree, 1)


def eval_hess(b: TriBasis, p) -> np.ndarray:
    return scaled_monomials(p, np.asarray(b.center), b.scale, b.degree, 2)


def element_scale(diameter):
    """Scale of the element monomials: half the diameter.

    With the full diameter the P_2 mass matrix on the reference triangle
    has condition number ~7.6e3; half the diameter brings it to ~5e2.
    Any fixed multiple of h_T keeps the conditioning h-independent.
    """
    return 0.5 * np.asarray(diameter, dtype=float)


def basis_for(vertices, k: int) -> TriBasis:
    """The scaled monomial basis of P_k attached to one triangle."""
    v = np.asarray(vertices, dtype=float)
    h = max(np.linalg.norm(v[i] - v[(i + 1) % 3]) for i in range(3))
    c = v.mean(axis=0)
    return TriBasis(k, (float(c[0]), float(c[1])), float(element_scale(h)))


# ----------------------------------------------------------------------
# edge basis

@dataclass(frozen=True)
class EdgeBasis:
    degree: int

    @property
    def dim(self) -> int:
        return self.degree + 1


def legendre_values(t, r: int) -> np.ndarray:
    """Legendre polynomials P_0..P_r at ``t``, shape (..., r + 1)."""
    if r < 0:
        return np.zeros(np.shape(t) + (0,))
    return legendre.legvander(np.asarray(t, dtype=float), r)


def legendre_norms(r: int) -> np.ndarray:
    """Squared norms of P_0..P_r on [-1, 1]."""
    return 2.0 / (2.0 * np.arange(r + 1) + 1.0)


def mass_matrix(b, geometry, q: QuadRule | None = None) -> np.ndarray:
    """L2 Gram matrix of a triangle or edge basis.

    ``geometry`` is the (3, 2) vertex array for a :class:`TriBasis` or
    the (2, 2) endpoint array for an :class:`EdgeBasis`.

    Raises
    ------
    ValueError
        If the Gram matrix is not positive definite (degenerate geometry).
    """
    geometry = np.asarray(geometry, dtype=float)
    if isinstance(b, EdgeBasis):
        q = q or quad_edge(2 * b.degree)
        length = np.linalg.norm(geometry[1] - geometry[0])
        vals = legendre_values(q.points, b.degree)
        mat = 0.5 * length * (vals.T * q.weights) @ vals
    else:
        q = q or quad_triangle(2 * b.degree)
        d1, d2 = geometry[1] - geometry[0], geometry[2] - geometry[0]
        area = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
        x = geometry[0] + q.points[:, :1] * (geometry[1] - geometry[0]) \
            + q.points[:, 1:] * (geometry[2] - geometry[0])
        vals = eval_basis(b, x)
        mat = 2.0 * area * (vals.T * q.weights) @ vals
    mat = 0.5 * (mat + mat.T)
    if mat.size and np.linalg.eigvalsh(mat)[0] <= 1e-14 * max(np.abs(mat).max(), 1e-300):
        raise ValueError("singular mass matrix: degenerate geometry")
    return mat
