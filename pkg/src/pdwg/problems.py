"""Model problems for div(mu u) - 1/2 sum_ij d_ij(a_ij u) = f, u = g on the boundary.

Coefficient fields are callables ``field(x, region)`` taking points of
shape (..., 2) and an integer region tag broadcastable to
``x.shape[:-1]``.  Discontinuous problems tag each element by the
region containing its centroid, and every field on that element
(including boundary data and the exact solution) is evaluated with that
tag, never with a pointwise test on the interface.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .mesh import Mesh
from .polybasis import element_scale

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]

CASES = ("case_const", "case_var", "case_disc_const", "case_disc_sine", "case_quadrant")


def _single_region(points):
    return np.zeros(np.shape(points)[:-1], dtype=np.int64)


@dataclass
class ModelProblem:
    name: str
    a: Field                  # (..., 2, 2)
    mu: Field                 # (..., 2)
    f: Field                  # (...)
    g: Field                  # (...)
    exact: Field | None = None
    region_rule: Callable[[np.ndarray], np.ndarray] = _single_region
    domain: str = "unit_square"
    params: dict = field(default_factory=dict)

    def regions(self, m: Mesh) -> np.ndarray:
        return np.asarray(self.region_rule(m.centroids()), dtype=np.int64)


def _const_tensor(mat):
    mat = np.asarray(mat, dtype=float)

    def a(x, region=0):
        return np.broadcast_to(mat, np.shape(x)[:-1] + mat.shape)
    return a


def _const_vector(vec):
    vec = np.asarray(vec, dtype=float)

    def mu(x, region=0):
        return np.broadcast_to(vec, np.shape(x)[:-1] + (2,))
    return mu


def _const_scalar(c):
    def fn(x, region=0):
        return np.full(np.shape(x)[:-1], float(c))
    return fn


def _sinsin(x, region=0):
    return np.sin(x[..., 0]) * np.sin(x[..., 1])


def _sinsin_derivatives(x):
    s1, c1 = np.sin(x[..., 0]), np.cos(x[..., 0])
    s2, c2 = np.sin(x[..., 1]), np.cos(x[..., 1])
    u = s1 * s2
    return u, c1 * s2, s1 * c2, -u, c1 * c2, -u  # u, ux, uy, uxx, uxy, uyy


def _case_const():
    a = np.array([[3.0, 1.0], [1.0, 2.0]])

    def f(x, region=0):
        u, ux, uy, uxx, uxy, uyy = _sinsin_derivatives(x)
        # mu = (1, 1): div(mu u) = ux + uy
        return ux + uy - 0.5 * (3.0 * uxx + 2.0 * uxy + 2.0 * uyy)

    return ModelProblem("case_const", _const_tensor(a), _const_vector([1.0, 1.0]), f,
                        _sinsin, exact=_sinsin)


def _case_var():
    def a(x, region=0):
        x1, x2 = x[..., 0], x[..., 1]
        off = 0.25 * x1 * x2
        return np.stack([np.stack([1 + x1 ** 2, off], -1),
                         np.stack([off, 1 + x2 ** 2], -1)], -2)

    def mu(x, region=0):
        return np.array(x, dtype=float, copy=True)

    def f(x, region=0):
        x1, x2 = x[..., 0], x[..., 1]
        u, ux, uy, uxx, uxy, uyy = _sinsin_derivatives(x)
        div_mu_u = 2 * u + x1 * ux + x2 * uy
        d11 = 2 * u + 4 * x1 * ux + (1 + x1 ** 2) * uxx
        d22 = 2 * u + 4 * x2 * uy + (1 + x2 ** 2) * uyy
        d12 = 0.25 * (u + x1 * ux + x2 * uy + x1 * x2 * uxy)
        return div_mu_u - 0.5 * (d11 + d22 + 2 * d12)

    return ModelProblem("case_var", a, mu, f, _sinsin, exact=_sinsin)


def _left_right(points):
    # 0 for x1 < 0, 1 for x1 >= 0
    return (np.asarray(points)[..., 0] >= 0).astype(np.int64)


def _alpha_identity(alphas):
    alphas = np.asarray(alphas, dtype=float)

    def a(x, region):
        alpha = alphas[np.broadcast_to(region, np.shape(x)[:-1])]
        return alpha[..., None, None] * np.eye(2)
    return a


def _case_disc_const(mu=(0.0, 0.0)):
    has_exact = not np.any(np.asarray(mu, dtype=float))

    def g(x, region):
        return np.where(np.broadcast_to(region, np.shape(x)[:-1]) == 0, 2.0, 1.0)

    return ModelProblem("case_disc_const", _alpha_identity([1.0, 2.0]), _const_vector(mu),
                        _const_scalar(0.0), g, exact=g if has_exact else None,
                        region_rule=_left_right, domain="square2", params={"mu": tuple(mu)})


def _case_disc_sine():
    def u(x, region):
        scale = np.where(np.broadcast_to(region, np.shape(x)[:-1]) == 0, 2.0, 1.0)
        return scale * np.sin(3 * x[..., 1])

    def f(x, region=0):
        return 9.0 * np.sin(3 * x[..., 1])

    return ModelProblem("case_disc_sine", _alpha_identity([1.0, 2.0]), _const_vector([0, 0]),
                        f, u, exact=u, region_rule=_left_right, domain="square2")


def _quadrants(points):
    # 0 in quadrants 1 and 3, 1 in quadrants 2 and 4
    p = np.asarray(points)
    return ((p[..., 0] >= 0) != (p[..., 1] >= 0)).astype(np.int64)


def _case_quadrant():
    return ModelProblem("case_quadrant", _alpha_identity([1.0, 10.0]), _const_vector([1.0, 1.0]),
                        _const_scalar(0.25), _const_scalar(0.0), exact=None,
                        region_rule=_quadrants, domain="square2")


def catalog(case_id: str, **params) -> ModelProblem:
    """Return one of the built-in model problems.

    ``case_disc_const`` accepts ``mu=(m1, m2)``; with a nonzero drift no
    exact solution is attached.
    """
    if case_id == "case_const":
        return _case_const()
    if case_id == "case_var":
        return _case_var()
    if case_id == "case_disc_const":
        return _case_disc_const(**params)
    if case_id == "case_disc_sine":
        return _case_disc_sine()
    if case_id == "case_quadrant":
        return _case_quadrant()
    raise ValueError(f"unknown case {case_id!r}; expected one of {CASES}")


def manufactured_load(problem: ModelProblem) -> Field:
    """The load field of a catalogued problem.

    Loads are stored as hand-derived closed forms; the test suite checks
    each against a finite-difference application of the operator.
    """
    return problem.f


def apply_operator_fd(problem: ModelProblem, u: Field, x, region=0, step=1e-4) -> np.ndarray:
    """div(mu u) - 1/2 sum_ij d_ij(a_ij u) by central differences."""
    x = np.asarray(x, dtype=float)
    e = np.eye(2) * step

    def mu_u(y):
        return problem.mu(y, region) * u(y, region)[..., None]

    def a_u(y):
        return problem.a(y, region) * u(y, region)[..., None, None]

    div = sum((mu_u(x + e[i])[..., i] - mu_u(x - e[i])[..., i]) / (2 * step) for i in range(2))
    second = 0.0
    for i in range(2):
        for j in range(2):
            if i == j:
                d = (a_u(x + e[i]) - 2 * a_u(x) + a_u(x - e[i]))[..., i, i] / step ** 2
            else:
                d = (a_u(x + e[i] + e[j]) - a_u(x + e[i] - e[j])
                     - a_u(x - e[i] + e[j]) + a_u(x - e[i] - e[j]))[..., i, j] / (4 * step ** 2)
            second = second + d
    return div - 0.5 * second


@dataclass
class CordesReport:
    epsilon_max: float
    worst_point: np.ndarray
    satisfied: bool


def cordes_check(problem: ModelProblem, samples, region=None) -> CordesReport:
    """Largest epsilon in (0, 1] for which the Cordes condition holds at all samples.

    In 2D the condition reads ``sum a_ij^2 / (sum a_ii)^2 <= 1 / (1 + eps)``,
    so ``eps = (trace a)^2 / |a|_F^2 - 1`` pointwise.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if region is None:
        region = problem.region_rule(samples)
    a = problem.a(samples, region)
    d = a.shape[-1]
    trace = np.trace(a, axis1=-2, axis2=-1)
    ratio = trace ** 2 / np.sum(a ** 2, axis=(-2, -1))
    eps = ratio - (d - 1)
    worst = int(np.argmin(eps))
    eps_max = float(min(eps[worst], 1.0))
    return CordesReport(eps_max, samples[worst].copy(), eps_max > 0.0)


def nodal_interpolant(u_exact: Field, m: Mesh, s: int, regions=None) -> np.ndarray:
    """Per-element nodal interpolant in the scaled monomial basis of P_s.

    ``s = 1`` interpolates at the three vertices, ``s = 0`` at the
    centroid.  Every element evaluates ``u_exact`` with its own region
    tag, including at vertices on an interface.  Returns (nt, dim P_s).
    """
    if regions is None:
        regions = np.zeros(m.n_triangles, dtype=np.int64)
    regions = np.asarray(regions)
    if s == 0:
        return u_exact(m.centroids(), regions)[:, None]
    if s == 1:
        verts = m.vertices[m.triangles]                          # (nt, 3, 2)
        vals = u_exact(verts, regions[:, None])
        c = m.centroids()
        h = element_scale(m.diameters())
        xi = (verts - c[:, None]) / h[:, None, None]
        vand = np.concatenate([np.ones((m.n_triangles, 3, 1)), xi], axis=-1)
        return np.linalg.solve(vand, vals[..., None])[..., 0]
    raise ValueError("nodal interpolation is defined for s in {0, 1}")
