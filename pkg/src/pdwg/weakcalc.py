"""Discrete weak gradient, weak second partials and L2 projections.

A local weak function on a triangle is a triple ``{v0, vb, vg}``:

* ``v0`` -- coefficients in the scaled monomial basis of P_k(T);
* ``vb`` -- per local edge, Legendre coefficients of a P_k(e) function;
* ``vg`` -- per local edge and Cartesian component, Legendre
  coefficients of a P_{k-1}(e) function.

Edge polynomials use the global edge parameter (see :mod:`pdwg.mesh`)
so they are single valued between neighbours.  The weak operators are
linear, so they are built as matrices acting on the flattened triple
``[v0, vb, vg]`` (see :func:`local_layout`); every routine works on a
whole batch of elements at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Elements, Mesh
from .polybasis import (dim_p, element_scale, legendre_norms, legendre_values, quad_edge,
                        quad_triangle, scaled_monomials)

VARIANTS = ("Cminus1", "C0")


@dataclass
class LocalWeakFunction:
    v0: np.ndarray  # (..., dim P_k)
    vb: np.ndarray  # (..., 3, k + 1)
    vg: np.ndarray  # (..., 3, 2, k)

    @property
    def k(self) -> int:
        return self.vb.shape[-1] - 1

    def flat(self) -> np.ndarray:
        lead = self.v0.shape[:-1]
        return np.concatenate([self.v0, self.vb.reshape(lead + (-1,)),
                               self.vg.reshape(lead + (-1,))], axis=-1)

    @classmethod
    def from_flat(cls, x, k: int) -> "LocalWeakFunction":
        n0, nb, _ = local_layout(k)
        x = np.asarray(x)
        lead = x.shape[:-1]
        return cls(x[..., :n0], x[..., n0:n0 + nb].reshape(lead + (3, k + 1)),
                   x[..., n0 + nb:].reshape(lead + (3, 2, k)))


def local_layout(k: int) -> tuple[int, int, int]:
    """Block sizes (v0, vb, vg) of a flattened local weak function."""
    return dim_p(k), 3 * (k + 1), 6 * k


def _check_variant(variant):
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def as_elements(geom) -> Elements:
    if isinstance(geom, Elements):
        return geom
    if isinstance(geom, Mesh):
        return geom.elements()
    return Elements.from_vertices(geom)


class ElementQuadrature:
    """Quadrature points and weights mapped onto a batch of elements."""

    def __init__(self, els: Elements, degree: int):
        self.els = els
        self.degree = degree
        qt = quad_triangle(degree)
        qe = quad_edge(degree)
        self.centers = els.centroids
        self.h = els.diameters
        self.scale = element_scale(self.h)
        self.x = els.map_points(qt.points)                          # (n, nq, 2)
        self.w = 2.0 * els.areas[:, None] * qt.weights[None, :]     # (n, nq)
        self.t = qe.points
        self.xe = els.edge_points(qe.points)                        # (n, 3, nqe, 2)
        self.we = 0.5 * els.edge_lengths[..., None] * qe.weights    # (n, 3, nqe)

    def basis(self, r, deriv=0, on_edges=False):
        if on_edges:
            return scaled_monomials(self.xe, self.centers[:, None, None], self.scale[:, None, None],
                                    r, deriv)
        return scaled_monomials(self.x, self.centers[:, None], self.scale[:, None], r, deriv)

    def legendre(self, r):
        return legendre_values(self.t, r)                           # (nqe, r + 1)


def mass_matrices(quad: ElementQuadrature, r: int) -> np.ndarray:
    phi = quad.basis(r)
    return np.einsum("nq,nqa,nqb->nab", quad.w, phi, phi)


def _default_degree(k):
    return 2 * k + 2


def weak_gradient_matrix(els, k: int, r: int | None = None, quad_degree: int | None = None,
                         quad: ElementQuadrature | None = None) -> np.ndarray:
    """Matrix of v -> weak gradient in [P_r(T)]^2, shape (n, 2, dim P_r, nloc).

    Built from ``(grad_w v, psi) = -(v0, div psi) + <vb, psi.n>``.
    """
    els = as_elements(els)
    r = k - 1 if r is None else r
    quad = quad or ElementQuadrature(els, quad_degree or _default_degree(k))
    n0, nb, ng = local_layout(k)
    n, nr = len(els), dim_p(r)
    rhs = np.zeros((n, 2, nr, n0 + nb + ng))

    phi_k = quad.basis(k)
    dphi_r = quad.basis(r, 1)
    rhs[..., :n0] = -np.einsum("nq,nqa,nqbi->niba", quad.w, phi_k, dphi_r)

    phi_r_e = quad.basis(r, on_edges=True)                          # (n, 3, nqe, nr)
    leg = quad.legendre(k)                                          # (nqe, k + 1)
    edge = np.einsum("neq,neqb,qm,nei->nibem", quad.we, phi_r_e, leg, quad.els.normals)
    rhs[..., n0:n0 + nb] = edge.reshape(n, 2, nr, nb)

    mass = mass_matrices(quad, r)
    return np.linalg.solve(mass[:, None], rhs)


def weak_hessian_matrix(els, k: int, s: int, variant: str = "Cminus1",
                        quad_degree: int | None = None,
                        quad: ElementQuadrature | None = None) -> np.ndarray:
    """Matrix of v -> weak second partials in P_s(T), shape (n, 2, 2, dim P_s, nloc).

    Entry ``[i, j]`` is the weak counterpart of d^2/(dx_i dx_j), defined by
    ``(d2_ij v, phi) = (v0, d_ji phi) - <vb n_i, d_j phi> + <vg_i, phi n_j>``
    for ``Cminus1``, and by ``-(d_i v0, d_j phi) + <vg_i, phi n_j>`` for
    ``C0`` (where vb is the trace of v0 and does not enter).
    """
    _check_variant(variant)
    els = as_elements(els)
    quad = quad or ElementQuadrature(els, quad_degree or _default_degree(k))
    n0, nb, ng = local_layout(k)
    n, ns = len(els), dim_p(s)
    rhs = np.zeros((n, 2, 2, ns, n0 + nb + ng))
    normals = quad.els.normals
    leg_k = quad.legendre(k)
    phi_s_e = quad.basis(s, on_edges=True)

    if variant == "Cminus1":
        phi_k = quad.basis(k)
        hess_s = quad.basis(s, 2)
        rhs[..., :n0] = np.einsum("nq,nqa,nqbji->nijba", quad.w, phi_k, hess_s)
        dphi_s_e = quad.basis(s, 1, on_edges=True)                  # (n, 3, nqe, ns, 2)
        vb = -np.einsum("neq,qm,nei,neqbj->nijbem", quad.we, leg_k, normals, dphi_s_e)
        rhs[..., n0:n0 + nb] = vb.reshape(n, 2, 2, ns, nb)
    else:
        dphi_k = quad.basis(k, 1)
        dphi_s = quad.basis(s, 1)
        rhs[..., :n0] = -np.einsum("nq,nqai,nqbj->nijba", quad.w, dphi_k, dphi_s)

    if k >= 1:
        leg_g = quad.legendre(k - 1)
        vg_edge = np.einsum("neq,qm,nej,neqb->njbem", quad.we, leg_g, normals, phi_s_e)
        # the vg component index equals the first derivative index i
        block = np.zeros((n, 2, 2, ns, 3, 2, k))
        for i in range(2):
            block[:, i, :, :, :, i, :] = vg_edge
        rhs[..., n0 + nb:] = block.reshape(n, 2, 2, ns, ng)

    mass = mass_matrices(quad, s)
    return np.linalg.solve(mass[:, None, None], rhs)


def _single(els, v):
    els = as_elements(els)
    x = v.flat() if isinstance(v, LocalWeakFunction) else np.asarray(v)
    if x.ndim == 1:
        x = np.broadcast_to(x, (len(els), x.shape[-1]))
    return els, x


def weak_gradient(els, v, r: int | None = None, quad_degree: int | None = None) -> np.ndarray:
    """Weak gradient coefficients, shape (n, 2, dim P_r)."""
    k = v.k if isinstance(v, LocalWeakFunction) else None
    els, x = _single(els, v)
    if k is None:
        raise TypeError("pass a LocalWeakFunction")
    mat = weak_gradient_matrix(els, k, r, quad_degree)
    return np.einsum("nibl,nl->nib", mat, x)


def weak_hessian(els, v, s: int, variant: str = "Cminus1",
                 quad_degree: int | None = None) -> np.ndarray:
    """Weak second partial coefficients, shape (n, 2, 2, dim P_s)."""
    if not isinstance(v, LocalWeakFunction):
        raise TypeError("pass a LocalWeakFunction")
    k = v.k
    els, x = _single(els, v)
    mat = weak_hessian_matrix(els, k, s, variant, quad_degree)
    return np.einsum("nijbl,nl->nijb", mat, x)


# ----------------------------------------------------------------------
# projections

def project_element(f, els, r: int, quad_degree: int | None = None) -> np.ndarray:
    """L2 projection of ``f`` onto P_r of every element, shape (n, dim P_r).

    ``f`` maps points of shape (..., 2) to values of shape (...) or
    (..., *c) for vector/tensor fields, giving (n, *c, dim P_r).
    """
    els = as_elements(els)
    quad = ElementQuadrature(els, quad_degree or 2 * r + 4)
    phi = quad.basis(r)
    vals = np.asarray(f(quad.x), dtype=float)
    mass = mass_matrices(quad, r)
    rhs = np.einsum("nq,nq...,nqa->n...a", quad.w, vals, phi)
    extra = rhs.ndim - 2
    mass = mass.reshape(mass.shape[:1] + (1,) * extra + mass.shape[1:])
    return np.linalg.solve(mass, rhs[..., None])[..., 0]


def project_edge(f, start, stop, r: int, quad_degree: int | None = None) -> np.ndarray:
    """L2 projection onto P_r(e) in the Legendre basis, shape (..., r + 1).

    ``start``/``stop`` (shape (..., 2)) fix the parametrisation
    ``x(t) = (start + stop)/2 + t (stop - start)/2``.
    """
    q = quad_edge(quad_degree or 2 * r + 4)
    start = np.asarray(start, dtype=float)
    stop = np.asarray(stop, dtype=float)
    x = 0.5 * (start + stop)[..., None, :] + 0.5 * q.points[:, None] * (stop - start)[..., None, :]
    vals = np.asarray(f(x), dtype=float)
    leg = legendre_values(q.points, r)
    if vals.ndim == x.ndim - 1:
        moments = np.einsum("...q,q,qm->...m", vals, q.weights, leg)
    else:
        moments = np.einsum("...qc,q,qm->...cm", vals, q.weights, leg)
    return moments / legendre_norms(r)


def trace_matrix(els, k: int) -> np.ndarray:
    """Legendre coefficients of the edge traces of each P_k basis function.

    Returns shape (n, 3, k + 1, dim P_k).
    """
    els = as_elements(els)
    quad = ElementQuadrature(els, 2 * k + 2)
    phi = quad.basis(k, on_edges=True)                               # (n, 3, nqe, nk)
    leg = quad.legendre(k)
    w = quad_edge(2 * k + 2).weights
    return np.einsum("q,qm,neqa->nema", w, leg, phi) / legendre_norms(k)[:, None]


def c0_interpolant(w, els, k: int, quad_degree: int | None = None) -> np.ndarray:
    """Local P_k interpolant matching vertex values, edge moments and interior moments.

    The interpolant agrees with ``w`` at the three vertices, in its
    moments against P_{k-2}(e) on every edge and against P_{k-3}(T) in
    the interior.  It depends only on edge data along edges, so it is
    continuous across elements.  Returns shape (n, dim P_k).
    """
    els = as_elements(els)
    quad = ElementQuadrature(els, quad_degree or 2 * k + 4)
    n, nk = len(els), dim_p(k)
    centers, scale = quad.centers, quad.scale
    rows = [scaled_monomials(els.vertices, centers[:, None], scale[:, None], k)]
    vals = [np.asarray(w(els.vertices), dtype=float)]
    if k >= 2:
        leg = quad.legendre(k - 2)
        phi_e = quad.basis(k, on_edges=True)
        rows.append(np.einsum("neq,qm,neqa->nema", quad.we, leg, phi_e).reshape(n, -1, nk))
        vals.append(np.einsum("neq,qm,neq->nem", quad.we, leg, w(quad.xe)).reshape(n, -1))
    if k >= 3:
        phi = quad.basis(k)
        low = quad.basis(k - 3)
        rows.append(np.einsum("nq,nqb,nqa->nba", quad.w, low, phi))
        vals.append(np.einsum("nq,nqb,nq->nb", quad.w, low, w(quad.x)))
    mat = np.concatenate(rows, axis=1)
    rhs = np.concatenate(vals, axis=1)
    return np.linalg.solve(mat, rhs[..., None])[..., 0]


def project_Qh(w, grad_w, els, k: int, variant: str = "Cminus1",
               quad_degree: int | None = None) -> LocalWeakFunction:
    """The triple {Q0 w, Qb w, Qg grad w} on every element.

    In the ``C0`` variant the interior component is
    :func:`c0_interpolant` and ``vb`` is its trace.
    """
    _check_variant(variant)
    els = as_elements(els)
    qd = quad_degree or 2 * k + 4
    if variant == "Cminus1":
        v0 = project_element(w, els, k, qd)
        vb = project_edge(w, els.edge_start, els.edge_stop, k, qd)
    else:
        v0 = c0_interpolant(w, els, k, qd)
        vb = np.einsum("nema,na->nem", trace_matrix(els, k), v0)
    vg = project_edge(grad_w, els.edge_start, els.edge_stop, k - 1, qd)  # (n, 3, 2, k)
    return LocalWeakFunction(v0, vb, vg)


def eval_element_poly(coeffs, els, points_ref=None, points=None, r=None) -> np.ndarray:
    """Evaluate per-element scaled-monomial polynomials.

    ``points`` has shape (n, m, 2); ``coeffs`` shape (n, dim P_r).
    """
    els = as_elements(els)
    coeffs = np.asarray(coeffs)
    if r is None:
        r = int(round((np.sqrt(8 * coeffs.shape[-1] + 1) - 3) / 2))
    if points is None:
        points = els.map_points(points_ref)
    phi = scaled_monomials(points, els.centroids[:, None], element_scale(els.diameters)[:, None], r)
    return np.einsum("nma,na->nm", phi, coeffs)
