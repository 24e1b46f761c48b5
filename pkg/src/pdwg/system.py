"""Degrees of freedom and assembly of the primal-dual saddle-point system.

Unknowns are the auxiliary weak function ``rho`` (edge values vanish
on the boundary) and the primal variable ``u`` (piecewise P_s).  The
assembled system is::

    [ S  B^T ] [rho]   [F]
    [ B  0   ] [ u ] = [0]

with ``S`` the stabilizer, ``B[v, sigma] = (v, L_w sigma)`` and
``F(sigma) = 1/2 sum_ij <a_ij g, sigma_gj n_i>_{boundary} - (f, sigma_0)``.

Two element types are supported.  ``Cminus1`` has an independent,
single-valued ``rho_b`` on interior edges.  ``C0`` takes ``rho_b`` as the
trace of a continuous Lagrange P_k field ``rho_0``; its boundary trace
nodes are fixed to zero, which is the C0 form of ``rho_b = 0`` on the
boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .mesh import Mesh
from .polybasis import dim_p, element_scale, legendre_values, scaled_monomials
from .problems import ModelProblem
from .weakcalc import (VARIANTS, ElementQuadrature, local_layout, trace_matrix,
                       weak_gradient_matrix, weak_hessian_matrix)


def check_degrees(k: int, s: int) -> None:
    if k < 1:
        raise ValueError("k must be at least 1")
    if s < 0 or s not in (k - 1, k - 2):
        raise ValueError(f"invalid pair (k={k}, s={s}): need s in {{k-1, k-2}} and s >= 0")


# ----------------------------------------------------------------------
# degrees of freedom

def lagrange_nodes_ref(k: int) -> np.ndarray:
    """Barycentric weights of the local P_k nodes: vertices, edge nodes, interior.

    Edge ``i`` nodes run from vertex ``i`` to vertex ``i+1``.
    """
    nodes = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    for i in range(3):
        for j in range(1, k):
            lam = [0.0, 0.0, 0.0]
            lam[i] = (k - j) / k
            lam[(i + 1) % 3] = j / k
            nodes.append(tuple(lam))
    for i in range(1, k - 1):
        for j in range(1, k - i):
            nodes.append(((k - i - j) / k, i / k, j / k))
    return np.array(nodes, dtype=float)


@dataclass
class DofMap:
    variant: str
    k: int
    s: int
    n_rho: int                 # free rho unknowns
    n_rho_unconstrained: int   # before boundary elimination
    n_u: int
    rho_dofs: np.ndarray       # (nt, nloc) global index, -1 if constrained
    u_dofs: np.ndarray         # (nt, dim P_s)
    blocks: dict               # block name -> (start, stop) in the rho numbering

    @property
    def n_total(self) -> int:
        return self.n_rho + self.n_u

    def legend(self) -> str:
        lines = [f"variant {self.variant}", f"k {self.k}", f"s {self.s}",
                 f"n_rho {self.n_rho}", f"n_u {self.n_u}"]
        for name, (a, b) in self.blocks.items():
            lines.append(f"block {name} {a} {b}")
        lines.append(f"block u {self.n_rho} {self.n_rho + self.n_u}")
        return "\n".join(lines) + "\n"


def build_dof_map(m: Mesh, k: int, s: int, variant: str = "C0") -> DofMap:
    """Global numbering of the rho unknowns followed by the u unknowns."""
    check_degrees(k, s)
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    nt, ne, nv = m.n_triangles, m.n_edges, m.n_vertices
    nk, ns = dim_p(k), dim_p(s)
    tri_edges = m.triangle_edges
    blocks = {}

    g_local = (2 * k * tri_edges[..., None] + np.arange(2 * k)).reshape(nt, 6 * k)
    if variant == "Cminus1":
        interior = ~m.boundary
        n_int = int(interior.sum())
        int_index = np.full(ne, -1, dtype=np.int64)
        int_index[interior] = np.arange(n_int)
        off_b = nt * nk
        off_g = off_b + n_int * (k + 1)
        v0 = np.arange(nt * nk).reshape(nt, nk)
        ie = int_index[tri_edges]                                   # (nt, 3)
        vb = np.where(ie[..., None] >= 0, off_b + (k + 1) * ie[..., None] + np.arange(k + 1), -1)
        rho = np.concatenate([v0, vb.reshape(nt, -1), off_g + g_local], axis=1)
        n_rho = off_g + ne * 2 * k
        n_unc = nt * nk + ne * (k + 1) + ne * 2 * k
        blocks = {"v0": (0, off_b), "vb": (off_b, off_g), "vg": (off_g, n_rho)}
    else:
        n_edge_nodes = k - 1
        n_int_nodes = dim_p(k - 3)
        n_nodes = nv + ne * n_edge_nodes + nt * n_int_nodes
        local = np.empty((nt, nk), dtype=np.int64)
        local[:, :3] = m.triangles
        col = 3
        sign = m.triangle_edge_signs
        for i in range(3):
            for j in range(1, k):
                pos = np.where(sign[:, i] > 0, j - 1, k - 1 - j)
                local[:, col] = nv + tri_edges[:, i] * n_edge_nodes + pos
                col += 1
        local[:, col:] = (nv + ne * n_edge_nodes
                          + np.arange(nt)[:, None] * n_int_nodes + np.arange(n_int_nodes))
        fixed = np.zeros(n_nodes, dtype=bool)
        bedges = np.flatnonzero(m.boundary)
        fixed[m.edges[bedges].ravel()] = True
        for j in range(n_edge_nodes):
            fixed[nv + bedges * n_edge_nodes + j] = True
        free_index = np.full(n_nodes, -1, dtype=np.int64)
        n_free = int((~fixed).sum())
        free_index[~fixed] = np.arange(n_free)
        rho = np.concatenate([free_index[local], n_free + g_local], axis=1)
        n_rho = n_free + ne * 2 * k
        n_unc = n_nodes + ne * 2 * k
        blocks = {"rho0_nodes": (0, n_free), "vg": (n_free, n_rho)}

    u = np.arange(nt * ns).reshape(nt, ns)
    return DofMap(variant, k, s, n_rho, n_unc, nt * ns, rho, u, blocks)


def c0_embedding(els, k: int) -> np.ndarray:
    """Map from C0 local unknowns (nodal values, vg) to the weak triple, (n, ntriple, nloc)."""
    n = len(els)
    nk = dim_p(k)
    n0, nb, ng = local_layout(k)
    lam = lagrange_nodes_ref(k)
    nodes = np.einsum("ab,nbx->nax", lam, els.vertices)
    vand = scaled_monomials(nodes, els.centroids[:, None], element_scale(els.diameters)[:, None], k)
    vinv = np.linalg.inv(vand)                                      # nodal -> monomial
    trace = trace_matrix(els, k).reshape(n, nb, nk)
    emb = np.zeros((n, n0 + nb + ng, nk + ng))
    emb[:, :n0, :nk] = vinv
    emb[:, n0:n0 + nb, :nk] = trace @ vinv
    emb[:, n0 + nb:, nk:] = np.eye(ng)
    return emb


# ----------------------------------------------------------------------
# local matrices (in weak-triple coordinates)

def _coefficients(problem, quad, regions):
    a = problem.a(quad.x, regions[:, None])
    mu = problem.mu(quad.x, regions[:, None])
    return a, mu


def _strong_operator_rows(quad, k, a, mu):
    """L(phi) = mu . grad phi + 1/2 sum_ij a_ij d_ji phi at the quadrature points."""
    grad = quad.basis(k, 1)
    hess = quad.basis(k, 2)
    return np.einsum("nqi,nqai->nqa", mu, grad) + 0.5 * np.einsum("nqij,nqaji->nqa", a, hess)


def local_stabilizer(els, problem: ModelProblem, k: int, delta: float, variant: str = "C0",
                     quad_degree: int | None = None, regions=None,
                     quad: ElementQuadrature | None = None) -> np.ndarray:
    """Element stabilizer matrices on the weak triple, shape (n, nloc, nloc).

    Sum of ``h^-3 <r0 - rb, s0 - sb>``, ``h^-1 <grad r0 - rg, grad s0 - sg>``
    over the element boundary and ``delta (L r0, L s0)`` over the element.
    The first term vanishes identically for ``C0`` and is skipped.
    """
    quad = quad or ElementQuadrature(els, quad_degree or 2 * k + 2)
    n = len(els)
    n0, nb, ng = local_layout(k)
    ntr = n0 + nb + ng
    nqe = quad.t.size
    h = quad.h
    regions = np.zeros(n, dtype=np.int64) if regions is None else np.asarray(regions)
    out = np.zeros((n, ntr, ntr))

    if variant == "Cminus1":
        jump = np.zeros((n, 3, nqe, ntr))
        jump[..., :n0] = quad.basis(k, on_edges=True)
        leg = quad.legendre(k)
        for e in range(3):
            cols = slice(n0 + e * (k + 1), n0 + (e + 1) * (k + 1))
            jump[:, e, :, cols] = -leg
        out += np.einsum("n,neq,neqa,neqb->nab", h ** -3, quad.we, jump, jump)

    gjump = np.zeros((n, 3, nqe, 2, ntr))
    gjump[..., :n0] = np.moveaxis(quad.basis(k, 1, on_edges=True), -1, -2)
    leg_g = quad.legendre(k - 1)
    for e in range(3):
        for i in range(2):
            start = n0 + nb + (2 * e + i) * k
            gjump[:, e, :, i, start:start + k] = -leg_g
    out += np.einsum("n,neq,neqia,neqib->nab", h ** -1, quad.we, gjump, gjump)

    if delta:
        a, mu = _coefficients(problem, quad, regions)
        rows = np.zeros((n, quad.x.shape[1], ntr))
        rows[..., :n0] = _strong_operator_rows(quad, k, a, mu)
        out += delta * np.einsum("nq,nqa,nqb->nab", quad.w, rows, rows)
    return 0.5 * (out + np.swapaxes(out, 1, 2))


def weak_operator_values(els, problem: ModelProblem, k: int, s: int, variant: str,
                         regions, quad: ElementQuadrature) -> np.ndarray:
    """L_w applied to every local basis function, at the quadrature points (n, nq, nloc)."""
    grad = weak_gradient_matrix(els, k, k - 1, quad=quad)           # (n, 2, nr, nloc)
    hess = weak_hessian_matrix(els, k, s, variant, quad=quad)       # (n, 2, 2, ns, nloc)
    gv = np.einsum("nqb,nibl->nqil", quad.basis(k - 1), grad)
    hv = np.einsum("nqb,nijbl->nqijl", quad.basis(s), hess)
    a, mu = _coefficients(problem, quad, regions)
    return np.einsum("nqi,nqil->nql", mu, gv) + 0.5 * np.einsum("nqij,nqjil->nql", a, hv)


def local_b(els, problem: ModelProblem, k: int, s: int, variant: str = "C0",
            quad_degree: int | None = None, regions=None,
            quad: ElementQuadrature | None = None) -> np.ndarray:
    """Element coupling matrices ``(v, L_w sigma)_T``, shape (n, dim P_s, nloc)."""
    quad = quad or ElementQuadrature(els, quad_degree or 2 * k + 2)
    regions = np.zeros(len(els), dtype=np.int64) if regions is None else np.asarray(regions)
    lw = weak_operator_values(els, problem, k, s, variant, regions, quad)
    return np.einsum("nq,nqb,nql->nbl", quad.w, quad.basis(s), lw)


def local_rhs(els, problem: ModelProblem, k: int, boundary_edges, quad_degree=None,
              regions=None, quad: ElementQuadrature | None = None) -> np.ndarray:
    """Element load vectors on the weak triple, shape (n, nloc).

    ``boundary_edges`` is an (n, 3) mask of local edges on the domain boundary.
    """
    quad = quad or ElementQuadrature(els, quad_degree or 2 * k + 2)
    n = len(els)
    n0, nb, ng = local_layout(k)
    regions = np.zeros(n, dtype=np.int64) if regions is None else np.asarray(regions)
    out = np.zeros((n, n0 + nb + ng))
    fvals = problem.f(quad.x, regions[:, None])
    out[:, :n0] = -np.einsum("nq,nq,nqa->na", quad.w, fvals, quad.basis(k))

    mask = np.asarray(boundary_edges, dtype=bool)
    if mask.any():
        tags = regions[:, None, None]
        a = problem.a(quad.xe, tags)                                 # (n, 3, nqe, 2, 2)
        g = problem.g(quad.xe, tags)                                 # (n, 3, nqe)
        leg = legendre_values(quad.t, k - 1)
        mom = 0.5 * np.einsum("neq,neqij,neq,nei,qm->nejm", quad.we, a, g,
                              quad.els.normals, leg)
        mom *= mask[..., None, None]
        out[:, n0 + nb:] = mom.reshape(n, ng)
    return out


# ----------------------------------------------------------------------
# global system

@dataclass
class SaddleSystem:
    S: sp.csr_matrix
    B: sp.csr_matrix
    F: np.ndarray
    dofmap: DofMap
    embed: np.ndarray | None = None    # C0 local-to-triple maps, kept for post-processing

    @property
    def matrix(self) -> sp.csc_matrix:
        return sp.bmat([[self.S, self.B.T], [self.B, None]], format="csc")

    @property
    def rhs(self) -> np.ndarray:
        return np.concatenate([self.F, np.zeros(self.dofmap.n_u)])

    def dump(self, prefix) -> None:
        """Write ``<prefix>.mtx``, ``<prefix>_rhs.mtx`` and ``<prefix>_dofs.txt``."""
        scipy.io.mmwrite(f"{prefix}.mtx", self.matrix, symmetry="symmetric")
        scipy.io.mmwrite(f"{prefix}_rhs.mtx", self.rhs[:, None])
        with open(f"{prefix}_dofs.txt", "w") as fh:
            fh.write(self.dofmap.legend())


def _scatter(rows, cols, vals, shape):
    keep = (rows >= 0) & (cols >= 0)
    mat = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=shape)
    mat.sum_duplicates()
    return mat.tocsr()


def assemble(m: Mesh, problem: ModelProblem, k: int, s: int, variant: str = "C0",
             delta: float = 1.0, quad_degree: int | None = None) -> SaddleSystem:
    """Assemble the global saddle-point system for ``problem`` on ``m``."""
    dofs = build_dof_map(m, k, s, variant)
    els = m.elements()
    quad = ElementQuadrature(els, quad_degree or 2 * k + 2)
    regions = problem.regions(m)
    boundary = m.boundary[m.triangle_edges]

    s_loc = local_stabilizer(els, problem, k, delta, variant, regions=regions, quad=quad)
    b_loc = local_b(els, problem, k, s, variant, regions=regions, quad=quad)
    f_loc = local_rhs(els, problem, k, boundary, regions=regions, quad=quad)

    embed = None
    if variant == "C0":
        embed = c0_embedding(els, k)
        s_loc = np.einsum("nta,ntu,nub->nab", embed, s_loc, embed)
        b_loc = b_loc @ embed
        f_loc = np.einsum("nta,nt->na", embed, f_loc)

    rd = dofs.rho_dofs
    ud = dofs.u_dofs
    nloc = rd.shape[1]
    S = _scatter(np.repeat(rd, nloc, axis=1).ravel(), np.tile(rd, (1, nloc)).ravel(),
                 s_loc.ravel(), (dofs.n_rho, dofs.n_rho))
    ns = ud.shape[1]
    B = _scatter(np.repeat(ud, nloc, axis=1).ravel(), np.tile(rd, (1, ns)).ravel(),
                 b_loc.ravel(), (dofs.n_u, dofs.n_rho))
    keep = rd >= 0
    F = np.bincount(rd[keep], weights=f_loc[keep], minlength=dofs.n_rho)
    return SaddleSystem(S, B, F, dofs, embed)


def local_rho(system: SaddleSystem, rho: np.ndarray) -> np.ndarray:
    """Per-element weak-triple coefficients of a global rho vector, (nt, ntriple)."""
    rd = system.dofmap.rho_dofs
    vals = np.where(rd >= 0, np.asarray(rho)[np.maximum(rd, 0)], 0.0)
    if system.embed is not None:
        vals = np.einsum("ntl,nl->nt", system.embed, vals)
    return vals
