"""Convergence studies: error norms, refinement loop, table and field output."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import Mesh, refined
from .polybasis import dim_p, element_scale, legendre_norms, quad_triangle, scaled_monomials
from .problems import ModelProblem, catalog, nodal_interpolant
from .solver import SolutionPair, solve_saddle
from .system import SaddleSystem, assemble, local_rho
from .weakcalc import local_layout

TABLE_COLUMNS = ("inv_h", "rho0", "rho0_order", "rhog1", "rhog1_order", "u_err", "u_order")


@dataclass
class ErrorRow:
    inv_h: int
    norm_rho0: float
    norm_rhog1: float
    norm_u: float | None = None          # ||u_h - I_h u||
    l2_exact: float | None = None        # ||u_h - u||, region-aware
    residual: float = float("nan")
    n_dofs: int = 0


@dataclass
class ErrorReport:
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def column(self, name) -> np.ndarray:
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name)
                         for r in self.rows], dtype=float)

    def orders(self, name) -> np.ndarray:
        """log2 of consecutive error ratios; NaN for the first row."""
        e = self.column(name)
        out = np.full(len(e), np.nan)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[1:] = np.log2(e[:-1] / e[1:])
        return out


def element_quadrature(m: Mesh, degree: int):
    q = quad_triangle(degree)
    v = m.vertices[m.triangles]
    x = v[:, None, 0] + q.points[None, :, :1] * (v[:, None, 1] - v[:, None, 0]) \
        + q.points[None, :, 1:] * (v[:, None, 2] - v[:, None, 0])
    w = 2.0 * m.signed_areas()[:, None] * q.weights
    return x, w


def eval_primal(m: Mesh, coeffs, points) -> np.ndarray:
    """Evaluate per-element P_s coefficients at points of shape (nt, nq, 2)."""
    coeffs = np.asarray(coeffs)
    s = int(round((math.sqrt(8 * coeffs.shape[1] + 1) - 3) / 2))
    phi = scaled_monomials(points, m.centroids()[:, None], element_scale(m.diameters())[:, None], s)
    return np.einsum("nqa,na->nq", phi, coeffs)


def compute_norms(sol: SolutionPair, system: SaddleSystem, problem: ModelProblem, m: Mesh,
                  s: int | None = None, quad_degree: int | None = None) -> ErrorRow:
    """|||rho|||_0, |||rho_g|||_1 and ||u_h - I_h u|| for one solution."""
    dm = system.dofmap
    k = dm.k
    s = dm.s if s is None else s
    qd = quad_degree or 2 * k + 4
    trip = local_rho(system, sol.rho)
    n0, nb, ng = local_layout(k)

    x, w = element_quadrature(m, qd)
    rho0 = eval_primal(m, trip[:, :n0], x)
    norm_rho0 = math.sqrt(float(np.sum(w * rho0 ** 2)))

    # <P_m, P_n>_e = L * delta_mn / (2m + 1)
    vg = trip[:, n0 + nb:].reshape(-1, 3, 2, k)
    lengths = m.edge_lengths[m.triangle_edges]
    per_edge = np.einsum("neim,m->ne", vg ** 2, 0.5 * legendre_norms(k - 1)) * lengths
    norm_rhog1 = math.sqrt(float(np.sum(m.diameters() * per_edge.sum(axis=1))))

    row = ErrorRow(inv_h=0, norm_rho0=norm_rho0, norm_rhog1=norm_rhog1,
                   residual=sol.residual_norm, n_dofs=dm.n_total)
    if problem.exact is not None:
        regions = problem.regions(m)
        ih = nodal_interpolant(problem.exact, m, s, regions)
        diff = eval_primal(m, sol.u - ih, x)
        row.norm_u = math.sqrt(float(np.sum(w * diff ** 2)))
        xe, we = element_quadrature(m, max(qd, 12))
        err = eval_primal(m, sol.u, xe) - problem.exact(xe, regions[:, None])
        row.l2_exact = math.sqrt(float(np.sum(we * err ** 2)))
    return row


def solve_level(problem: ModelProblem, m: Mesh, k: int, s: int, variant: str,
                delta: float, quad_degree: int | None = None):
    system = assemble(m, problem, k, s, variant, delta, quad_degree)
    return system, solve_saddle(system)


def run_convergence(case, k: int = 2, s: int = 1, variant: str = "C0", delta: float = 1.0,
                    levels: int = 5, domain: str | None = None,
                    quad_degree: int | None = None, dump_prefix: str | None = None,
                    keep_last: bool = False) -> ErrorReport:
    """Assemble, solve and measure on ``levels`` uniformly refined meshes.

    ``case`` is a catalog id or a :class:`ModelProblem`.  Level ``L`` has
    ``1/h = 2**(L-1)`` relative to the initial mesh.
    """
    if levels < 2:
        raise ValueError("a convergence study needs at least 2 levels")
    problem = catalog(case) if isinstance(case, str) else case
    domain = domain or problem.domain
    report = ErrorReport(meta=dict(case=problem.name, k=k, s=s, variant=variant,
                                   delta=delta, levels=levels, domain=domain))
    for level in range(1, levels + 1):
        m = refined(domain, level)
        system, sol = solve_level(problem, m, k, s, variant, delta, quad_degree)
        if dump_prefix:
            system.dump(f"{dump_prefix}_L{level}")
        row = compute_norms(sol, system, problem, m, s)
        row.inv_h = 2 ** (level - 1)
        report.rows.append(row)
        if keep_last and level == levels:
            report.meta["last"] = (m, system, sol)
    return report


def emit_table(report: ErrorReport, fmt: str = "csv") -> str:
    """Render the report as CSV or a markdown table."""
    lines = []
    o_rho0 = report.orders("norm_rho0")
    o_rhog = report.orders("norm_rhog1")
    o_u = report.orders("norm_u")

    def err(v):
        return "" if v is None or not np.isfinite(v) else f"{v:.2e}"

    def order(v):
        return "" if not np.isfinite(v) else f"{v:.2f}"

    for i, r in enumerate(report.rows):
        lines.append([str(r.inv_h), err(r.norm_rho0), order(o_rho0[i]), err(r.norm_rhog1),
                      order(o_rhog[i]), err(r.norm_u), order(o_u[i])])
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        writer.writerows(lines)
        return buf.getvalue()
    if fmt == "markdown":
        out = ["| " + " | ".join(TABLE_COLUMNS) + " |",
               "|" + "---|" * len(TABLE_COLUMNS)]
        out += ["| " + " | ".join(cells) + " |" for cells in lines]
        return "\n".join(out) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")


def _vertex_values(sol: SolutionPair, m: Mesh) -> np.ndarray:
    return eval_primal(m, sol.u, m.vertices[m.triangles])              # (nt, 3)


def emit_field(sol: SolutionPair, m: Mesh, path, fmt: str = "vtk_legacy") -> None:
    """Write u_h for plotting.

    Piecewise constants go out as VTK cell data.  Piecewise linears are
    discontinuous, so every element-vertex incidence gets its own point.
    """
    s = int(round((math.sqrt(8 * sol.u.shape[1] + 1) - 3) / 2))
    vals = _vertex_values(sol, m)
    nt = m.n_triangles
    with open(path, "w") as fh:
        if fmt == "csv_points":
            fh.write("element,x,y,u\n")
            pts = m.vertices[m.triangles]
            for t in range(nt):
                for j in range(3):
                    x, y = (float(c) for c in pts[t, j])
                    fh.write(f"{t},{x!r},{y!r},{float(vals[t, j])!r}\n")
            return
        if fmt != "vtk_legacy":
            raise ValueError(f"unknown field format {fmt!r}")
        fh.write("# vtk DataFile Version 3.0\npdwg primal solution\nASCII\n"
                 "DATASET UNSTRUCTURED_GRID\n")
        if s == 0:
            points, cells = m.vertices, m.triangles
        else:
            points = m.vertices[m.triangles].reshape(-1, 2)
            cells = np.arange(3 * nt).reshape(nt, 3)
        fh.write(f"POINTS {len(points)} double\n")
        for x, y in points:
            fh.write(f"{float(x)!r} {float(y)!r} 0.0\n")
        fh.write(f"CELLS {nt} {4 * nt}\n")
        for a, b, c in cells:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"CELL_TYPES {nt}\n" + "5\n" * nt)
        if s == 0:
            fh.write(f"CELL_DATA {nt}\nSCALARS u_h double 1\nLOOKUP_TABLE default\n")
            for v in sol.u[:, 0]:
                fh.write(f"{float(v)!r}\n")
        else:
            fh.write(f"POINT_DATA {3 * nt}\nSCALARS u_h double 1\nLOOKUP_TABLE default\n")
            for v in vals.ravel():
                fh.write(f"{float(v)!r}\n")
