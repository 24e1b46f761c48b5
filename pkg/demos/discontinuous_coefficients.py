"""Diffusion tensors that jump across the coordinate axes.

Three problems on (-1, 1)^2, all with interfaces aligned to the mesh:

* alpha = 1 / 2 left / right of x1 = 0, no drift, piecewise constant
  data: the piecewise constant density {2, 1} is reproduced exactly;
* the same split with load 9 sin(3 x2): second order L2 convergence;
* alpha = 1 / 10 in alternating quadrants with drift (1, 1): no exact
  solution, so the solution is written out for plotting.

Run:  python demos/discontinuous_coefficients.py [outdir]
"""
import os
import sys

import numpy as np

from pdwg import assemble, catalog, refined, run_convergence, solve_saddle
from pdwg.study import emit_field

outdir = sys.argv[1] if len(sys.argv) > 1 else "demo_output"
os.makedirs(outdir, exist_ok=True)

problem = catalog("case_disc_const")
for level in (1, 3, 5):
    m = refined("square2", level)
    sol = solve_saddle(assemble(m, problem, 2, 1, "C0"))
    target = np.where(problem.regions(m) == 0, 2.0, 1.0)
    print(f"piecewise constant, {m.n_triangles:5d} triangles: "
          f"max |u_h - u| = {np.abs(sol.u[:, 0] - target).max():.1e}")

report = run_convergence("case_disc_sine", k=2, s=1, levels=5)
rates = report.orders("l2_exact")
for row, rate in zip(report.rows, rates):
    print(f"sine load, 1/h = {row.inv_h:2d}: L2 error {row.l2_exact:.3e}  rate {rate:.2f}")

m = refined("square2", 5)
sol = solve_saddle(assemble(m, catalog("case_quadrant"), 2, 1, "C0"))
path = os.path.join(outdir, "quadrant.vtk")
emit_field(sol, m, path, "vtk_legacy")
print(f"quadrant problem: u_h in [{sol.u[:, 0].min():.4f}, {sol.u[:, 0].max():.4f}], wrote {path}")
