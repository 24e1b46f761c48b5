"""Convergence of the C0 P2/[P1]^2/P1 element on a smooth problem.

The exact density is u = sin(x1) sin(x2) on the unit square with the
constant diffusion tensor [[3, 1], [1, 2]] and drift (1, 1).  Each
level halves h; the columns are the two dual norms and the primal
error against the nodal interpolant, with log2 rates.

Run:  python demos/smooth_convergence.py [levels]
"""
import sys
import time

from pdwg import emit_table, run_convergence

levels = int(sys.argv[1]) if len(sys.argv) > 1 else 5

for s in (1, 0):
    t0 = time.perf_counter()
    report = run_convergence("case_const", k=2, s=s, variant="C0", delta=1.0, levels=levels)
    print(f"\nP2/[P1]^2/P{s}, {time.perf_counter() - t0:.1f} s")
    print(emit_table(report, "markdown"))

# The primal rate is s + 1: 2 for the P1 primal space, 1 for P0.
# rho_h approximates the trivial dual solution 0, so its norms measure
# consistency and decay faster than the primal error.
