"""Weak derivatives on a single triangle.

A weak function is a triple {v0, vb, vg}: a polynomial inside the
element, a polynomial on each edge and a vector polynomial on each
edge.  The weak gradient and weak Hessian are defined by integrating by
parts against test polynomials, so the three pieces need not agree.

For w smooth, applying the weak operators to the projected triple
Q_h w gives the projection of the true derivatives.  With the C0
element, v0 must be continuous across elements, and the interpolant
used for it only reproduces the gradient identity for w in P_k.
"""
import numpy as np

from pdwg.mesh import Elements
from pdwg.weakcalc import (LocalWeakFunction, project_element, project_Qh, weak_gradient,
                           weak_hessian)

tri = Elements.from_vertices([(0.0, 0.0), (1.0, 0.2), (0.3, 0.9)])
k, s = 2, 1


def cubic(x):
    return x[..., 0] ** 3 - 2 * x[..., 0] * x[..., 1] ** 2 + x[..., 1]


def cubic_grad(x):
    return np.stack([3 * x[..., 0] ** 2 - 2 * x[..., 1] ** 2,
                     -4 * x[..., 0] * x[..., 1] + 1], -1)


def cubic_hess(x):
    xx, xy, yy = 6 * x[..., 0], -4 * x[..., 1], -4 * x[..., 0]
    return np.stack([np.stack([xx, xy], -1), np.stack([xy, yy], -1)], -1)


for variant in ("Cminus1", "C0"):
    q = project_Qh(cubic, cubic_grad, tri, k, variant)
    g_err = np.abs(weak_gradient(tri, q) - project_element(cubic_grad, tri, k - 1)).max()
    h_err = np.abs(weak_hessian(tri, q, s, variant) - project_element(cubic_hess, tri, s)).max()
    print(f"{variant:8s} cubic w: gradient mismatch {g_err:.1e}, Hessian mismatch {h_err:.1e}")

# Inconsistent triples are allowed.  An edge value alone gives a nonzero
# weak gradient whose mean over T is |e| n_e / |T|.
vb = np.zeros((3, k + 1))
vb[0, 0] = 1.0
v = LocalWeakFunction(np.zeros(6), vb, np.zeros((3, 2, k)))
mean = weak_gradient(tri, v, r=0)[0, :, 0]
expected = tri.edge_lengths[0, 0] * tri.normals[0, 0] / tri.areas[0]
print("edge bump: mean weak gradient", np.round(mean, 4), "expected", np.round(expected, 4))
