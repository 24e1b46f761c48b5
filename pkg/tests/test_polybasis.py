from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdwg.polybasis import (EdgeBasis, TriBasis, basis_for, dim_p, eval_basis, eval_grad,
                            eval_hess, legendre_norms, mass_matrix, monomial_exponents,
                            quad_edge, quad_triangle)
from pdwg.weakcalc import eval_element_poly, project_edge, project_element

from .helpers import REF_TRIANGLE, random_triangle


def ref_moment(a, b):
    """Integral of x^a y^b over the reference triangle."""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def test_dimension_and_exponents():
    for k in range(6):
        assert dim_p(k) == (k + 1) * (k + 2) // 2 == len(monomial_exponents(k))
    assert monomial_exponents(2).tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]


def test_triangle_quadrature_examples():
    q = quad_triangle(6)
    x, y = q.points.T
    assert q.weights.sum() == pytest.approx(0.5, abs=1e-14)
    assert np.dot(q.weights, x) == pytest.approx(1 / 6, abs=1e-14)
    assert np.dot(q.weights, x ** 2 * y ** 2) == pytest.approx(1 / 180, abs=1e-14)


@pytest.mark.parametrize("degree", [0, 1, 2, 4, 6, 8, 11, 16])
def test_triangle_quadrature_exactness(degree):
    q = quad_triangle(degree)
    x, y = q.points.T
    assert np.all(q.weights > 0)
    assert np.all((x >= 0) & (y >= 0) & (x + y <= 1))
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            assert np.dot(q.weights, x ** a * y ** b) == pytest.approx(ref_moment(a, b), abs=1e-12)


@pytest.mark.parametrize("degree", [0, 1, 3, 8, 15])
def test_edge_quadrature_exactness(degree):
    q = quad_edge(degree)
    assert q.weights.sum() == pytest.approx(2.0, abs=1e-14)
    for p in range(degree + 1):
        exact = 0.0 if p % 2 else 2.0 / (p + 1)
        assert np.dot(q.weights, q.points ** p) == pytest.approx(exact, abs=1e-12)


def test_unsupported_degree():
    with pytest.raises(ValueError):
        quad_triangle(41)
    with pytest.raises(ValueError):
        quad_edge(-1)


def test_eval_examples():
    p = np.array([0.3, 0.4])
    assert eval_basis(TriBasis(0, (0.0, 0.0), 1.0), p).tolist() == [1.0]
    assert np.allclose(eval_basis(TriBasis(1, (0.0, 0.0), 1.0), p), [1, 0.3, 0.4])
    b = TriBasis(2, (0.2, -0.1), 0.5)
    hess = eval_hess(b, p)
    # phi_3 = ((x - x_T) / h)^2
    assert hess[3, 0, 0] == pytest.approx(2 / 0.25)
    assert hess[3, 0, 1] == hess[3, 1, 0] == hess[3, 1, 1] == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 4), st.integers(0, 2 ** 32 - 1))
def test_derivatives_match_finite_differences(k, seed):
    rng = np.random.default_rng(seed)
    b = TriBasis(k, tuple(rng.uniform(-1, 1, 2)), float(rng.uniform(0.3, 2.0)))
    p = rng.uniform(-1, 1, 2)
    step = 1e-6
    e = np.eye(2) * step
    fd_grad = np.stack([(eval_basis(b, p + e[i]) - eval_basis(b, p - e[i])) / (2 * step)
                        for i in range(2)], axis=-1)
    grad = eval_grad(b, p)
    assert np.allclose(grad, fd_grad, rtol=1e-6, atol=1e-6 * max(1.0, np.abs(grad).max()))
    fd_hess = np.stack([(eval_grad(b, p + e[i]) - eval_grad(b, p - e[i])) / (2 * step)
                        for i in range(2)], axis=-1)
    hess = eval_hess(b, p)
    assert np.allclose(hess, fd_hess, rtol=1e-6, atol=1e-6 * max(1.0, np.abs(hess).max()))


def test_mass_matrix_examples():
    tri = np.array([(0.0, 0.0), (2.0, 0.0), (0.5, 1.5)])
    m0 = mass_matrix(basis_for(tri, 0), tri)
    assert m0 == pytest.approx(np.array([[1.5]]), abs=1e-14)
    seg = np.array([(0.0, 0.0), (3.0, 4.0)])
    me = mass_matrix(EdgeBasis(4), seg)
    assert np.allclose(me, np.diag(5.0 / (2 * np.arange(5) + 1)), atol=1e-12)
    assert np.allclose(legendre_norms(3), 2 / np.array([1, 3, 5, 7]))


def test_mass_conditioning_is_h_independent():
    conds = []
    for scale in (1.0, 1e-2, 1e-4):
        tri = REF_TRIANGLE * scale
        mm = mass_matrix(basis_for(tri, 2), tri)
        assert np.all(np.linalg.eigvalsh(mm) > 0)
        conds.append(np.linalg.cond(mm))
    assert max(conds) <= 1e3
    assert np.allclose(conds, conds[0], rtol=1e-6)


def test_degenerate_mass_matrix():
    tri = np.array([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])
    with pytest.raises(ValueError):
        mass_matrix(TriBasis(1, (1.0, 0.0), 2.0), tri)


def test_project_constant_and_x_squared():
    tri = REF_TRIANGLE[None]
    c = project_element(lambda x: np.full(x.shape[:-1], 2.5), tri, 3)
    assert np.allclose(c[0], [2.5] + [0] * 9, atol=1e-12)

    # independent oracle in the plain monomial basis {1, x, y}
    exps = [(0, 0), (1, 0), (0, 1)]
    M = np.array([[ref_moment(a + c, b + d) for (c, d) in exps] for (a, b) in exps])
    rhs = np.array([ref_moment(a + 2, b) for (a, b) in exps])
    coef = np.linalg.solve(M, rhs)
    proj = project_element(lambda x: x[..., 0] ** 2, tri, 1)
    pts = np.random.default_rng(1).dirichlet([1, 1, 1], 20)[:, :2]
    ours = eval_element_poly(proj, tri, points=pts[None])[0]
    oracle = coef[0] + coef[1] * pts[:, 0] + coef[2] * pts[:, 1]
    assert np.allclose(ours, oracle, atol=1e-13)


def test_project_edge_examples():
    start, stop = np.array([0.0, 0.0]), np.array([2.0, 0.0])
    c = project_edge(lambda x: np.full(x.shape[:-1], -1.5), start, stop, 2)
    assert np.allclose(c, [-1.5, 0, 0], atol=1e-14)
    # t is odd about the midpoint, so its P_0 projection is the midpoint value 0
    c = project_edge(lambda x: x[..., 0] - 1.0, start, stop, 0)
    assert np.allclose(c, [0.0], atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 4), st.integers(0, 2 ** 32 - 1))
def test_projection_round_trip(k, seed):
    rng = np.random.default_rng(seed)
    tri = random_triangle(rng)
    coef = rng.normal(size=dim_p(k))
    exps = monomial_exponents(k)

    def p(x):
        return sum(c * x[..., 0] ** a * x[..., 1] ** b for c, (a, b) in zip(coef, exps))

    proj = project_element(p, tri[None], k)
    pts = rng.dirichlet([1, 1, 1], 20) @ tri
    assert np.allclose(eval_element_poly(proj, tri[None], points=pts[None])[0], p(pts),
                       atol=1e-11 * max(1.0, np.abs(coef).sum()))
