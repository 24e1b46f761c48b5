import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdwg.mesh import (DOMAINS, Mesh, element_diameter, initial_mesh, outward_normal,
                       read_mesh, refine_uniform, refined, write_mesh)

from .helpers import REF_TRIANGLE, single_triangle_mesh


def check_invariants(m: Mesh):
    assert np.all(m.signed_areas() > 0)
    assert m.triangles.min() >= 0 and m.triangles.max() < m.n_vertices
    assert m.edges.min() >= 0 and m.edges.max() < m.n_vertices
    refs = np.bincount(m.triangle_edges.ravel(), minlength=m.n_edges)
    assert np.all(refs[m.boundary] == 1)
    assert np.all(refs[~m.boundary] == 2)
    assert m.n_vertices - m.n_edges + m.n_triangles == 1
    assert np.allclose(np.linalg.norm(m.normals, axis=1), 1.0, atol=1e-14)


@pytest.mark.parametrize("domain, counts", [
    ("unit_square", (2, 5, 4)),
    ("l_shape", (6, 13, 8)),
    ("square2", (8, 16, 9)),
])
def test_initial_counts(domain, counts):
    m = initial_mesh(domain)
    assert (m.n_triangles, m.n_edges, m.n_vertices) == counts
    check_invariants(m)


def test_unknown_domain():
    with pytest.raises(ValueError):
        initial_mesh("disk")


def structured_counts(n):
    """Counts of the n x n square grid with one diagonal per cell, by enumeration."""
    verts = {(i, j) for i in range(n + 1) for j in range(n + 1)}
    edges = set()
    for i in range(n):
        for j in range(n):
            corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
            for a, b in zip(corners, corners[1:] + corners[:1]):
                edges.add(frozenset((a, b)))
            edges.add(frozenset(((i, j), (i + 1, j + 1))))
    return len(verts), len(edges), 2 * n * n


def test_refined_unit_square_counts():
    m = refined("unit_square", 6)
    V, E, T = structured_counts(32)
    assert (m.n_vertices, m.n_edges, m.n_triangles) == (V, E, T) == (1089, 3136, 2048)
    assert V - E + T == 1


@pytest.mark.parametrize("domain", DOMAINS)
def test_refinement_invariants(domain):
    parent = initial_mesh(domain)
    for _ in range(3):
        child = refine_uniform(parent)
        check_invariants(child)
        assert child.n_triangles == 4 * parent.n_triangles
        assert child.signed_areas().sum() == pytest.approx(parent.signed_areas().sum(), rel=1e-12)
        assert child.h == pytest.approx(parent.h / 2, rel=1e-12)
        # every boundary edge of the child sits on a boundary edge of the parent
        pb = parent.edges[parent.boundary]
        a, b = parent.vertices[pb[:, 0]], parent.vertices[pb[:, 1]]
        for e in np.flatnonzero(child.boundary):
            p, q = child.vertices[child.edges[e]]
            t = b - a
            cross_p = t[:, 0] * (p - a)[:, 1] - t[:, 1] * (p - a)[:, 0]
            cross_q = t[:, 0] * (q - a)[:, 1] - t[:, 1] * (q - a)[:, 0]
            proj_p = np.einsum("ij,ij->i", p - a, t) / np.einsum("ij,ij->i", t, t)
            proj_q = np.einsum("ij,ij->i", q - a, t) / np.einsum("ij,ij->i", t, t)
            on = (np.abs(cross_p) < 1e-12) & (np.abs(cross_q) < 1e-12) \
                & (proj_p > -1e-12) & (proj_p < 1 + 1e-12) & (proj_q > -1e-12) & (proj_q < 1 + 1e-12)
            assert on.any()
        parent = child


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_square2_alignment(level):
    m = refined("square2", level)
    v = m.vertices[m.triangles]
    for axis in range(2):
        c = v[..., axis]
        assert np.all((c.min(axis=1) >= -1e-14) | (c.max(axis=1) <= 1e-14))


def test_element_diameter_examples():
    assert element_diameter(single_triangle_mesh(REF_TRIANGLE), 0) == pytest.approx(math.sqrt(2))
    equi = [(0, 0), (1, 0), (0.5, math.sqrt(3) / 2)]
    assert element_diameter(single_triangle_mesh(equi), 0) == pytest.approx(1.0)
    assert element_diameter(single_triangle_mesh([(0, 0), (2, 0), (0, 1)]), 0) \
        == pytest.approx(math.sqrt(5))


def test_outward_normal_examples():
    m = single_triangle_mesh(REF_TRIANGLE)
    for e in range(3):
        a, b = m.edges[e]
        mid = 0.5 * (m.vertices[a] + m.vertices[b])
        n = outward_normal(m, 0, e)
        if np.isclose(mid[1], 0.0):
            assert np.allclose(n, (0, -1), atol=1e-15)
        elif np.isclose(mid.sum(), 1.0):
            assert np.allclose(n, (1 / math.sqrt(2), 1 / math.sqrt(2)), atol=1e-15)
        else:
            assert np.allclose(n, (-1, 0), atol=1e-15)


def test_normal_orientation_interior():
    m = refined("l_shape", 2)
    cent = m.centroids()
    for e in np.flatnonzero(~m.boundary):
        mid = m.vertices[m.edges[e]].mean(axis=0)
        left, right = m.edge_left[e], m.edge_right[e]
        assert np.dot(m.normals[e], mid - cent[left]) > 0
        assert np.dot(m.normals[e], mid - cent[right]) < 0
        assert np.allclose(outward_normal(m, right, e), -m.normals[e])
    t = int(m.edge_left[0])
    foreign = int(np.setdiff1d(np.arange(m.n_edges), m.triangle_edges[t])[0])
    with pytest.raises(ValueError):
        outward_normal(m, t, foreign)


def test_edge_record():
    m = initial_mesh("unit_square")
    interior = int(np.flatnonzero(~m.boundary)[0])
    rec = m.edge(interior)
    assert not rec.is_boundary and rec.right_tri is not None
    rec = m.edge(int(np.flatnonzero(m.boundary)[0]))
    assert rec.is_boundary and rec.right_tri is None


def test_edge_numbering_independent_of_triangle_order():
    m = refined("square2", 2)
    perm = np.random.default_rng(0).permutation(m.n_triangles)
    p = Mesh(m.vertices, m.triangles[perm])
    assert np.array_equal(p.edges, m.edges)
    assert np.array_equal(p.normals, m.normals)


def test_invalid_triangles():
    with pytest.raises(ValueError):
        Mesh([(0, 0), (1, 0), (0, 1)], [(0, 2, 1)])
    with pytest.raises(ValueError):
        Mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 3)])


def test_io_round_trip(tmp_path):
    m = refined("l_shape", 2)
    path = tmp_path / "mesh.txt"
    write_mesh(m, path)
    r = read_mesh(path)
    assert np.array_equal(r.vertices, m.vertices)
    assert np.array_equal(r.triangles, m.triangles)
    assert np.array_equal(r.edges, m.edges)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2))
def test_affine_meshes_keep_invariants(scale, dx, dy, level):
    base = refined("square2", level + 1)
    m = Mesh(base.vertices * scale + (dx, dy), base.triangles)
    check_invariants(m)
    assert np.allclose(m.diameters(), base.diameters() * scale, rtol=1e-12)
