"""Triangular meshes of polygonal 2D domains.

A :class:`Mesh` stores vertices, counterclockwise triangles and a
canonical edge list.  Edges are sorted by their vertex pair so that the
edge numbering does not depend on the order in which triangles are
listed.  Every edge carries one unit normal; it points out of the
``left`` triangle (the triangle whose counterclockwise boundary walks the
edge from ``endpoints[0]`` to ``endpoints[1]``) and into the ``right``
one.  Boundary edges only have a left triangle, so their normal is the
outward normal of the domain.

Local edge ``i`` of a triangle ``(v0, v1, v2)`` joins ``v_i`` and
``v_{i+1 mod 3}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

MESH_HEADER = "pdwg-mesh v1"

DOMAINS = ("unit_square", "l_shape", "square2")


class Edge(NamedTuple):
    endpoints: tuple[int, int]
    left_tri: int
    right_tri: int | None
    is_boundary: bool
    unit_normal: np.ndarray


class Mesh:
    """Conforming triangulation with edge adjacency.

    Parameters
    ----------
    vertices : array_like, shape (nv, 2)
    triangles : array_like of int, shape (nt, 3)
        Vertex indices in counterclockwise order.

    Raises
    ------
    ValueError
        If a triangle is degenerate or clockwise, an index is out of
        range, or an edge is shared by more than two triangles.
    """

    def __init__(self, vertices, triangles):
        self.vertices = np.array(vertices, dtype=float).reshape(-1, 2)
        self.triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)
        nv = len(self.vertices)
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= nv):
            raise ValueError("triangle vertex index out of range")
        if np.any(self.signed_areas() <= 0.0):
            raise ValueError("triangles must have positive signed area")
        self._build_edges()

    def _build_edges(self):
        tri = self.triangles
        nt = len(tri)
        # local edge i runs tri[i] -> tri[i+1]
        start = tri.reshape(-1)
        stop = tri[:, [1, 2, 0]].reshape(-1)
        lo = np.minimum(start, stop)
        hi = np.maximum(start, stop)
        pairs, inverse, counts = np.unique(
            np.stack([lo, hi], axis=1), axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        if np.any(counts > 2):
            raise ValueError("non-manifold mesh: an edge is shared by more than two triangles")
        ne = len(pairs)
        owner = np.repeat(np.arange(nt), 3)
        forward = start < stop  # walks lo -> hi

        left = np.full(ne, -1, dtype=np.int64)
        right = np.full(ne, -1, dtype=np.int64)
        endpoints = pairs.copy()
        for idx in range(3 * nt):
            e = inverse[idx]
            if counts[e] == 1:
                left[e] = owner[idx]
                endpoints[e] = (start[idx], stop[idx])
            elif forward[idx]:
                if left[e] >= 0:
                    raise ValueError("inconsistent orientation between neighbouring triangles")
                left[e] = owner[idx]
            else:
                if right[e] >= 0:
                    raise ValueError("inconsistent orientation between neighbouring triangles")
                right[e] = owner[idx]

        self.edges = endpoints
        self.edge_left = left
        self.edge_right = right
        self.boundary = counts == 1
        tangent = self.vertices[endpoints[:, 1]] - self.vertices[endpoints[:, 0]]
        length = np.linalg.norm(tangent, axis=1)
        self.edge_lengths = length
        self.normals = np.stack([tangent[:, 1], -tangent[:, 0]], axis=1) / length[:, None]
        self.triangle_edges = inverse.reshape(nt, 3)
        # +1 when the local traversal agrees with the stored edge direction
        local_start = tri.reshape(-1)
        self.triangle_edge_signs = np.where(
            endpoints[inverse, 0] == local_start, 1, -1).reshape(nt, 3)
        for arr in (self.edges, self.edge_left, self.edge_right, self.boundary,
                    self.normals, self.edge_lengths, self.triangle_edges,
                    self.triangle_edge_signs):
            arr.setflags(write=False)

    # ------------------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge(self, e: int) -> Edge:
        right = int(self.edge_right[e])
        return Edge(
            endpoints=(int(self.edges[e, 0]), int(self.edges[e, 1])),
            left_tri=int(self.edge_left[e]),
            right_tri=None if right < 0 else right,
            is_boundary=bool(self.boundary[e]),
            unit_normal=self.normals[e].copy(),
        )

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def diameters(self) -> np.ndarray:
        """Longest side of every triangle."""
        return self.edge_lengths[self.triangle_edges].max(axis=1)

    @property
    def h(self) -> float:
        return float(self.diameters().max())

    def elements(self, which=None) -> "Elements":
        """Batched element geometry for all (or the selected) triangles."""
        idx = np.arange(self.n_triangles) if which is None else np.atleast_1d(which)
        tri_edges = self.triangle_edges[idx]
        sign = self.triangle_edge_signs[idx]
        return Elements(
            vertices=self.vertices[self.triangles[idx]],
            edge_start=self.vertices[self.edges[tri_edges, 0]],
            edge_stop=self.vertices[self.edges[tri_edges, 1]],
            normals=self.normals[tri_edges] * sign[..., None],
            edge_index=tri_edges,
            edge_sign=sign,
        )


def element_diameter(m: Mesh, t: int) -> float:
    """Diameter ``h_T`` of triangle ``t``, taken as its longest side."""
    return float(m.edge_lengths[m.triangle_edges[t]].max())


def outward_normal(m: Mesh, t: int, e: int) -> np.ndarray:
    """Unit normal of edge ``e`` pointing out of triangle ``t``."""
    if m.edge_left[e] == t:
        return m.normals[e].copy()
    if m.edge_right[e] == t:
        return -m.normals[e]
    raise ValueError(f"edge {e} is not an edge of triangle {t}")


@dataclass(frozen=True)
class Elements:
    """Geometry of a batch of triangles, ready for quadrature.

    ``edge_start``/``edge_stop`` give every local edge in the direction of
    its global parametrisation, so edge polynomials are single valued;
    ``normals`` are outward for the owning triangle.
    """

    vertices: np.ndarray     # (n, 3, 2)
    edge_start: np.ndarray   # (n, 3, 2)
    edge_stop: np.ndarray    # (n, 3, 2)
    normals: np.ndarray      # (n, 3, 2)
    edge_index: np.ndarray | None = None
    edge_sign: np.ndarray | None = None

    @classmethod
    def from_vertices(cls, vertices) -> "Elements":
        """Standalone triangles, each edge oriented along the ccw boundary."""
        v = np.array(vertices, dtype=float)
        if v.ndim == 2:
            v = v[None]
        start = v
        stop = v[:, [1, 2, 0]]
        t = stop - start
        n = np.stack([t[..., 1], -t[..., 0]], axis=-1)
        n /= np.linalg.norm(n, axis=-1, keepdims=True)
        d1 = v[:, 1] - v[:, 0]
        d2 = v[:, 2] - v[:, 0]
        if np.any(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] <= 0):
            raise ValueError("triangles must be counterclockwise and non-degenerate")
        return cls(v, start.copy(), stop, n)

    def __len__(self):
        return len(self.vertices)

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices.mean(axis=1)

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edge_stop - self.edge_start, axis=-1)

    @property
    def diameters(self) -> np.ndarray:
        return self.edge_lengths.max(axis=1)

    @property
    def areas(self) -> np.ndarray:
        d1 = self.vertices[:, 1] - self.vertices[:, 0]
        d2 = self.vertices[:, 2] - self.vertices[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def map_points(self, ref_points) -> np.ndarray:
        """Reference-triangle points to physical points, shape (n, nq, 2)."""
        v = self.vertices
        ref = np.asarray(ref_points)
        return (v[:, None, 0] + ref[None, :, 0, None] * (v[:, None, 1] - v[:, None, 0])
                + ref[None, :, 1, None] * (v[:, None, 2] - v[:, None, 0]))

    def edge_points(self, t) -> np.ndarray:
        """Points at parameters ``t`` in [-1, 1] on every edge, shape (n, 3, nq, 2)."""
        t = np.asarray(t)
        a = self.edge_start[:, :, None]
        b = self.edge_stop[:, :, None]
        return 0.5 * (a + b) + 0.5 * t[None, None, :, None] * (b - a)


def initial_mesh(domain_id: str) -> Mesh:
    """Coarse triangulation of one of the built-in domains.

    ``unit_square`` is (0,1)^2 cut by one diagonal, ``square2`` is
    (-1,1)^2 cut along both axes with every quadrant split by the
    diagonal through the origin, and ``l_shape`` is the three unit
    squares of the L with corners (0,0), (2,0), (2,1), (1,1), (1,2), (0,2).
    """
    if domain_id == "unit_square":
        v = [(0, 0), (1, 0), (1, 1), (0, 1)]
        t = [(0, 1, 2), (0, 2, 3)]
    elif domain_id == "l_shape":
        v = [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1), (0, 2), (1, 2)]
        t = [(0, 1, 4), (0, 4, 3),
             (1, 2, 5), (1, 5, 4),
             (3, 4, 7), (3, 7, 6)]
    elif domain_id == "square2":
        v = [(-1, -1), (0, -1), (1, -1),
             (-1, 0), (0, 0), (1, 0),
             (-1, 1), (0, 1), (1, 1)]
        t = [(4, 5, 8), (4, 8, 7),   # first quadrant
             (4, 7, 6), (4, 6, 3),   # second
             (4, 3, 0), (4, 0, 1),   # third
             (4, 1, 2), (4, 2, 5)]   # fourth
    else:
        raise ValueError(f"unknown domain {domain_id!r}; expected one of {DOMAINS}")
    return Mesh(v, t)


def refine_uniform(m: Mesh) -> Mesh:
    """Split every triangle into four congruent children via edge midpoints."""
    nv = m.n_vertices
    mid = 0.5 * (m.vertices[m.edges[:, 0]] + m.vertices[m.edges[:, 1]])
    verts = np.vstack([m.vertices, mid])
    a, b, c = m.triangles.T
    m01, m12, m20 = (nv + m.triangle_edges).T
    children = np.stack([
        np.stack([a, m01, m20], axis=1),
        np.stack([m01, b, m12], axis=1),
        np.stack([m20, m12, c], axis=1),
        np.stack([m01, m12, m20], axis=1),
    ], axis=1).reshape(-1, 3)
    return Mesh(verts, children)


def refined(domain_id: str, level: int) -> Mesh:
    """Mesh at refinement ``level`` (level 1 is the initial mesh)."""
    m = initial_mesh(domain_id)
    for _ in range(level - 1):
        m = refine_uniform(m)
    return m


def write_mesh(m: Mesh, path) -> None:
    with open(path, "w") as fh:
        fh.write(MESH_HEADER + "\n")
        fh.write(f"vertices {m.n_vertices}\n")
        for x, y in m.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        fh.write(f"triangles {m.n_triangles}\n")
        for a, b, c in m.triangles:
            fh.write(f"{a} {b} {c}\n")
        fh.write(f"edges {m.n_edges}\n")
        for (a, b), flag in zip(m.edges, m.boundary):
            fh.write(f"{a} {b} {int(flag)}\n")


def read_mesh(path) -> Mesh:
    """Read the plain-text mesh format written by :func:`write_mesh`.

    The edge section is optional; when present it must agree with the
    topology rebuilt from the triangles.
    """
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != MESH_HEADER:
        raise ValueError(f"missing {MESH_HEADER!r} header")
    pos = 1

    def section(name):
        nonlocal pos
        key, count = lines[pos].split()
        if key != name:
            raise ValueError(f"expected section {name!r}, found {key!r}")
        count = int(count)
        rows = [ln.split() for ln in lines[pos + 1:pos + 1 + count]]
        if len(rows) != count:
            raise ValueError(f"section {name!r} is truncated")
        pos += count + 1
        return rows

    verts = np.array(section("vertices"), dtype=float)
    tris = np.array(section("triangles"), dtype=np.int64)
    m = Mesh(verts, tris)
    if pos < len(lines):
        rows = np.array(section("edges"), dtype=np.int64).reshape(-1, 3)
        given = {(min(a, b), max(a, b)): bool(f) for a, b, f in rows}
        built = {(int(min(a, b)), int(max(a, b))): bool(f)
                 for (a, b), f in zip(m.edges, m.boundary)}
        if given != built:
            raise ValueError("edge section does not match the triangles")
    return m
