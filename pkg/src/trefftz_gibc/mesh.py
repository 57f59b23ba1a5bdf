"""Structured triangular mesh of the annulus a < |x| < R.

Vertices sit on a polar grid (n_r + 1 radii, n_theta angles).  Every polar
cell is split into two counter-clockwise triangles along the diagonal from
(r_i, theta_j) to (r_{i+1}, theta_{j+1}).  Edges on r = a and r = R are exact
circular arcs; all other edges are straight segments (azimuthal interior edges
are chords).
"""

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

__all__ = [
    "EdgeClass",
    "Edge",
    "AnnularMesh",
    "build_annular_mesh",
    "gauss_legendre",
    "edge_quadrature",
    "default_edge_order",
    "locate_point",
    "write_mesh",
    "MESH_FORMAT_VERSION",
]

MESH_FORMAT_VERSION = 1


class EdgeClass(IntEnum):
    INTERIOR = 0
    GAMMA = 1
    SIGMA_R = 2


@dataclass(frozen=True)
class Edge:
    """Record view of one skeleton edge.

    ``normal`` is the outward unit normal of ``triangles[0]`` for straight
    edges; for arcs it is ``None`` because it varies along the edge (it is the
    radial direction there, pointing out of the element).
    """

    vertices: tuple
    cls: EdgeClass
    triangles: tuple
    normal: object
    length: float
    arc: object = None  # (radius, theta0, theta1) for boundary edges

    @property
    def is_arc(self):
        return self.arc is not None

    def __post_init__(self):
        if self.arc is not None and self.cls == EdgeClass.INTERIOR:
            raise ValueError("arc geometry is only allowed on boundary edges")


@dataclass
class AnnularMesh:
    a: float
    R: float
    n_theta: int
    n_r: int
    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3), counter-clockwise
    edge_vertices: np.ndarray  # (ne, 2)
    edge_class: np.ndarray  # (ne,)
    edge_triangles: np.ndarray  # (ne, 2); second entry -1 on the boundary
    edge_arc: np.ndarray  # (ne, 3) radius, theta0, theta1; nan for straight edges
    h: float
    radii: np.ndarray = field(repr=False)
    triangle_edges: np.ndarray = field(repr=False)  # (nt, 3)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edge_vertices)

    @property
    def centroids(self):
        return self.vertices[self.triangles].mean(axis=1)

    def edges_of(self, cls):
        return np.flatnonzero(self.edge_class == cls)

    def edge_length(self, e=None):
        idx = np.arange(self.n_edges) if e is None else np.asarray(e)
        arc = self.edge_arc[idx]
        p = self.vertices[self.edge_vertices[idx]]
        straight = np.linalg.norm(p[..., 1, :] - p[..., 0, :], axis=-1)
        curved = arc[..., 0] * np.abs(arc[..., 2] - arc[..., 1])
        return np.where(np.isnan(arc[..., 0]), straight, curved)

    def edge(self, e):
        cls = EdgeClass(int(self.edge_class[e]))
        tris = tuple(int(t) for t in self.edge_triangles[e] if t >= 0)
        arc = None
        normal = None
        if cls == EdgeClass.INTERIOR:
            normal = straight_normal(self, np.array([e]))[0]
        else:
            arc = tuple(float(v) for v in self.edge_arc[e])
        return Edge(
            tuple(int(v) for v in self.edge_vertices[e]),
            cls,
            tris,
            normal,
            float(self.edge_length(e)),
            arc,
        )

    def triangle_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def triangle_diameters(self):
        p = self.vertices[self.triangles]
        d = [np.linalg.norm(p[:, i] - p[:, j], axis=1) for i, j in ((0, 1), (1, 2), (0, 2))]
        return np.max(d, axis=0)


def build_annular_mesh(a, R, n_theta, n_r):
    """Structured polar triangulation of the annulus a < r < R."""
    a = float(a)
    R = float(R)
    if not (R > a > 0):
        raise ValueError(f"need R > a > 0, got a={a}, R={R}")
    if int(n_theta) != n_theta or n_theta < 8:
        raise ValueError(f"n_theta must be an integer >= 8, got {n_theta}")
    if int(n_r) != n_r or n_r < 2:
        raise ValueError(f"n_r must be an integer >= 2, got {n_r}")
    n_theta = int(n_theta)
    n_r = int(n_r)

    radii = np.linspace(a, R, n_r + 1)
    radii[0], radii[-1] = a, R
    dth = 2 * np.pi / n_theta
    th = dth * np.arange(n_theta)
    rr, tt = np.meshgrid(radii, th, indexing="ij")
    vertices = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1).reshape(-1, 2)

    def vid(i, j):
        return i * n_theta + (j % n_theta)

    i, j = np.meshgrid(np.arange(n_r), np.arange(n_theta), indexing="ij")
    i = i.ravel()
    j = j.ravel()
    v00, v01, v10, v11 = vid(i, j), vid(i, j + 1), vid(i + 1, j), vid(i + 1, j + 1)
    tris = np.empty((2 * len(i), 3), dtype=np.int64)
    tris[0::2] = np.stack([v00, v11, v01], axis=1)
    tris[1::2] = np.stack([v00, v10, v11], axis=1)

    # Skeleton: unique undirected edges, in order of first appearance.
    local = tris[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2)
    key = np.sort(local, axis=1)
    uniq, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(len(order))
    edge_id = remap[inverse]
    ne = len(uniq)
    edge_vertices = local[first[order]]  # oriented as in the first triangle
    edge_tris = -np.ones((ne, 2), dtype=np.int64)
    tri_of_local = np.repeat(np.arange(len(tris)), 3)
    for e, t in zip(edge_id, tri_of_local):
        if edge_tris[e, 0] < 0:
            edge_tris[e, 0] = t
        else:
            if edge_tris[e, 1] >= 0:
                raise RuntimeError("non-manifold edge")
            edge_tris[e, 1] = t
    triangle_edges = edge_id.reshape(-1, 3)

    ring = edge_vertices // n_theta
    same_ring = ring[:, 0] == ring[:, 1]
    edge_class = np.full(ne, EdgeClass.INTERIOR, dtype=np.int64)
    edge_class[same_ring & (ring[:, 0] == 0)] = EdgeClass.GAMMA
    edge_class[same_ring & (ring[:, 0] == n_r)] = EdgeClass.SIGMA_R

    edge_arc = np.full((ne, 3), np.nan)
    for e in np.flatnonzero(edge_class != EdgeClass.INTERIOR):
        ja, jb = edge_vertices[e] % n_theta
        lo = ja if (jb - ja) % n_theta == 1 else jb
        rad = a if edge_class[e] == EdgeClass.GAMMA else R
        edge_arc[e] = (rad, lo * dth, (lo + 1) * dth)

    mesh = AnnularMesh(
        a=a,
        R=R,
        n_theta=n_theta,
        n_r=n_r,
        vertices=vertices,
        triangles=tris,
        edge_vertices=edge_vertices,
        edge_class=edge_class,
        edge_triangles=edge_tris,
        edge_arc=edge_arc,
        h=0.0,
        radii=radii,
        triangle_edges=triangle_edges,
    )
    mesh.h = float(mesh.triangle_diameters().max())
    return mesh


def straight_normal(mesh, edges):
    """Outward unit normal of ``edge_triangles[e, 0]`` on straight edges."""
    p = mesh.vertices[mesh.edge_vertices[edges]]
    t = p[:, 1] - p[:, 0]
    n = np.stack([t[:, 1], -t[:, 0]], axis=1)
    n /= np.linalg.norm(n, axis=1)[:, None]
    c = mesh.centroids[mesh.edge_triangles[edges, 0]]
    flip = np.einsum("ij,ij->i", n, c - p[:, 0]) > 0
    n[flip] *= -1
    return n


_GL_CACHE = {}


def gauss_legendre(q):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    if q not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(q)
        _GL_CACHE[q] = (0.5 * (x + 1.0), 0.5 * w)
    return _GL_CACHE[q]


def default_edge_order(k, length):
    return 10 + int(np.ceil(k * length))


def edge_quadrature(mesh, edges, order):
    """Quadrature on a group of edges sharing one rule.

    Returns ``points (E, q, 2)``, ``weights (E, q)`` and ``normals (E, q, 2)``
    where the normal is the outward normal of ``edge_triangles[e, 0]``.  Arc
    edges are parameterised by angle, so the weights carry the r * dtheta
    Jacobian and sum to the arc length.
    """
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    edges = np.atleast_1d(np.asarray(edges, dtype=np.int64))
    t, w = gauss_legendre(int(order))
    arc = mesh.edge_arc[edges]
    is_arc = ~np.isnan(arc[:, 0])
    pts = np.empty((len(edges), len(t), 2))
    wts = np.empty((len(edges), len(t)))
    nrm = np.empty((len(edges), len(t), 2))

    s = ~is_arc
    if np.any(s):
        es = edges[s]
        p = mesh.vertices[mesh.edge_vertices[es]]
        d = p[:, 1] - p[:, 0]
        pts[s] = p[:, 0, None, :] + t[None, :, None] * d[:, None, :]
        wts[s] = np.linalg.norm(d, axis=1)[:, None] * w[None, :]
        nrm[s] = straight_normal(mesh, es)[:, None, :]
    if np.any(is_arc):
        r, t0, t1 = arc[is_arc].T
        th = t0[:, None] + t[None, :] * (t1 - t0)[:, None]
        radial = np.stack([np.cos(th), np.sin(th)], axis=-1)
        pts[is_arc] = r[:, None, None] * radial
        wts[is_arc] = (r * np.abs(t1 - t0))[:, None] * w[None, :]
        # Outward from the element: +r on Sigma_R, -r on Gamma.
        sign = np.where(mesh.edge_class[edges[is_arc]] == EdgeClass.GAMMA, -1.0, 1.0)
        nrm[is_arc] = sign[:, None, None] * radial
    return pts, wts, nrm


def locate_point(mesh, x, slack=1e-10):
    """Index of the (curvilinear) triangle containing each point.

    Works in O(1) per point from polar indices.  Interior layers are separated
    by chords, so the radial layer is found by projecting onto the sector
    bisector.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    r = np.hypot(x[:, 0], x[:, 1])
    tol = slack * max(1.0, mesh.R)
    if np.any((r < mesh.a - tol) | (r > mesh.R + tol)):
        raise ValueError("point outside the annulus")
    nt = mesh.n_theta
    dth = 2 * np.pi / nt
    theta = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2 * np.pi)
    j = np.minimum((theta // dth).astype(np.int64), nt - 1)
    mid = (j + 0.5) * dth
    s = r * np.cos(theta - mid)
    inner = mesh.radii[1:-1] * np.cos(0.5 * dth)
    i = np.searchsorted(inner, s, side="right")
    v00 = mesh.vertices[i * nt + j]
    v11 = mesh.vertices[(i + 1) * nt + (j + 1) % nt]
    d = v11 - v00
    q = x - v00
    cross = d[:, 0] * q[:, 1] - d[:, 1] * q[:, 0]
    tri = 2 * (i * nt + j) + np.where(cross < 0, 1, 0)
    return int(tri[0]) if single else tri


def write_mesh(mesh, path):
    """Plain-text mesh dump with vertex, triangle and edge sections."""
    with open(path, "w") as fh:
        fh.write(f"# trefftz_gibc annular mesh, format version {MESH_FORMAT_VERSION}\n")
        fh.write(f"# a={mesh.a!r} R={mesh.R!r} n_theta={mesh.n_theta} n_r={mesh.n_r} h={mesh.h!r}\n")
        fh.write(f"$Vertices {len(mesh.vertices)}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x!r} {y!r}\n")
        fh.write(f"$Triangles {mesh.n_triangles}\n")
        for t in mesh.triangles:
            fh.write(f"{t[0]} {t[1]} {t[2]}\n")
        fh.write(f"$Edges {mesh.n_edges}\n")
        fh.write("# v0 v1 class(0=interior,1=gamma,2=sigma_R) tri0 tri1\n")
        for (v0, v1), c, (t0, t1) in zip(mesh.edge_vertices, mesh.edge_class, mesh.edge_triangles):
            fh.write(f"{v0} {v1} {int(c)} {t0} {t1}\n")
        fh.write("$End\n")
