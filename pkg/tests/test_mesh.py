import math

import numpy as np
import pytest
import shapely
from hypothesis import given
from hypothesis import strategies as st
from shapely.geometry import Point, Polygon

from trefftz_gibc.mesh import (
    EdgeClass,
    build_annular_mesh,
    edge_quadrature,
    gauss_legendre,
    locate_point,
    write_mesh,
)


@pytest.fixture(scope="module")
def mesh():
    return build_annular_mesh(0.5, 1.0, 24, 4)


def test_counts(mesh):
    nt, nr = 24, 4
    assert mesh.n_triangles == 2 * nt * nr
    assert len(mesh.vertices) == nt * (nr + 1)
    # Euler characteristic of the annulus is zero
    assert len(mesh.vertices) - mesh.n_edges + mesh.n_triangles == 0
    assert len(mesh.edges_of(EdgeClass.GAMMA)) == nt
    assert len(mesh.edges_of(EdgeClass.SIGMA_R)) == nt


def test_orientation_and_area(mesh):
    areas = mesh.triangle_areas()
    assert np.all(areas > 0)
    # straight triangles fill the inscribed polygonal annulus
    poly = 0.5 * 24 * math.sin(2 * math.pi / 24)
    np.testing.assert_allclose(areas.sum(), poly * (1.0 - 0.25), rtol=1e-12)


def test_edge_connectivity(mesh):
    interior = mesh.edge_class == EdgeClass.INTERIOR
    assert np.all(mesh.edge_triangles[interior] >= 0)
    assert np.all(mesh.edge_triangles[~interior, 1] == -1)
    for t, edges in enumerate(mesh.triangle_edges):
        for e in edges:
            assert t in mesh.edge_triangles[e]


def test_arc_lengths(mesh):
    L = mesh.edge_length()
    np.testing.assert_allclose(L[mesh.edges_of(EdgeClass.GAMMA)].sum(), 2 * math.pi * 0.5, rtol=1e-13)
    np.testing.assert_allclose(L[mesh.edges_of(EdgeClass.SIGMA_R)].sum(), 2 * math.pi, rtol=1e-13)


def test_edge_record(mesh):
    e = int(mesh.edges_of(EdgeClass.GAMMA)[0])
    rec = mesh.edge(e)
    assert rec.is_arc and rec.cls == EdgeClass.GAMMA and rec.normal is None
    e = int(mesh.edges_of(EdgeClass.INTERIOR)[0])
    rec = mesh.edge(e)
    assert not rec.is_arc and len(rec.triangles) == 2
    np.testing.assert_allclose(np.linalg.norm(rec.normal), 1.0)


def test_normals_point_out_of_first_triangle(mesh):
    pts, _, nrm = edge_quadrature(mesh, np.arange(mesh.n_edges), 3)
    c = mesh.centroids[mesh.edge_triangles[:, 0]]
    assert np.all(np.einsum("eqi,eqi->eq", nrm, pts - c[:, None, :]) > 0)


def test_straight_edge_integral_closed_form(mesh):
    # int_edge exp(i k d.x) ds = L exp(i k d.p0) (exp(i phi) - 1) / (i phi),  phi = k d.(p1 - p0)
    k = 17.0
    d = np.array([math.cos(0.3), math.sin(0.3)])
    edges = mesh.edges_of(EdgeClass.INTERIOR)[:20]
    pts, wts, _ = edge_quadrature(mesh, edges, 10 + math.ceil(k * mesh.edge_length(edges).max()))
    num = np.sum(wts * np.exp(1j * k * pts @ d), axis=1)
    p = mesh.vertices[mesh.edge_vertices[edges]]
    L = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
    phi = k * (p[:, 1] - p[:, 0]) @ d
    ref = L * np.exp(1j * k * p[:, 0] @ d) * (np.exp(1j * phi) - 1) / (1j * phi)
    np.testing.assert_allclose(num, ref, rtol=1e-12)


def test_arc_quadrature_exact_for_trig(mesh):
    edges = mesh.edges_of(EdgeClass.SIGMA_R)
    pts, wts, nrm = edge_quadrature(mesh, edges, 12)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=-1), 1.0, rtol=1e-14)
    np.testing.assert_allclose(np.einsum("eqi,eqi->eq", pts, nrm), 1.0, rtol=1e-14)
    th = np.arctan2(pts[..., 1], pts[..., 0])
    np.testing.assert_allclose(np.sum(wts * np.cos(th) ** 2), math.pi, rtol=1e-13)
    pts, _, nrm = edge_quadrature(mesh, mesh.edges_of(EdgeClass.GAMMA), 4)
    np.testing.assert_allclose(np.einsum("eqi,eqi->eq", pts, nrm), -0.5, rtol=1e-14)


def test_gauss_legendre_exactness():
    t, w = gauss_legendre(5)
    for m in range(10):
        np.testing.assert_allclose(np.sum(w * t**m), 1 / (m + 1), rtol=1e-14)


def _curved_polygons(mesh, n_arc=64):
    """Triangles with their arc edges replaced by dense polylines."""
    polys = []
    tri_edges = mesh.triangle_edges
    for t, tri in enumerate(mesh.triangles):
        ring = []
        for a, b in ((0, 1), (1, 2), (2, 0)):
            va, vb = tri[a], tri[b]
            e = next(e for e in tri_edges[t] if set(mesh.edge_vertices[e]) == {va, vb})
            pa, pb = mesh.vertices[va], mesh.vertices[vb]
            if mesh.edge_class[e] == EdgeClass.INTERIOR:
                ring.append(pa)
                continue
            r = mesh.edge_arc[e, 0]
            ta, tb = math.atan2(pa[1], pa[0]), math.atan2(pb[1], pb[0])
            dt = (tb - ta + math.pi) % (2 * math.pi) - math.pi
            for s in np.linspace(0, 1, n_arc, endpoint=False):
                ring.append(r * np.array([math.cos(ta + s * dt), math.sin(ta + s * dt)]))
        polys.append(Polygon(ring))
    return polys


def test_locate_point_against_shapely():
    mesh = build_annular_mesh(0.5, 1.0, 16, 3)
    polys = _curved_polygons(mesh)
    rng = np.random.default_rng(1)
    r = np.sqrt(rng.uniform(0.25, 1.0, 3000))
    th = rng.uniform(0, 2 * math.pi, 3000)
    x = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    found = locate_point(mesh, x)
    checked = 0
    for p, t in zip(x, found):
        pt = Point(p)
        if shapely.distance(polys[t].exterior, pt) < 1e-6:
            continue
        assert polys[t].contains(pt)
        checked += 1
    assert checked > 2900


def test_locate_point_rejects_outside(mesh):
    with pytest.raises(ValueError):
        locate_point(mesh, np.array([0.1, 0.0]))
    assert isinstance(locate_point(mesh, np.array([0.75, 0.01])), int)


@given(n_theta=st.integers(8, 40), n_r=st.integers(2, 6), a=st.floats(0.1, 0.9))
def test_mesh_invariants(n_theta, n_r, a):
    mesh = build_annular_mesh(a, 1.0, n_theta, n_r)
    assert np.all(mesh.triangle_areas() > 0)
    assert len(mesh.vertices) - mesh.n_edges + mesh.n_triangles == 0
    # centroids inside the annulus locate back to their own triangle
    c = mesh.centroids
    r = np.hypot(c[:, 0], c[:, 1])
    keep = np.flatnonzero((r > a) & (r < 1.0))
    np.testing.assert_array_equal(locate_point(mesh, c[keep]), keep)


@pytest.mark.parametrize("args", [(1.0, 0.5, 16, 2), (0.5, 1.0, 7, 2), (0.5, 1.0, 16, 1), (0.5, 1.0, 16.5, 2)])
def test_mesh_rejects_bad_input(args):
    with pytest.raises(ValueError):
        build_annular_mesh(*args)


def test_write_mesh(tmp_path, mesh):
    path = tmp_path / "m.txt"
    write_mesh(mesh, path)
    text = path.read_text().splitlines()
    assert text[2] == f"$Vertices {len(mesh.vertices)}"
    assert f"$Triangles {mesh.n_triangles}" in text
    assert text[-1] == "$End"
    i = text.index(f"$Edges {mesh.n_edges}")
    cls = [int(line.split()[2]) for line in text[i + 2 : i + 2 + mesh.n_edges]]
    np.testing.assert_array_equal(cls, mesh.edge_class)


def test_small_mesh_example():
    m = build_annular_mesh(0.5, 1.0, 8, 2)
    assert m.n_triangles == 32
    assert len(m.edges_of(EdgeClass.GAMMA)) == 8 and len(m.edges_of(EdgeClass.SIGMA_R)) == 8
    inner = m.vertices[:8]
    np.testing.assert_allclose(np.hypot(inner[:, 0], inner[:, 1]), 0.5, atol=1e-12)


def test_h_by_brute_force_diameter_scan():
    m = build_annular_mesh(0.5, 1.0, 64, 16)
    scan = 0.0
    for tri in m.triangles:
        p = m.vertices[tri]
        for i in range(3):
            for j in range(i + 1, 3):
                scan = max(scan, float(np.linalg.norm(p[i] - p[j])))
    assert m.h == pytest.approx(scan, rel=1e-14)
    dth = 2 * math.pi / 64
    ref = max(2 * math.pi / 64, math.hypot(0.5 / 16, dth))
    assert abs(m.h - ref) / ref < 0.1


def test_quadrature_weights_sum_to_length(mesh):
    for order in (1, 4, 20):
        _, wts, _ = edge_quadrature(mesh, np.arange(mesh.n_edges), order)
        np.testing.assert_allclose(wts.sum(axis=1), mesh.edge_length(), rtol=1e-13)
    with pytest.raises(ValueError):
        edge_quadrature(mesh, [0], 0)


def _barycentric(mesh, t, x):
    p = mesh.vertices[mesh.triangles[t]]
    T = np.column_stack([p[1] - p[0], p[2] - p[0]])
    l1, l2 = np.linalg.solve(T, x - p[0])
    return np.array([1 - l1 - l2, l1, l2])


def test_locate_grid_cell():
    m = build_annular_mesh(0.5, 1.0, 16, 3)
    x = np.array([0.75, 0.0])
    t = int(locate_point(m, x))
    ring, sector = divmod(t // 2, 16)
    assert ring == 1 and sector in (0, 15)
    assert np.all(_barycentric(m, t, x) >= -1e-12)


def test_locate_barycentric_random():
    m = build_annular_mesh(0.5, 1.0, 20, 5)
    rng = np.random.default_rng(7)
    r = rng.uniform(0.5, 1.0, 1000)
    th = rng.uniform(0, 2 * math.pi, 1000)
    x = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    for p, t in zip(x, locate_point(m, x)):
        lam = _barycentric(m, t, p)
        if np.all(lam >= -1e-12):
            continue
        # outside the straight triangle only in the sliver between a boundary chord and its arc
        ring = (t // 2) // 20
        assert ring in (0, 4)
        rr = math.hypot(*p)
        assert rr < 0.5 + 0.5 * (1 - math.cos(math.pi / 20)) + 1e-12 or rr > math.cos(math.pi / 20) - 1e-12


def test_interior_edges_have_opposite_orientation(mesh):
    for e in mesh.edges_of(EdgeClass.INTERIOR):
        t0, t1 = mesh.edge_triangles[e]
        va, vb = mesh.edge_vertices[e]

        def oriented(t):
            tri = list(mesh.triangles[t])
            i = tri.index(va)
            return tri[(i + 1) % 3] == vb

        assert oriented(t0) != oriented(t1)
