import math

import numpy as np
import pytest
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from idtgvd.fixtures import cube, flat_grid, icosphere, octahedron, torus
from idtgvd.meshcore import Mesh, SurfacePoint
from idtgvd.mmp import DistanceField, propagate, propagate_all_vertices


def edge_graph_distances(mesh, src):
    """Dijkstra over the edge graph: an upper bound on geodesic distance."""
    rows, cols, vals = [], [], []
    for e in range(mesh.n_edges):
        u, v = mesh.edge_endpoints(e)
        w = mesh.edge_length(e)
        rows += [u, v]
        cols += [v, u]
        vals += [w, w]
    g = coo_matrix((vals, (rows, cols)), shape=(mesh.n_vertices, mesh.n_vertices))
    return dijkstra(g.tocsr(), indices=src)


def l_shape():
    """Flat L-shaped sheet with a reflex corner at (1,1) (vertex 4)."""
    v = np.array(
        [
            [0, 0, 0], [1, 0, 0], [2, 0, 0],
            [0, 1, 0], [1, 1, 0], [2, 1, 0],
            [0, 2, 0], [1, 2, 0],
        ],
        dtype=np.float64,
    )
    f = np.array(
        [[0, 1, 4], [0, 4, 3], [1, 2, 5], [1, 5, 4], [3, 4, 7], [3, 7, 6]]
    )
    return Mesh(v, f)


def test_flat_grid_single_source_is_euclidean():
    m = flat_grid(6, 5, 2.0, 1.6)
    src = 0
    field = propagate(m, [SurfacePoint.vertex(src)])
    p0 = m.vertices[src]
    expect = np.linalg.norm(m.vertices - p0, axis=1)
    assert np.allclose(field.vertex_dist, expect, atol=1e-9)
    # edge midpoints and interior face points
    for e in range(0, m.n_edges, 3):
        sp = SurfacePoint.on_edge(e, 0.5)
        d, site = field.distance_at(sp)
        assert site == 0
        assert abs(d - np.linalg.norm(sp.position(m) - p0)) < 1e-9
    for f in range(0, m.n_faces, 7):
        sp = SurfacePoint.in_face(f, (0.2, 0.3, 0.5))
        d, _ = field.distance_at(sp)
        assert abs(d - np.linalg.norm(sp.position(m) - p0)) < 1e-9


def test_flat_grid_face_source_is_euclidean():
    m = flat_grid(4, 4, 1.0, 1.0)
    sp = SurfacePoint.in_face(11, (0.4, 0.35, 0.25))
    field = propagate(m, [sp])
    p0 = sp.position(m)
    expect = np.linalg.norm(m.vertices - p0, axis=1)
    assert np.allclose(field.vertex_dist, expect, atol=1e-9)


def test_flat_grid_edge_source_is_euclidean():
    m = flat_grid(4, 4, 1.0, 1.0)
    e = next(e for e in range(m.n_edges) if not m.is_boundary_edge(e))
    sp = SurfacePoint.on_edge(e, 0.37)
    field = propagate(m, [sp])
    p0 = sp.position(m)
    expect = np.linalg.norm(m.vertices - p0, axis=1)
    assert np.allclose(field.vertex_dist, expect, atol=1e-9)


def test_two_sources_tie_takes_lower_site_id():
    m = flat_grid(4, 4, 1.0, 1.0)
    # corners (0,0) and (1,1) are symmetric about the grid center
    v_a = 0
    v_b = m.n_vertices - 1
    field = propagate(m, [SurfacePoint.vertex(v_a), SurfacePoint.vertex(v_b)])
    center = 12  # vertex at (0.5, 0.5)
    assert np.allclose(m.vertices[center], [0.5, 0.5, 0.0])
    d, site = field.distance_at(SurfacePoint.vertex(center))
    assert abs(d - math.sqrt(0.5)) < 1e-9
    assert site == 0


def test_cube_distances_by_unfolding():
    m = cube()
    field = propagate(m, [SurfacePoint.vertex(0)])
    got = field.vertex_dist
    coords = m.vertices
    for v in range(8):
        k = int(round(coords[v].sum()))
        expect = {0: 0.0, 1: 1.0, 2: math.sqrt(2.0), 3: math.sqrt(5.0)}[k]
        assert abs(got[v] - expect) < 1e-9, f"vertex {v}"


def test_cube_far_corner_path_crosses_one_cube_edge():
    m = cube()
    field = propagate(m, [SurfacePoint.vertex(0)])
    path = field.trace_path(SurfacePoint.vertex(6))
    assert abs(path.length - math.sqrt(5.0)) < 1e-9
    # polyline length agrees with the reported length
    seglen = sum(
        np.linalg.norm(np.asarray(b) - np.asarray(a))
        for a, b in zip(path.points, path.points[1:])
    )
    assert abs(seglen - path.length) < 1e-9
    cube_edge_crossings = 0
    for e in path.crossed_edges:
        u, v = m.edge_endpoints(e)
        if int(np.sum(m.vertices[u] != m.vertices[v])) == 1:
            cube_edge_crossings += 1
    assert cube_edge_crossings == 1


def test_sphere_sandwich_and_symmetry():
    m = icosphere(1)
    field = propagate(m, [SurfacePoint.vertex(0)])
    upper = edge_graph_distances(m, 0)
    lower = np.linalg.norm(m.vertices - m.vertices[0], axis=1)
    assert np.all(field.vertex_dist <= upper + 1e-9)
    assert np.all(field.vertex_dist >= lower - 1e-9)
    # through-face routes must beat the edge graph somewhere
    assert np.any(field.vertex_dist < upper - 1e-6)
    back = propagate(m, [SurfacePoint.vertex(17)])
    assert abs(field.vertex_dist[17] - back.vertex_dist[0]) < 1e-9


def test_torus_traces_match_distances():
    V, F = torus(12, 8)
    m = Mesh(V, F)
    field = propagate(m, [SurfacePoint.vertex(0)])
    upper = edge_graph_distances(m, 0)
    lower = np.linalg.norm(m.vertices - m.vertices[0], axis=1)
    assert np.all(field.vertex_dist <= upper + 1e-9)
    assert np.all(field.vertex_dist >= lower - 1e-9)
    rng = np.random.default_rng(3)
    for v in rng.choice(m.n_vertices, size=10, replace=False):
        path = field.trace_path(SurfacePoint.vertex(int(v)))
        assert abs(path.length - field.vertex_dist[v]) < 1e-7
        seglen = sum(
            np.linalg.norm(np.asarray(b) - np.asarray(a))
            for a, b in zip(path.points, path.points[1:])
        )
        assert abs(seglen - path.length) < 1e-7


def test_reflex_corner_paths_bend_at_boundary_vertex():
    m = l_shape()
    # from (2,1): the straight route to (1,2) is blocked, bends at (1,1)
    field = propagate(m, [SurfacePoint.vertex(5)])
    assert abs(field.vertex_dist[7] - 2.0) < 1e-9
    path = field.trace_path(SurfacePoint.vertex(7))
    assert abs(path.length - 2.0) < 1e-9
    assert any(np.linalg.norm(p - np.array([1.0, 1.0, 0.0])) < 1e-7 for p in path.points)
    # from (2,0) to (0,2): grazes the reflex corner exactly
    field2 = propagate(m, [SurfacePoint.vertex(2)])
    assert abs(field2.vertex_dist[6] - 2.0 * math.sqrt(2.0)) < 1e-9


def test_saturated_octahedron_envelopes_are_two_flats():
    m = octahedron()
    field = propagate_all_vertices(m)
    assert np.all(field.vertex_dist == 0.0)
    assert np.array_equal(field.vertex_site, np.arange(6))
    for e in range(m.n_edges):
        u, v = m.edge_endpoints(e)
        L = m.edge_length(e)
        ws = field.edge_envelope(e)
        assert len(ws) == 2
        assert ws[0].site == u and ws[1].site == v
        assert abs(ws[0].b1 - L / 2) < 1e-9 and abs(ws[1].b0 - L / 2) < 1e-9


def test_saturated_envelopes_tile_every_edge():
    meshes = [
        octahedron(),
        icosphere(1),
        Mesh(*torus(8, 6)),
        flat_grid(4, 4, 1.0, 1.0),
    ]
    for m in meshes:
        field = propagate_all_vertices(m)
        for e in range(m.n_edges):
            L = m.edge_length(e)
            u, v = m.edge_endpoints(e)
            ws = field.edge_envelope(e)
            assert ws, f"empty envelope on edge {e}"
            assert ws[0].b0 < 1e-9 * L
            assert ws[-1].b1 > L * (1 - 1e-9)
            for a, b in zip(ws, ws[1:]):
                assert abs(b.b0 - a.b1) < 1e-7 * L  # no gaps, no overlaps
            assert ws[0].site == u and ws[-1].site == v


def test_max_radius_truncation_is_conservative():
    m = icosphere(1)
    full = propagate(m, [SurfacePoint.vertex(0)])
    r = 1.0
    part = propagate(m, [SurfacePoint.vertex(0)], max_radius=r)
    for v in range(m.n_vertices):
        if full.vertex_dist[v] <= r - 1e-6:
            assert abs(part.vertex_dist[v] - full.vertex_dist[v]) < 1e-9
        else:
            # never an underestimate beyond the horizon
            assert part.vertex_dist[v] >= full.vertex_dist[v] - 1e-9


def test_window_dump_roundtrip(tmp_path):
    m = cube()
    field = propagate(m, [SurfacePoint.vertex(0)])
    p = tmp_path / "windows.bin"
    field.dump_windows(p)
    loaded = DistanceField.load_windows(p)
    assert len(loaded) == m.n_edges
    for e in range(m.n_edges):
        ws = field.edge_envelope(e)
        assert len(loaded[e]) == len(ws)
        for rec, w in zip(loaded[e], ws):
            assert rec == (w.b0, w.b1, w.sx, w.sy, w.d0, w.site)
    with pytest.raises(ValueError):
        bad = tmp_path / "bad.bin"
        bad.write_bytes(b"NOPE" + bytes(20))
        DistanceField.load_windows(bad)


def test_insert_source_matches_fresh_propagation():
    m = flat_grid(5, 5, 1.0, 1.0)
    field = propagate_all_vertices(m)
    extra = SurfacePoint.in_face(7, (0.5, 0.25, 0.25))
    sid, touched = field.insert_source(extra)
    assert sid == m.n_vertices
    assert touched
    fresh = propagate(
        m, [SurfacePoint.vertex(v) for v in range(m.n_vertices)] + [extra]
    )
    assert np.allclose(field.vertex_dist, fresh.vertex_dist, atol=1e-9)
    rng = np.random.default_rng(11)
    for e in rng.choice(m.n_edges, size=20, replace=False):
        sp = SurfacePoint.on_edge(int(e), 0.31)
        da, sa = field.distance_at(sp)
        db, sb = fresh.distance_at(sp)
        assert abs(da - db) < 1e-9
        assert sa == sb


def test_queries_outside_any_source_raise_or_inf():
    m = flat_grid(2, 2, 1.0, 1.0)
    field = DistanceField(m, [])
    d, site = field.distance_at(SurfacePoint.vertex(0))
    assert math.isinf(d) and site == -1
