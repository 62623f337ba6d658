import math

import numpy as np
import pytest

from idtgvd import (
    DegenerateFaceError,
    Mesh,
    MeshError,
    NonManifoldError,
    SurfacePoint,
    boundary_loops,
    genus,
    load_obj,
    mesh_stats,
    save_obj,
)
from idtgvd import fixtures


def test_tetrahedron_counts():
    m = fixtures.tetrahedron()
    s = mesh_stats(m)
    assert (s.n_vertices, s.n_edges, s.n_faces) == (4, 6, 4)
    assert s.genus == 0
    assert s.n_boundary_loops == 0
    assert s.euler_characteristic == 2


def test_twin_involution_and_next_cycles():
    m = fixtures.octahedron()
    for h in range(m.n_halfedges):
        t = m.he_twin[h]
        if t >= 0:
            assert m.he_twin[t] == h
            assert m.he_org[t] == m.he_head[h]
            assert m.he_head[t] == m.he_org[h]
        assert m.he_next(m.he_next(m.he_next(h))) == h


def test_vertex_star_covers_closed_fan():
    m = fixtures.icosphere(1)
    for v in range(m.n_vertices):
        star = list(m.vertex_star(v))
        assert len(star) == len({m.he_face(h) for h in star})
        assert all(m.he_org[h] == v for h in star)


def test_genus_values():
    assert genus(fixtures.cube()) == 0
    tv, tf = fixtures.torus()
    assert genus(Mesh(tv, tf)) == 1
    assert genus(fixtures.genus2()) == 2


def test_boundary_loops_grid_and_tube():
    g = fixtures.flat_grid(4, 4)
    assert len(boundary_loops(g)) == 1
    assert genus(g) == 0
    tube = fixtures.tube_with_lone_vertex()
    assert tube.n_vertices == 17
    assert len(boundary_loops(tube)) == 2
    assert genus(tube) == 0


def test_disconnected_mesh_rejected():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 5, 0], [6, 5, 0], [5, 6, 0]], dtype=float)
    f = np.array([[0, 1, 2], [3, 4, 5]])
    with pytest.raises(MeshError, match="2 components"):
        genus(Mesh(v, f))


def test_nonmanifold_edge_rejected():
    # three faces glued along one edge
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [0, -1, 0]], dtype=float)
    f = np.array([[0, 1, 2], [1, 0, 3], [1, 0, 4]])
    with pytest.raises(NonManifoldError):
        Mesh(v, f)


def test_inconsistent_orientation_rejected():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    f = np.array([[0, 1, 2], [1, 3, 2]])  # consistent
    Mesh(v, f)
    f_bad = np.array([[0, 1, 2], [1, 2, 3]])  # second face reuses directed 1->2
    with pytest.raises(NonManifoldError, match="orientation|non-manifold"):
        Mesh(v, f_bad)


def test_pinched_vertex_rejected():
    v = np.array(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]], dtype=float
    )
    f = np.array([[0, 1, 2], [0, 3, 4]])
    with pytest.raises(NonManifoldError, match="fan"):
        Mesh(v, f)


def test_degenerate_face_rejected():
    v = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float)
    with pytest.raises(DegenerateFaceError):
        Mesh(v, np.array([[0, 1, 2]]))
    with pytest.raises(DegenerateFaceError, match="repeats"):
        Mesh(np.eye(3), np.array([[0, 1, 1]]))


def test_sigma_equilateral_is_one():
    v = np.array([[0, 0, 0], [1, 0, 0], [0.5, math.sqrt(3) / 2, 0]])
    m = Mesh(v, np.array([[0, 1, 2]]), validate=True)
    s = mesh_stats(m)
    assert s.sigma_min == pytest.approx(1.0, abs=1e-12)
    assert s.sigma_max == pytest.approx(1.0, abs=1e-12)


def test_sigma_right_isoceles_hand_value():
    # legs 1, hypotenuse sqrt(2): sigma = (1 + sqrt(2)) / sqrt(3)
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    m = Mesh(v, np.array([[0, 1, 2]]))
    expect = (1.0 + math.sqrt(2.0)) / math.sqrt(3.0)
    assert mesh_stats(m).sigma_max == pytest.approx(expect, rel=1e-12)
    assert expect == pytest.approx(1.3938468, abs=1e-7)


def test_obj_roundtrip_exact(tmp_path):
    m = fixtures.icosphere(1)
    p = tmp_path / "ico.obj"
    save_obj(m, p)
    m2 = load_obj(p)
    assert np.array_equal(m.vertices, m2.vertices)
    assert np.array_equal(m.faces, m2.faces)


def test_obj_ignores_foreign_records(tmp_path):
    p = tmp_path / "mixed.obj"
    p.write_text(
        "# comment\nvn 0 0 1\nvt 0.5 0.5\no thing\n"
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\nusemtl stuff\n"
    )
    m = load_obj(p)
    assert m.n_faces == 1
    assert m.obj_ignored_records == 4


def test_obj_quad_needs_fan_flag(tmp_path):
    p = tmp_path / "quad.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(MeshError, match="non-triangular"):
        load_obj(p)
    m = load_obj(p, triangulate_fan=True)
    assert m.n_faces == 2


def test_obj_face_with_slashes_and_negative_indices(tmp_path):
    p = tmp_path / "s.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2/2/2 -1/3/3\n")
    m = load_obj(p)
    assert m.n_faces == 1
    assert list(m.faces[0]) == [0, 1, 2]


def test_surface_point_positions():
    m = fixtures.cube()
    v = SurfacePoint.vertex(3)
    assert np.allclose(v.position(m), m.vertices[3])
    e = SurfacePoint.on_edge(0, 0.25)
    h = int(m.edge_he[0])
    a, b = m.vertices[m.he_org[h]], m.vertices[m.he_head[h]]
    assert np.allclose(e.position(m), a + 0.25 * (b - a))
    fp = SurfacePoint.in_face(0, (1, 1, 1))
    assert np.allclose(fp.position(m), m.vertices[m.faces[0]].mean(axis=0))
    rt = SurfacePoint.from_json(fp.to_json())
    assert rt == fp


def test_he_frame_maps_apex():
    m = fixtures.icosphere(0)
    for h in (0, 5, 17):
        x, y = m.apex_2d(h)
        p = m.frame_to_3d(h, x, y)
        apex = m.faces[m.he_face(h), (h % 3 + 2) % 3]
        assert np.allclose(p, m.vertices[apex], atol=1e-12)


def test_euler_relation_all_fixtures():
    meshes = [
        fixtures.tetrahedron(),
        fixtures.octahedron(),
        fixtures.cube(),
        fixtures.flat_grid(3, 5),
        fixtures.tube_with_lone_vertex(),
        fixtures.squat_prism(),
        fixtures.genus2(),
    ]
    for m in meshes:
        s = mesh_stats(m)
        assert s.euler_characteristic == 2 - 2 * s.genus - s.n_boundary_loops
