import math

import numpy as np
import pytest

from idtgvd.fixtures import flat_grid, octahedron, torus
from idtgvd.meshcore import Mesh, SurfacePoint
from idtgvd.mmp import propagate, propagate_all_vertices
from idtgvd.gvd import build_gvd


def open_tube(n_ring=9, rows=3, radius=1.0, height=1.5):
    verts = []
    for r in range(rows):
        z = height * r / (rows - 1)
        for k in range(n_ring):
            th = 2.0 * math.pi * k / n_ring
            verts.append([radius * math.cos(th), radius * math.sin(th), z])
    faces = []
    for r in range(rows - 1):
        for k in range(n_ring):
            a = r * n_ring + k
            b = r * n_ring + (k + 1) % n_ring
            c = (r + 1) * n_ring + (k + 1) % n_ring
            d = (r + 1) * n_ring + k
            faces.append([a, b, c])
            faces.append([a, c, d])
    return Mesh(np.array(verts, dtype=float), np.array(faces))


def euclid(p, q):
    return float(np.linalg.norm(np.asarray(p, float) - np.asarray(q, float)))


class TestFourCornerSquare:
    @pytest.fixture(scope="class")
    def diagram(self):
        m = flat_grid(2, 2, 1.0, 1.0)
        sites = [SurfacePoint.vertex(v) for v in (0, 2, 6, 8)]
        return build_gvd(propagate(m, sites))

    def test_adjacency_is_side_pairs_only(self, diagram):
        assert diagram.site_adjacency() == {(0, 1), (0, 2), (1, 3), (2, 3)}

    def test_no_defects(self, diagram):
        assert diagram.pseudo_edges() == []
        assert diagram.duplicate_pairs() == []
        assert diagram.cyclic_edges() == []

    def test_center_node_ties_all_four(self, diagram):
        center = [
            nd for nd in diagram.nodes if nd.kind == "vertex" and nd.vertex == 4
        ]
        assert len(center) == 1
        assert center[0].sites == {0, 1, 2, 3}
        assert abs(center[0].value - math.sqrt(0.5)) < 1e-9

    def test_each_chain_runs_boundary_to_center(self, diagram):
        assert len(diagram.edges) == 4
        for ed in diagram.edges:
            ends = {diagram.nodes[ed.n0].vertex, diagram.nodes[ed.n1].vertex}
            assert 4 in ends
            assert ends & {1, 3, 5, 7}

    def test_cells_are_disks(self, diagram):
        for s in range(4):
            topo = diagram.cell_topology(s)
            assert topo["is_disk"], topo

    def test_border_fragments_cover_each_corner(self, diagram):
        assert len(diagram.border_fragments) == 4
        owners = sorted(next(iter(fr["sites"])) for fr in diagram.border_fragments)
        assert owners == [0, 1, 2, 3]


class TestFiveSiteSquare:
    @pytest.fixture(scope="class")
    def setup(self):
        m = flat_grid(4, 4, 1.0, 1.0)
        vids = (0, 4, 20, 24, 12)
        sites = [SurfacePoint.vertex(v) for v in vids]
        field = propagate(m, sites)
        return m, vids, build_gvd(field)

    def test_center_site_blocks_corner_adjacency(self, setup):
        _m, _vids, vd = setup
        assert vd.site_adjacency() == {(0, 4), (1, 4), (2, 4), (3, 4)}

    def test_chain_passes_through_interior_tie_vertex(self, setup):
        _m, _vids, vd = setup
        ed = next(e for e in vd.edges if e.sites == (0, 4))
        assert len(ed.arcs) == 4
        ends = {vd.nodes[ed.n0].vertex, vd.nodes[ed.n1].vertex}
        assert ends == {2, 10}
        through = {
            vd.nodes[n].vertex
            for arc in ed.arcs
            for n in (arc.n0, arc.n1)
            if vd.nodes[n].kind == "vertex"
        }
        assert 6 in through  # (0.25, 0.25) lies on the bisector, not a stop

    def test_arc_samples_sit_on_euclidean_bisectors(self, setup):
        m, vids, vd = setup
        pos = {i: m.vertices[v] for i, v in enumerate(vids)}
        for ed in vd.edges:
            s1, s2 = ed.sites
            for arc in ed.arcs:
                pts, _ = vd.sample_arc(arc, 6)
                for p in pts:
                    d1, d2 = euclid(p, pos[s1]), euclid(p, pos[s2])
                    assert abs(d1 - d2) < 1e-7
                    for other, q in pos.items():
                        if other not in (s1, s2):
                            assert euclid(p, q) > d1 - 1e-7

    def test_all_five_cells_are_disks(self, setup):
        _m, _vids, vd = setup
        for s in range(5):
            assert vd.cell_topology(s)["is_disk"]


class TestThreeSitesCircumcenter:
    def test_branch_node_at_circumcenter(self):
        m = flat_grid(6, 6, 1.0, 1.0)
        vids = (8, 19, 38)
        sites = [SurfacePoint.vertex(v) for v in vids]
        vd = build_gvd(propagate(m, sites))
        assert vd.site_adjacency() == {(0, 1), (0, 2), (1, 2)}

        p = [m.vertices[v][:2] for v in vids]
        A = 2.0 * np.array([p[1] - p[0], p[2] - p[0]])
        b = np.array(
            [p[1] @ p[1] - p[0] @ p[0], p[2] @ p[2] - p[0] @ p[0]]
        )
        cc = np.linalg.solve(A, b)
        r = euclid(np.r_[cc, 0.0], np.r_[p[0], 0.0])

        hits = [
            nd
            for nd in vd.nodes
            if len(nd.sites) == 3 and euclid(nd.pos3d[:2], cc) < 1e-6
        ]
        assert len(hits) == 1
        assert abs(hits[0].value - r) < 1e-6
        # three chains radiate from the circumcenter to the mesh boundary
        for ed in vd.edges:
            endpoints = {ed.n0, ed.n1}
            assert hits[0].id in endpoints
            other = (endpoints - {hits[0].id}).pop()
            assert vd.nodes[other].on_mesh_boundary


class TestSaturatedOctahedron:
    @pytest.fixture(scope="class")
    def diagram(self):
        m = octahedron()
        return build_gvd(propagate_all_vertices(m))

    def test_adjacency_matches_mesh_edges(self, diagram):
        m = diagram.mesh
        expect = {tuple(sorted(m.edge_endpoints(e))) for e in range(m.n_edges)}
        assert diagram.site_adjacency() == expect

    def test_branch_nodes_are_face_circumcenters(self, diagram):
        branch = [nd for nd in diagram.nodes if len(nd.sites) >= 3]
        assert len(branch) == 8
        L = diagram.mesh.edge_length(0)
        for nd in branch:
            assert nd.kind == "face"
            assert len(nd.sites) == 3
            assert abs(nd.value - L / math.sqrt(3.0)) < 1e-9

    def test_chains_cross_one_mesh_edge_each(self, diagram):
        assert len(diagram.edges) == 12
        for ed in diagram.edges:
            assert not ed.pseudo and not ed.cyclic
            assert len(ed.arcs) == 2
            assert diagram.nodes[ed.n0].kind == "face"
            assert diagram.nodes[ed.n1].kind == "face"

    def test_euler_count(self, diagram):
        nodes = set()
        for ed in diagram.edges:
            nodes.update((ed.n0, ed.n1))
        assert len(nodes) - len(diagram.edges) + 6 == 2

    def test_cells_are_disks(self, diagram):
        for s in range(6):
            assert diagram.cell_topology(s)["is_disk"]


class TestSaturatedGrid:
    @pytest.fixture(scope="class")
    def diagram(self):
        return build_gvd(propagate_all_vertices(flat_grid(3, 3, 1.0, 1.0)))

    def test_adjacency_is_axis_neighbors(self, diagram):
        expect = set()
        for j in range(4):
            for i in range(4):
                v = j * 4 + i
                if i < 3:
                    expect.add((v, v + 1))
                if j < 3:
                    expect.add((v, v + 4))
        assert diagram.site_adjacency() == expect

    def test_quad_centers_are_four_way_nodes(self, diagram):
        four = [nd for nd in diagram.nodes if len(nd.sites) == 4]
        assert len(four) == 9
        for nd in four:
            assert nd.kind == "edge"
            assert not diagram.mesh.is_boundary_edge(nd.edge)

    def test_no_defects_and_disks(self, diagram):
        assert diagram.pseudo_edges() == []
        assert diagram.duplicate_pairs() == []
        assert diagram.cyclic_edges() == []
        for s in range(16):
            assert diagram.cell_topology(s)["is_disk"]


class TestRidges:
    def test_single_site_on_tube_has_interior_ridge(self):
        m = open_tube()
        vd = build_gvd(propagate(m, [SurfacePoint.vertex(0)]))
        ridges = vd.pseudo_edges()
        assert ridges
        for ed in ridges:
            assert ed.sites == (0, 0)
        topo = vd.cell_topology(0)
        assert topo["has_interior_ridge"]
        assert not topo["is_disk"]
        # the ridge runs rim to rim, opposite the site
        ends = {vd.nodes[n].on_mesh_boundary for ed in ridges for n in (ed.n0, ed.n1)}
        assert True in ends
        for ed in ridges:
            for arc in ed.arcs:
                pts, _ = vd.sample_arc(arc, 4)
                for p in pts:
                    assert p[0] < 0.0  # site sits at angle 0

    def test_single_site_on_flat_disk_is_clean(self):
        m = flat_grid(3, 3, 1.0, 1.0)
        vd = build_gvd(propagate(m, [SurfacePoint.vertex(5)]))
        assert vd.pseudo_edges() == []
        topo = vd.cell_topology(0)
        assert topo["is_disk"]
        assert topo["n_loops"] == 1

    def test_single_site_on_torus_has_ridge(self):
        V, F = torus(8, 6)
        m = Mesh(V, F)
        vd = build_gvd(propagate(m, [SurfacePoint.vertex(0)]))
        assert vd.pseudo_edges()
        assert not vd.cell_topology(0)["is_disk"]


class TestExports:
    def test_json_and_obj(self, tmp_path):
        m = flat_grid(2, 2, 1.0, 1.0)
        sites = [SurfacePoint.vertex(v) for v in (0, 2, 6, 8)]
        vd = build_gvd(propagate(m, sites))
        obj = vd.to_json(tmp_path / "gvd.json")
        assert obj["n_sites"] == 4
        assert len(obj["nodes"]) == len(vd.nodes)
        assert all(ed["polyline"] for ed in obj["edges"])
        assert (tmp_path / "gvd.json").exists()
        vd.save_obj_polylines(tmp_path / "gvd.obj")
        text = (tmp_path / "gvd.obj").read_text()
        assert text.count("l ") == len(vd.arcs)

    def test_winner_sequence_on_saturated_edge(self):
        m = octahedron()
        vd = build_gvd(propagate_all_vertices(m))
        for e in range(m.n_edges):
            runs = vd.edge_winner_sequence(e)
            u, v = m.edge_endpoints(e)
            assert [r[0] for r in runs] == sorted((u, v), key=lambda w: (
                0 if w == m.he_org[m.edge_he[e]] else 1))
