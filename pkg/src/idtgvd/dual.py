"""Intrinsic Delaunay triangulations as duals of repaired Voronoi diagrams.

The dual takes one triangulation vertex per cell, one edge per Voronoi edge
(with the exact geodesic length between the two sites, read off the unfolded
cones flanking the bisector) and one triangle per interior Voronoi vertex.
Triangulations are stored as a Delta-complex: triangles reference edge ids,
so self-loops and multi-edges arising from edge flipping stay representable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .geom import cot_opposite, tri_area_from_lengths
from .meshcore import SurfacePoint
from .mmp import propagate
from .repair import audit_closed_ball


@dataclass
class IntrinsicEdge:
    id: int
    a: int
    b: int
    length: float
    # for dual edges: (face, branch point xy, apex of a's cone, apex of b's cone)
    crossing: tuple | None = None


@dataclass
class IntrinsicTriangle:
    id: int
    verts: tuple
    edges: tuple  # edge ids; edges[k] joins verts[k] and verts[(k+1) % 3]
    node: int = -1  # dual Voronoi vertex (the geodesic circumcenter)


class IntrinsicTriangulation:
    """Vertices anchored on a surface, edges with intrinsic lengths, triangles."""

    def __init__(self, mesh, points, edges, triangles, provenance):
        self.mesh = mesh
        self.points = points  # vertex id -> SurfacePoint
        self.edges = edges
        self.triangles = triangles
        self.provenance = provenance

    @classmethod
    def from_mesh(cls, mesh):
        """The input mesh itself, edge lengths taken extrinsically."""
        points = [SurfacePoint.vertex(v) for v in range(mesh.n_vertices)]
        edges = []
        for e in range(mesh.n_edges):
            h = int(mesh.edge_he[e])
            edges.append(
                IntrinsicEdge(e, int(mesh.he_org[h]), int(mesh.he_head[h]),
                              float(mesh.he_len[h]))
            )
        tris = []
        for f in range(mesh.n_faces):
            verts = tuple(int(v) for v in mesh.faces[f])
            eids = tuple(int(mesh.he_edge[3 * f + k]) for k in range(3))
            tris.append(IntrinsicTriangle(f, verts, eids))
        return cls(mesh, points, edges, tris, "mesh")

    @property
    def n_vertices(self):
        return len(self.points)

    def euler_characteristic(self):
        return self.n_vertices - len(self.edges) + len(self.triangles)

    def edge_use_counts(self):
        use = {}
        for t in self.triangles:
            for eid in t.edges:
                use[eid] = use.get(eid, 0) + 1
        return use

    def boundary_edge_ids(self):
        use = self.edge_use_counts()
        return [e.id for e in self.edges if use.get(e.id, 0) == 1]

    def triangle_lengths(self, t):
        return tuple(self.edges[eid].length for eid in t.edges)

    def total_area(self):
        return sum(tri_area_from_lengths(*self.triangle_lengths(t)) for t in self.triangles)

    def to_json(self, path=None):
        data = {
            "provenance": self.provenance,
            "vertices": [p.to_json() for p in self.points],
            "edges": [
                {"id": e.id, "a": e.a, "b": e.b, "length": e.length}
                for e in self.edges
            ],
            "triangles": [
                {"id": t.id, "verts": list(t.verts), "edges": list(t.edges)}
                for t in self.triangles
            ],
        }
        if path is not None:
            with open(path, "w") as fh:
                json.dump(data, fh, indent=2)
        return data

    def write_obj(self, path, field=None, polylines=False):
        """OBJ with one `l` element per edge.

        With ``polylines`` and the diagram's distance field, dual edges are
        traced as geodesic polylines through their bisector branch points;
        otherwise each edge is the straight chord between its endpoints.
        """
        pos = [p.position(self.mesh) for p in self.points]
        lines = []
        verts_out = [tuple(q) for q in pos]
        for e in self.edges:
            chain = None
            if polylines and field is not None and e.crossing is not None:
                chain = _edge_polyline(self.mesh, field, e)
            if chain is None:
                lines.append([e.a + 1, e.b + 1])
                continue
            idx = [e.a + 1]
            for q in chain:
                verts_out.append((float(q[0]), float(q[1]), float(q[2])))
                idx.append(len(verts_out))
            idx.append(e.b + 1)
            lines.append(idx)
        with open(path, "w") as fh:
            for q in verts_out:
                fh.write(f"v {q[0]:.9g} {q[1]:.9g} {q[2]:.9g}\n")
            for idx in lines:
                fh.write("l " + " ".join(str(i) for i in idx) + "\n")


def _edge_polyline(mesh, field, e):
    """Interior points of the geodesic a -> b through the branch point."""
    f, (x, y), apex_a, apex_b = e.crossing
    corners = field.face_corners_2d(f)
    (ax, ay), (bx, by), (cx, cy) = corners
    det = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay)
    halves = []
    for apex in (apex_a, apex_b):
        dx, dy = apex[0] - x, apex[1] - y
        n = math.hypot(dx, dy)
        if n == 0.0:
            return None
        step = 100.0 * field.eps_w
        qx, qy = x + step * dx / n, y + step * dy / n
        u = ((qx - ax) * (cy - ay) - (cx - ax) * (qy - ay)) / det
        v = ((bx - ax) * (qy - ay) - (qx - ax) * (by - ay)) / det
        if min(u, v, 1.0 - u - v) < -1e-9:
            return None
        b = (max(0.0, 1.0 - u - v), max(0.0, u), max(0.0, v))
        try:
            halves.append(field.trace_path(SurfacePoint.in_face(f, b)).points)
        except RuntimeError:
            return None
    # halves run crossing -> site; stitch site_a -> crossing -> site_b and
    # drop the site endpoints themselves (the caller owns those vertices)
    first = halves[0][::-1]
    return [tuple(q) for q in first[1:]] + [tuple(q) for q in halves[1][:-1]]


# ---------------- extraction ----------------------------------------------------------


def _chain_geodesic_length(vd, ed):
    """Length of the site-to-site geodesic dual to Voronoi edge ``ed``.

    Each arc unfolds both source strips into its face frame, so the straight
    connection runs pseudo-source to pseudo-source: d0 + d0' + apex distance.
    The minimum over the chain's arcs is the dual edge length; the minimizing
    arc also yields the crossing point (the bisector branch vertex) used for
    polyline export.
    """
    best = None
    for arc in ed.arcs:
        c0, c1 = arc.cone0, arc.cone1
        s = c0.d0 + c1.d0 + math.hypot(c0.ax - c1.ax, c0.ay - c1.ay)
        if best is None or s < best[0]:
            x, y = vd._bisector_point(arc.frame, 0.0)
            a0 = (c0.ax, c0.ay) if c0.site == ed.sites[0] else (c1.ax, c1.ay)
            a1 = (c1.ax, c1.ay) if c0.site == ed.sites[0] else (c0.ax, c0.ay)
            best = (s, (arc.face, (x, y), a0, a1))
    return best


def _cell_cycle_at_node(nd, pairs):
    """Cyclic order of the cells around a Voronoi vertex.

    Each incident Voronoi edge separates two of the cells; around a simple
    vertex every cell appears in exactly two such pairs, so the pairs chain
    into a single cycle.
    """
    k = len(pairs)
    count = {}
    for (a, b) in pairs:
        count[a] = count.get(a, 0) + 1
        count[b] = count.get(b, 0) + 1
    if len(count) != k or any(c != 2 for c in count.values()):
        raise RuntimeError(
            f"Voronoi vertex {nd.id} is not simple: cell contacts {count}"
        )
    start = min(range(k), key=lambda i: pairs[i])
    cycle = [pairs[start][0], pairs[start][1]]
    used = {start}
    while len(used) < k:
        cur = cycle[-1]
        nxt = None
        for i, (a, b) in enumerate(pairs):
            if i in used or cur not in (a, b):
                continue
            nxt = (i, b if a == cur else a)
            break
        if nxt is None:
            raise RuntimeError(f"cell cycle at Voronoi vertex {nd.id} does not close")
        used.add(nxt[0])
        cycle.append(nxt[1])
    if cycle[-1] != cycle[0]:
        raise RuntimeError(f"cell cycle at Voronoi vertex {nd.id} does not close")
    return cycle[:-1]


def _node_site_angles(vd, nd, cycle, chains):
    """Angle at the node between consecutive sites of the cycle."""
    angles = []
    k = len(cycle)
    for i in range(k):
        pair = tuple(sorted((cycle[i], cycle[(i + 1) % k])))
        ed = chains[pair]
        arc = None
        for a in ed.arcs:
            if nd.id in (a.n0, a.n1):
                arc = a
                break
        if arc is None:
            raise RuntimeError(f"no terminal arc of chain {pair} at node {nd.id}")
        x, y = vd._node_xy_in_face(nd, arc.face)
        ux, uy = arc.cone0.ax - x, arc.cone0.ay - y
        wx, wy = arc.cone1.ax - x, arc.cone1.ay - y
        nu, nw = math.hypot(ux, uy), math.hypot(wx, wy)
        if nu == 0.0 or nw == 0.0:
            raise RuntimeError(f"cone apex coincides with Voronoi vertex {nd.id}")
        c = max(-1.0, min(1.0, (ux * wx + uy * wy) / (nu * nw)))
        angles.append(math.acos(c))
    return angles


def extract_dual(vd):
    """The intrinsic Delaunay triangulation dual to a repaired diagram.

    Refuses diagrams that fail the closed-ball audit. Voronoi vertices where
    more than three cells meet (exact geodesic cocircularity) are fanned
    around their lowest site id; the fan diagonals are chords of the common
    circumcircle, with lengths from the unfolded wedge angles.
    """
    audit = audit_closed_ball(vd)
    if not audit["ok"]:
        raise ValueError(f"closed-ball audit failed; repair first: {audit}")
    mesh = vd.mesh
    points = list(vd.field.sources)
    edges = []
    by_pair = {}
    chains = {}
    for ed in vd.edges:
        s, crossing = _chain_geodesic_length(vd, ed)
        e = IntrinsicEdge(len(edges), ed.sites[0], ed.sites[1], s, crossing)
        edges.append(e)
        by_pair[ed.sites] = e.id
        chains[ed.sites] = ed

    triangles = []
    for nd in vd.nodes:
        if nd.on_mesh_boundary:
            continue
        pairs = []
        for ed in vd.edges:
            hits = (1 if ed.n0 == nd.id else 0) + (1 if ed.n1 == nd.id else 0)
            pairs.extend([ed.sites] * hits)
        if not pairs:
            continue  # interior chain point, not a Voronoi vertex
        cycle = _cell_cycle_at_node(nd, pairs)
        if len(cycle) == 3:
            a, b, c = cycle
            eids = (
                by_pair[tuple(sorted((a, b)))],
                by_pair[tuple(sorted((b, c)))],
                by_pair[tuple(sorted((c, a)))],
            )
            triangles.append(
                IntrinsicTriangle(len(triangles), (a, b, c), eids, node=nd.id)
            )
            continue
        # cocircular fan around the lowest site id
        angles = _node_site_angles(vd, nd, cycle, chains)
        k = len(cycle)
        rot = cycle.index(min(cycle))
        cycle = cycle[rot:] + cycle[:rot]
        angles = angles[rot:] + angles[:rot]
        r = nd.value
        theta = [0.0]
        for ang in angles[:-1]:
            theta.append(theta[-1] + ang)
        diag = {}
        for i in range(2, k - 1):
            chord = r * math.sqrt(max(0.0, 2.0 - 2.0 * math.cos(theta[i])))
            e = IntrinsicEdge(len(edges), cycle[0], cycle[i], chord, None)
            edges.append(e)
            diag[i] = e.id
        for i in range(1, k - 1):
            a, b, c = cycle[0], cycle[i], cycle[i + 1]
            e_ab = by_pair[tuple(sorted((a, b)))] if i == 1 else diag[i]
            e_bc = by_pair[tuple(sorted((b, c)))]
            e_ca = diag[i + 1] if i + 1 <= k - 2 else by_pair[tuple(sorted((c, a)))]
            triangles.append(
                IntrinsicTriangle(len(triangles), (a, b, c), (e_ab, e_bc, e_ca), node=nd.id)
            )
    return IntrinsicTriangulation(mesh, points, edges, triangles, "dual")


# ---------------- verification --------------------------------------------------------


def verify_regular(t):
    """Theorem-1 regularity report: self-loops, repeated edges, shared pairs."""
    self_loops = [e.id for e in t.edges if e.a == e.b]
    degenerate = []
    for tri in t.triangles:
        if len(set(tri.verts)) < 3 or len(set(tri.edges)) < 3:
            degenerate.append(tri.id)
    shared_pairs = []
    seen = {}
    for tri in t.triangles:
        for i in range(3):
            for j in range(i + 1, 3):
                key = frozenset((tri.edges[i], tri.edges[j]))
                if len(key) < 2:
                    continue
                if key in seen:
                    shared_pairs.append((seen[key], tri.id))
                else:
                    seen[key] = tri.id
    ok = not self_loops and not degenerate and not shared_pairs
    return {
        "ok": ok,
        "self_loops": self_loops,
        "degenerate_triangles": degenerate,
        "triangle_pairs_sharing_two_edges": sorted(set(shared_pairs)),
    }


def delaunay_edge_report(t, eps_a=1e-12):
    """Interior edges failing the cot-sum local Delaunay test."""
    by_edge = {}
    for tri in t.triangles:
        for eid in tri.edges:
            by_edge.setdefault(eid, []).append(tri)
    bad = []
    for e in t.edges:
        tris = by_edge.get(e.id, [])
        if len(tris) != 2:
            continue
        w = 0.0
        for tri in tris:
            ls = t.triangle_lengths(tri)
            k = tri.edges.index(e.id)
            w += cot_opposite(ls[k], ls[(k + 1) % 3], ls[(k + 2) % 3])
        if w < -eps_a:
            bad.append({"edge": e.id, "cot_sum": w})
    return bad


def verify_empty_circumcircle(t, vd=None, eps_c=None):
    """Empty geodesic circumcircle audit.

    For dual provenance (triangles carrying their Voronoi vertex) each
    circumcenter gets an independent truncated wavefront: the three vertex
    distances must agree with the stored radius and no other vertex may sit
    strictly inside. Foreign triangulations fall back to the cot-sum local
    test, which is exactly the empty-circle condition on each edge quad.
    """
    violations = []
    mode = "cot-sum"
    checked = 0
    if vd is not None and t.triangles and all(tr.node >= 0 for tr in t.triangles):
        mode = "geodesic"
        eps = eps_c if eps_c is not None else 10.0 * vd.eps_w
        mesh = t.mesh
        for tri in t.triangles:
            nd = vd.nodes[tri.node]
            r = nd.value
            sp = vd.node_surface_point(nd.id)
            probe = propagate(mesh, [sp], max_radius=r + max(10.0 * eps, 0.05 * r))
            checked += 1
            for s in tri.verts:
                d, _ = probe.distance_at(t.points[s])
                if not math.isfinite(d) or abs(d - r) > eps:
                    violations.append(
                        {"triangle": tri.id, "kind": "radius", "site": s,
                         "r": r, "d": d}
                    )
            for s, p in enumerate(t.points):
                if s in tri.verts:
                    continue
                d, _ = probe.distance_at(p)
                if math.isfinite(d) and d < r - eps:
                    violations.append(
                        {"triangle": tri.id, "kind": "closer-site", "site": s,
                         "r": r, "d": d}
                    )
    for entry in delaunay_edge_report(t):
        violations.append({"kind": "cot-sum", **entry})
        checked += 1
    return {"ok": not violations, "mode": mode, "checked": checked,
            "violations": violations}
