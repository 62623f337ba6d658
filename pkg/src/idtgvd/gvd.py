"""Geodesic Voronoi diagrams extracted symbolically from window envelopes.

The diagram is assembled face by face: inside one triangle the distance
field restricted to each source is a union of additively weighted cones
(unfolded window apexes, corner offsets, direct in-face sources), so the
Voronoi structure inside the face is the lower-envelope arrangement of
those cones.  Bisector pieces are conic arcs (hyperbola branches, or lines
for equal offsets); nodes are cone-triple equidistant points, crossings on
the face's edges, and tied mesh vertices.  Pieces are validated by midpoint
minimality tests and stitched across faces through shared edge/vertex keys.

Same-site cones with genuinely different unfoldings mark ridge curves of
one source's own distance function (the cut locus inside its cell); arcs
between such cones are flagged ``pseudo`` and kept separate from ordinary
two-site bisectors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .geom import cone_crossings_on_axis, equidistant_point
from .meshcore import SurfacePoint, boundary_loops

__all__ = ["Cone", "GVDNode", "GVDArc", "VoronoiEdge", "VoronoiDiagram", "build_gvd"]


@dataclass
class Cone:
    site: int
    ax: float
    ay: float
    d0: float
    wedges: list  # validity triples (S, P0, P1); empty = valid on the whole face
    cluster: int = -1

    def value(self, x, y):
        return self.d0 + math.hypot(x - self.ax, y - self.ay)

    @property
    def label(self):
        return (self.site, self.cluster)


@dataclass
class GVDNode:
    id: int
    kind: str  # 'vertex' | 'edge' | 'face'
    value: float
    pos3d: np.ndarray
    vertex: int = -1
    edge: int = -1
    param: float = 0.0
    face: int = -1
    sites: set = dc_field(default_factory=set)
    on_mesh_boundary: bool = False


@dataclass
class GVDArc:
    id: int
    face: int
    n0: int
    n1: int
    cone0: Cone
    cone1: Cone
    pseudo: bool
    y0: float  # curve params of the endpoints in the bisector frame
    y1: float
    frame: tuple  # (ox, oy, ux, uy, a, b2) foci frame of the bisector


@dataclass
class VoronoiEdge:
    id: int
    sites: tuple  # sorted pair (s, s) for pseudo ridges
    arcs: list
    n0: int  # -1 when cyclic
    n1: int
    pseudo: bool
    cyclic: bool


class VoronoiDiagram:
    def __init__(self, field):
        self.field = field
        self.mesh = field.mesh
        self.eps_w = field.eps_w
        self.nodes: list[GVDNode] = []
        self.arcs: list[GVDArc] = []
        self.edges: list[VoronoiEdge] = []
        self.border_fragments = []  # (cell site, [(edge, t0, t1), ...]) along boundary
        self._build()

    # ---------------- cones -------------------------------------------------------

    def face_cone_set(self, f):
        """Deduplicated weighted cones covering face f, clustered per site."""
        raw = self.field.face_cones(f)
        cones = []
        tol = 1e-9 * (1.0 + self.mesh.bbox_diag)
        for site, ax, ay, d0, wedge, _w in raw:
            for c in cones:
                if (
                    c.site == site
                    and abs(c.d0 - d0) <= tol
                    and math.hypot(c.ax - ax, c.ay - ay) <= tol
                ):
                    if wedge is not None and c.wedges:
                        c.wedges.append(wedge)
                    else:
                        # an unrestricted duplicate widens the cone to the
                        # whole face; drop the wedge list entirely
                        c.wedges = []
                    break
            else:
                cones.append(Cone(site, ax, ay, d0, [wedge] if wedge is not None else []))
        self._cluster_same_site(cones)
        return cones

    def _cluster_same_site(self, cones):
        """Union same-site cones that describe one path family.

        Two cones are one family when their apexes coincide or one apex lies
        on the other's cone surface (a shadow continuation past a wedge).
        """
        tol = 10.0 * self.eps_w
        n = len(cones)
        parent = list(range(n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i in range(n):
            for j in range(i + 1, n):
                if cones[i].site != cones[j].site:
                    continue
                ci, cj = cones[i], cones[j]
                sep = math.hypot(ci.ax - cj.ax, ci.ay - cj.ay)
                same = (
                    sep <= tol
                    or abs(ci.d0 + sep - cj.d0) <= tol
                    or abs(cj.d0 + sep - ci.d0) <= tol
                )
                if same:
                    pi, pj = find(i), find(j)
                    if pi != pj:
                        parent[pj] = pi
        clusters = {}
        for i, c in enumerate(cones):
            r = find(i)
            key = (c.site, r)
            clusters.setdefault(key, len(clusters))
            c.cluster = clusters[key]

    # ---------------- per-face candidate extraction ---------------------------------

    @staticmethod
    def _bisector_frame(ci, cj):
        """Foci frame of the weighted bisector of two cones, or None.

        Returns (ox, oy, ux, uy, a, b2): origin at the apex midpoint, x-axis
        toward cj's apex; the bisector is x = a*sqrt(1 + y^2/b2) (signed a),
        degenerating to the line x = 0 when the offsets match.
        """
        dx, dy = cj.ax - ci.ax, cj.ay - ci.ay
        dist = math.hypot(dx, dy)
        if dist < 1e-14:
            return None
        c = 0.5 * dist
        a = 0.5 * (cj.d0 - ci.d0)
        if abs(a) >= c:
            return None  # one cone dominates everywhere
        ox, oy = 0.5 * (ci.ax + cj.ax), 0.5 * (ci.ay + cj.ay)
        ux, uy = dx / dist, dy / dist
        return (ox, oy, ux, uy, a, c * c - a * a)

    @staticmethod
    def _bisector_point(frame, y):
        ox, oy, ux, uy, a, b2 = frame
        x = a * math.sqrt(1.0 + y * y / b2) if a != 0.0 else 0.0
        return (ox + x * ux - y * uy, oy + x * uy + y * ux)

    @staticmethod
    def _bisector_param(frame, px, py):
        ox, oy, ux, uy, _a, _b2 = frame
        return -(px - ox) * uy + (py - oy) * ux

    @staticmethod
    def _bisector_tangent(frame, y, direction):
        """Unit tangent at param y, oriented toward increasing y * direction."""
        ox, oy, ux, uy, a, b2 = frame
        dxdy = a * y / (b2 * math.sqrt(1.0 + y * y / b2)) if a != 0.0 else 0.0
        tx, ty = dxdy, 1.0
        nrm = math.hypot(tx, ty)
        tx, ty = direction * tx / nrm, direction * ty / nrm
        return (tx * ux - ty * uy, tx * uy + ty * ux)

    def _cone_valid_at(self, cone, x, y):
        """Wedge membership with spatial slack at the boundary rays.

        Windows get clipped by roughly eps_w during envelope competition, so a
        point sitting exactly on a wedge border ray can land just outside the
        stored span. Signed perpendicular distances to the two rays with a
        10*eps_w allowance absorb that.
        """
        if not cone.wedges:
            return True
        tol = 10.0 * self.eps_w
        for S, P0, P1 in cone.wedges:
            if math.hypot(x - S[0], y - S[1]) <= tol:
                return True
            c1 = (P0[0] - S[0]) * (y - S[1]) - (P0[1] - S[1]) * (x - S[0])
            c2 = (P1[0] - S[0]) * (y - S[1]) - (P1[1] - S[1]) * (x - S[0])
            d1 = c1 / (math.hypot(P0[0] - S[0], P0[1] - S[1]) + 1e-300)
            d2 = c2 / (math.hypot(P1[0] - S[0], P1[1] - S[1]) + 1e-300)
            if not (min(d1, d2) > tol or max(d1, d2) < -tol):
                return True
        return False

    def _is_tied_minimum(self, cones, i, j, x, y, vtol):
        """cones[i], cones[j] tie at (x, y) and no valid cone beats them."""
        ci, cj = cones[i], cones[j]
        vi, vj = ci.value(x, y), cj.value(x, y)
        if abs(vi - vj) > vtol:
            return False
        if not (self._cone_valid_at(ci, x, y) and self._cone_valid_at(cj, x, y)):
            return False
        d = 0.5 * (vi + vj)
        for k, ck in enumerate(cones):
            if k in (i, j):
                continue
            if ck.value(x, y) < d - vtol and self._cone_valid_at(ck, x, y):
                return False
        return True

    def _face_candidates(self, f, cones):
        """Candidate GVD points of face f: (kind, key, xy, value, pair)."""
        m = self.mesh
        corners = self.field.face_corners_2d(f)
        verts = [int(v) for v in m.faces[f]]
        vtol = 20.0 * self.eps_w
        snap = 10.0 * self.eps_w
        out = []

        def classify(x, y, pair, value):
            # snap to a corner, then to an edge, then keep as interior
            for k in range(3):
                if math.hypot(x - corners[k][0], y - corners[k][1]) <= snap:
                    return ("vertex", verts[k], (x, y), value, pair)
            for k in range(3):
                A, B = corners[k], corners[(k + 1) % 3]
                ex, ey = B[0] - A[0], B[1] - A[1]
                L = math.hypot(ex, ey)
                t = ((x - A[0]) * ex + (y - A[1]) * ey) / (L * L)
                dperp = abs((x - A[0]) * ey - (y - A[1]) * ex) / L
                if dperp <= snap and -snap <= t * L <= L + snap:
                    h = 3 * f + k
                    e = int(m.he_edge[h])
                    s_h = min(L, max(0.0, t * L))
                    param = s_h if int(m.edge_he[e]) == h else L - s_h
                    return ("edge", (e, param), (x, y), value, pair)
            return ("face", f, (x, y), value, pair)

        pairs = []
        for i in range(len(cones)):
            for j in range(i + 1, len(cones)):
                if cones[i].label == cones[j].label:
                    continue
                frame = self._bisector_frame(cones[i], cones[j])
                if frame is None:
                    continue
                pairs.append((i, j, frame))

        for (i, j, frame) in pairs:
            ci, cj = cones[i], cones[j]
            # crossings with the three face edges
            for k in range(3):
                A, B = corners[k], corners[(k + 1) % 3]
                ex, ey = B[0] - A[0], B[1] - A[1]
                L = math.hypot(ex, ey)
                ux, uy = ex / L, ey / L
                # both apexes in the edge-line frame (edge along +x from A)
                ai = ((ci.ax - A[0]) * ux + (ci.ay - A[1]) * uy,
                      -(ci.ax - A[0]) * uy + (ci.ay - A[1]) * ux)
                aj = ((cj.ax - A[0]) * ux + (cj.ay - A[1]) * uy,
                      -(cj.ax - A[0]) * uy + (cj.ay - A[1]) * ux)
                for t in cone_crossings_on_axis(
                    ai[0], ai[1], ci.d0, aj[0], aj[1], cj.d0, 0.0, L
                ):
                    x, y = A[0] + t * ux, A[1] + t * uy
                    if self._is_tied_minimum(cones, i, j, x, y, vtol):
                        out.append(classify(x, y, (i, j), ci.value(x, y)))
            # triple points inside the face; cluster-mates stay eligible as
            # the third cone (wedge borders refract arcs at such junctions)
            for k in range(len(cones)):
                if k == i or k == j:
                    continue
                ck = cones[k]
                for (zx, zy, dv) in equidistant_point(
                    [(ci.ax, ci.ay, ci.d0), (cj.ax, cj.ay, cj.d0), (ck.ax, ck.ay, ck.d0)]
                ):
                    if not self._point_near_face(corners, zx, zy, snap):
                        continue
                    if self._is_tied_minimum(cones, i, j, zx, zy, vtol):
                        out.append(classify(zx, zy, (i, j), dv))
        return out, pairs

    @staticmethod
    def _point_near_face(corners, x, y, pad):
        (ax, ay), (bx, by), (cx, cy) = corners
        d1 = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
        d2 = (cx - bx) * (y - by) - (cy - by) * (x - bx)
        d3 = (ax - cx) * (y - cy) - (ay - cy) * (x - cx)
        scale = max(abs(bx - ax), abs(by - ay), abs(cx - ax), abs(cy - ay), 1e-30)
        return d1 >= -pad * scale and d2 >= -pad * scale and d3 >= -pad * scale

    # ---------------- global assembly ------------------------------------------------

    def _build(self):
        m = self.mesh
        field = self.field
        self._vertex_on_boundary = np.zeros(m.n_vertices, dtype=bool)
        for h in range(m.n_halfedges):
            if m.he_twin[h] < 0:
                self._vertex_on_boundary[m.he_org[h]] = True
                self._vertex_on_boundary[m.he_head[h]] = True
        # cache window unfoldings per face for validity tests
        face_cones = []
        for f in range(m.n_faces):
            face_cones.append(self.face_cone_set(f))

        # phase 1: candidates everywhere
        cand_by_face = []
        pairs_by_face = []
        for f in range(m.n_faces):
            cands, pairs = self._face_candidates(f, face_cones[f])
            cand_by_face.append(cands)
            pairs_by_face.append(pairs)

        # phase 2: node registry with cross-face keys
        vkey = {}
        ekey = {}  # edge -> list of (param, node_id)
        fkey = {}  # face -> list of ((x, y), node_id)
        snap = 10.0 * self.eps_w

        def node_for(f, kind, key, xy, value):
            if kind == "vertex":
                v = key
                if v not in vkey:
                    nd = GVDNode(
                        len(self.nodes), "vertex", value, m.vertices[v].copy(),
                        vertex=v,
                        on_mesh_boundary=bool(self._vertex_on_boundary[v]),
                    )
                    self.nodes.append(nd)
                    vkey[v] = nd.id
                return vkey[v]
            if kind == "edge":
                e, param = key
                lst = ekey.setdefault(e, [])
                for (p0, nid) in lst:
                    if abs(p0 - param) <= snap:
                        return nid
                pos = field._edge_point_3d(e, param)
                nd = GVDNode(
                    len(self.nodes), "edge", value, pos, edge=e, param=param,
                    on_mesh_boundary=m.is_boundary_edge(e),
                )
                self.nodes.append(nd)
                lst.append((param, nd.id))
                return nd.id
            lst = fkey.setdefault(f, [])
            for ((x0, y0), nid) in lst:
                if math.hypot(x0 - xy[0], y0 - xy[1]) <= snap:
                    return nid
            pos = m.frame_to_3d(3 * f, xy[0], xy[1])
            nd = GVDNode(len(self.nodes), "face", value, pos, face=f)
            self.nodes.append(nd)
            lst.append((xy, nd.id))
            return nd.id

        # per face, per pair: node ids on that pair's bisector
        arc_seen = set()
        for f in range(m.n_faces):
            cones = face_cones[f]
            per_pair = {}
            for (kind, key, xy, value, pair) in cand_by_face[f]:
                nid = node_for(f, kind, key, xy, value)
                self.nodes[nid].sites.add(cones[pair[0]].site)
                self.nodes[nid].sites.add(cones[pair[1]].site)
                per_pair.setdefault(pair, []).append(nid)
            for (i, j, frame) in pairs_by_face[f]:
                nids = per_pair.get((i, j))
                if not nids:
                    continue
                uniq = {}
                for nid in nids:
                    uniq[nid] = self._node_param(frame, nid, f)
                order = sorted(uniq.items(), key=lambda kv: kv[1])
                vtol = 20.0 * self.eps_w
                for (na, ya), (nb, yb) in zip(order, order[1:]):
                    if yb - ya <= 1e-12 * (1.0 + abs(ya) + abs(yb)):
                        continue
                    ym = 0.5 * (ya + yb)
                    mx, my = self._bisector_point(frame, ym)
                    if not self._point_near_face(
                        self.field.face_corners_2d(f), mx, my, 1e-9
                    ):
                        continue
                    if not self._is_tied_minimum(cones, i, j, mx, my, vtol):
                        continue
                    ci, cj = cones[i], cones[j]
                    pseudo = ci.site == cj.site
                    akey = (min(na, nb), max(na, nb),
                            tuple(sorted((ci.site, cj.site))), pseudo)
                    # the same geometric arc can be rebuilt from the twin face
                    # when it runs along a shared mesh edge
                    if self._arc_on_edge(na, nb) and akey in arc_seen:
                        continue
                    arc_seen.add(akey)
                    self.arcs.append(
                        GVDArc(len(self.arcs), f, na, nb, ci, cj, pseudo, ya, yb, frame)
                    )

        self._assemble_chains()
        self._build_border_fragments()

    def _node_param(self, frame, nid, f):
        nd = self.nodes[nid]
        xy = self._node_xy_in_face(nd, f)
        return self._bisector_param(frame, xy[0], xy[1])

    def _node_xy_in_face(self, nd, f):
        m = self.mesh
        corners = self.field.face_corners_2d(f)
        if nd.kind == "vertex":
            for k in range(3):
                if int(m.faces[f][k]) == nd.vertex:
                    return corners[k]
            raise RuntimeError("vertex node not on face")
        if nd.kind == "edge":
            e = nd.edge
            he0 = int(m.edge_he[e])
            h = he0 if m.he_face(he0) == f else int(m.he_twin[he0])
            assert h >= 0 and m.he_face(h) == f
            s_h = nd.param if h == he0 else float(m.he_len[h]) - nd.param
            k = h % 3
            A, B = corners[k], corners[(k + 1) % 3]
            L = float(m.he_len[h])
            t = s_h / L
            return (A[0] + t * (B[0] - A[0]), A[1] + t * (B[1] - A[1]))
        assert nd.face == f
        o, u, w = m.he_frame(3 * f)
        d = nd.pos3d - o
        return (float(np.dot(d, u)), float(np.dot(d, w)))

    def _arc_on_edge(self, na, nb):
        a, b = self.nodes[na], self.nodes[nb]
        return a.kind in ("vertex", "edge") and b.kind in ("vertex", "edge")

    # ---------------- chains ---------------------------------------------------------

    def _assemble_chains(self):
        """Group arcs into maximal Voronoi edges (chains) per site pair."""
        by_label = {}
        for arc in self.arcs:
            sites = tuple(sorted((arc.cone0.site, arc.cone1.site)))
            by_label.setdefault((sites, arc.pseudo), []).append(arc)
        self.edges = []
        for (sites, pseudo), arcs in sorted(
            by_label.items(), key=lambda kv: (kv[0][0], kv[0][1])
        ):
            adj = {}
            for arc in arcs:
                adj.setdefault(arc.n0, []).append(arc)
                adj.setdefault(arc.n1, []).append(arc)

            def is_terminal(nid):
                if len(adj[nid]) != 2:
                    return True
                nd = self.nodes[nid]
                if len(nd.sites) > 2 and not pseudo:
                    return True
                return nd.on_mesh_boundary

            used = set()

            def walk(start, first_arc):
                chain = []
                cur_node, cur_arc = start, first_arc
                while True:
                    used.add(cur_arc.id)
                    chain.append(cur_arc)
                    cur_node = cur_arc.n1 if cur_arc.n0 == cur_node else cur_arc.n0
                    if is_terminal(cur_node):
                        return chain, cur_node, False
                    nxt = [a for a in adj[cur_node] if a.id not in used]
                    if not nxt:
                        return chain, cur_node, cur_node == start
                    cur_arc = nxt[0]

            for nid in sorted(adj):
                if not is_terminal(nid):
                    continue
                for arc in list(adj[nid]):
                    if arc.id in used:
                        continue
                    chain, end, _ = walk(nid, arc)
                    self.edges.append(
                        VoronoiEdge(
                            len(self.edges), sites, chain, nid, end, pseudo, False
                        )
                    )
            # leftovers have no terminal node: closed loops
            for arc in arcs:
                if arc.id in used:
                    continue
                chain, _end, _ = walk(arc.n0, arc)
                self.edges.append(
                    VoronoiEdge(len(self.edges), sites, chain, -1, -1, pseudo, True)
                )

    # ---------------- boundary fragments ----------------------------------------------

    def _build_border_fragments(self):
        """Split mesh boundary loops at GVD endpoints; label each piece's cell."""
        m = self.mesh
        self.border_fragments = []
        loops = boundary_loops(m)
        if not loops:
            return
        # endpoint nodes keyed by (edge, param) / vertex
        stops_by_edge = {}
        stop_vertices = {}
        for nd in self.nodes:
            if not nd.on_mesh_boundary:
                continue
            if nd.kind == "edge":
                stops_by_edge.setdefault(nd.edge, []).append((nd.param, nd.id))
            elif nd.kind == "vertex":
                stop_vertices[nd.vertex] = nd.id
        for loop_id, loop in enumerate(loops):
            # loop is a list of boundary halfedges in order
            stations = []  # (position along loop, node id or None at corners)
            for h in loop:
                e = int(m.he_edge[h])
                L = m.edge_length(e)
                ents = sorted(stops_by_edge.get(e, []))
                # params measured along the halfedge's own direction
                he0 = int(m.edge_he[e])
                segs = [(p if h == he0 else L - p, nid) for (p, nid) in ents]
                segs.sort()
                vstart = int(m.he_org[h])
                stations.append(("v", vstart, stop_vertices.get(vstart)))
                for s, nid in segs:
                    stations.append(("e", (e, h, s), nid))
            # split the cyclic station list at real GVD nodes
            cut_idx = [k for k, st in enumerate(stations) if st[2] is not None]
            if not cut_idx:
                winner = self._border_winner(loop[0], 0.5)
                self.border_fragments.append(
                    {
                        "sites": {winner},
                        "loop": loop,
                        "loop_id": loop_id,
                        "nodes": (),
                        "whole_loop": True,
                    }
                )
                continue
            for a_i, b_i in zip(cut_idx, cut_idx[1:] + [cut_idx[0] + len(stations)]):
                seg_sts = [stations[k % len(stations)] for k in range(a_i, b_i + 1)]
                winner = self._fragment_winner(seg_sts, loop, m)
                self.border_fragments.append(
                    {
                        "sites": {winner},
                        "nodes": (seg_sts[0][2], seg_sts[-1][2]),
                        "stations": seg_sts,
                        "loop": loop,
                        "loop_id": loop_id,
                        "whole_loop": False,
                    }
                )

    def _border_winner(self, h, t):
        m = self.mesh
        e = int(m.he_edge[h])
        he0 = int(m.edge_he[e])
        tt = t if h == he0 else 1.0 - t
        _d, site = self.field.distance_at(SurfacePoint.on_edge(e, tt))
        return site

    def _fragment_winner(self, seg_sts, loop, m):
        # sample midway between the first two stations of the fragment
        st = seg_sts[0]
        st2 = seg_sts[1] if len(seg_sts) > 1 else seg_sts[0]

        def station_pos(s):
            if s[0] == "v":
                return None
            e, h, along = s[1]
            L = m.edge_length(e)
            return (h, along / L)

        p2 = station_pos(st2)
        if p2 is not None:
            h, t2 = p2
            p1 = station_pos(st)
            t1 = p1[1] if p1 is not None and p1[0] == h else 0.0
            return self._border_winner(h, 0.5 * (t1 + t2))
        # fragment from a station to the next vertex: sample near the end
        p1 = station_pos(st)
        if p1 is not None:
            h, t1 = p1
            return self._border_winner(h, 0.5 * (t1 + 1.0))
        # vertex to vertex: whole halfedge between them
        h = None
        for hh in loop:
            if int(m.he_org[hh]) == st[1]:
                h = hh
                break
        return self._border_winner(h if h is not None else loop[0], 0.5)

    # ---------------- queries ----------------------------------------------------------

    def edge_winner_sequence(self, e):
        """Winner runs along mesh edge e: list of (site, b0, b1, window)."""
        runs = []
        for w in self.field.edge_envelope(e):
            if runs and runs[-1][0] == w.site:
                prev = runs[-1]
                if self._same_family(prev[3], w):
                    runs[-1] = (w.site, prev[1], w.b1, w)
                    continue
            runs.append((w.site, w.b0, w.b1, w))
        return runs

    def _same_family(self, w1, w2):
        # same unfolded apex, or one apex on the other's cone surface
        # (a shadow continuation); mirrored apexes are distinct families
        tol = 10.0 * self.eps_w
        sep = math.hypot(w1.sx - w2.sx, w1.sy - w2.sy)
        d1, d2 = w1.d0, w2.d0
        return sep <= tol or abs(d1 + sep - d2) <= tol or abs(d2 + sep - d1) <= tol

    def pseudo_edges(self):
        return [ed for ed in self.edges if ed.pseudo]

    def duplicate_pairs(self):
        """Site pairs connected by more than one regular Voronoi edge."""
        count = {}
        for ed in self.edges:
            if ed.pseudo:
                continue
            count[ed.sites] = count.get(ed.sites, 0) + 1
        return sorted(pair for pair, k in count.items() if k > 1)

    def cyclic_edges(self):
        return [ed for ed in self.edges if ed.cyclic]

    def site_adjacency(self):
        adj = set()
        for ed in self.edges:
            if not ed.pseudo:
                adj.add(ed.sites)
        return adj

    def surface_point_in_face(self, f, x, y):
        """Face-frame coordinates to a SurfacePoint, snapped to corner/edge."""
        m = self.mesh
        corners = self.field.face_corners_2d(f)
        snap = 10.0 * self.eps_w
        verts = [int(v) for v in m.faces[f]]
        for k in range(3):
            if math.hypot(x - corners[k][0], y - corners[k][1]) <= snap:
                return SurfacePoint.vertex(verts[k])
        for k in range(3):
            A, B = corners[k], corners[(k + 1) % 3]
            ex, ey = B[0] - A[0], B[1] - A[1]
            L = math.hypot(ex, ey)
            t = ((x - A[0]) * ex + (y - A[1]) * ey) / (L * L)
            dperp = abs((x - A[0]) * ey - (y - A[1]) * ex) / L
            if dperp <= snap and -snap <= t * L <= L + snap:
                h = 3 * f + k
                e = int(m.he_edge[h])
                s_h = min(L, max(0.0, t * L))
                tt = s_h / L if int(m.edge_he[e]) == h else 1.0 - s_h / L
                return SurfacePoint.on_edge(e, tt)
        (ax, ay), (bx, by), (cx, cy) = corners
        det = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay)
        u = ((x - ax) * (cy - ay) - (cx - ax) * (y - ay)) / det
        v = ((bx - ax) * (y - ay) - (x - ax) * (by - ay)) / det
        b = (max(0.0, 1.0 - u - v), max(0.0, u), max(0.0, v))
        return SurfacePoint.in_face(f, b)

    def node_surface_point(self, nid):
        nd = self.nodes[nid] if isinstance(nid, int) else nid
        if nd.kind == "vertex":
            return SurfacePoint.vertex(nd.vertex)
        if nd.kind == "edge":
            L = self.mesh.edge_length(nd.edge)
            return SurfacePoint.on_edge(nd.edge, nd.param / L)
        x, y = self._node_xy_in_face(nd, nd.face)
        return self.surface_point_in_face(nd.face, x, y)

    # ---------------- cell topology -----------------------------------------------------

    def cell_boundary_graph(self, s):
        """Boundary pieces of cell s: (n0, n1, kind, payload) plus whole loops.

        Pseudo arcs are interior ridges, not boundary, and are excluded.
        """
        pieces = []
        whole_loops = 0
        for ed in self.edges:
            if ed.pseudo or s not in ed.sites:
                continue
            for arc in ed.arcs:
                pieces.append((arc.n0, arc.n1, "arc", arc))
        for fr in self.border_fragments:
            if s not in fr["sites"]:
                continue
            if fr["whole_loop"]:
                whole_loops += 1
            else:
                a, b = fr["nodes"]
                pieces.append((a, b, "border", fr))
        return pieces, whole_loops

    def cell_topology(self, s):
        """Boundary structure of cell s.

        The cell is a closed disk exactly when its boundary is one simple
        cycle; distance cells are geodesically star shaped, hence connected,
        and a cell free of interior ridges retracts along shortest paths, so
        the single-cycle test certifies the disk.
        """
        pieces, whole_loops = self.cell_boundary_graph(s)
        deg = {}
        for (a, b, _k, _p) in pieces:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        degrees_ok = all(d == 2 for d in deg.values())
        parent = {n: n for n in deg}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for (a, b, _k, _p) in pieces:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[rb] = ra
        comps = len({find(n) for n in deg}) if deg else 0
        loops = comps + whole_loops if degrees_ok else None
        has_ridge = any(
            ed.pseudo and s in ed.sites for ed in self.edges
        )
        is_disk = (
            degrees_ok
            and loops == 1
            and not has_ridge
            and len(pieces) + whole_loops > 0
        )
        return {
            "site": s,
            "n_boundary_pieces": len(pieces),
            "degrees_ok": degrees_ok,
            "n_loops": loops,
            "has_interior_ridge": has_ridge,
            "is_disk": is_disk,
        }

    # ---------------- sampling / export ------------------------------------------------

    def sample_arc(self, arc, k=8):
        """k+1 3D points along the arc, plus its polyline length."""
        m = self.mesh
        pts = []
        for t in np.linspace(arc.y0, arc.y1, k + 1):
            x, y = self._bisector_point(arc.frame, float(t))
            pts.append(m.frame_to_3d(3 * arc.face, x, y))
        length = float(
            sum(np.linalg.norm(b - a) for a, b in zip(pts, pts[1:]))
        )
        return pts, length

    def to_json(self, path=None, samples_per_arc=8):
        obj = {
            "n_sites": len(self.field.sources),
            "nodes": [
                {
                    "id": nd.id,
                    "kind": nd.kind,
                    "value": nd.value,
                    "sites": sorted(nd.sites),
                    "position": [float(x) for x in nd.pos3d],
                    "on_mesh_boundary": bool(nd.on_mesh_boundary),
                }
                for nd in self.nodes
            ],
            "edges": [
                {
                    "id": ed.id,
                    "sites": list(ed.sites),
                    "pseudo": ed.pseudo,
                    "cyclic": ed.cyclic,
                    "nodes": [ed.n0, ed.n1],
                    "polyline": [
                        [float(x) for x in p]
                        for arc in ed.arcs
                        for p in self.sample_arc(arc, samples_per_arc)[0]
                    ],
                }
                for ed in self.edges
            ],
        }
        if path is not None:
            with open(path, "w") as fh:
                json.dump(obj, fh, indent=1)
        return obj

    def save_obj_polylines(self, path, samples_per_arc=8):
        """Voronoi edges as OBJ line records for quick inspection."""
        with open(path, "w") as fh:
            base = 1
            for ed in self.edges:
                for arc in ed.arcs:
                    pts, _ = self.sample_arc(arc, samples_per_arc)
                    for p in pts:
                        fh.write(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
                    idx = " ".join(str(base + i) for i in range(len(pts)))
                    fh.write(f"l {idx}\n")
                    base += len(pts)


def build_gvd(field):
    """Symbolic geodesic Voronoi diagram of a saturated distance field."""
    return VoronoiDiagram(field)
