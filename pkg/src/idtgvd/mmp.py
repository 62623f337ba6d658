"""Exact polyhedral geodesic distance fields via MMP window propagation.

Continuous-Dijkstra propagation of distance windows over mesh edges, in the
multi-source form: every source (mesh vertex, edge point, or face point)
emits windows, and each undirected edge keeps the lower envelope of all
windows that ever reached it.

Window bookkeeping
------------------
A window lives on an undirected edge ``e`` and is expressed in the canonical
frame of ``mesh.edge_he[e]``: the edge runs from (0,0) to (L,0) and the
canonical halfedge's face occupies y > 0.  The window covers arclength
params ``[b0, b1]`` and stores an unfolded pseudosource apex ``(sx, sy)``
with offset ``d0``, so the distance at param t is ``d0 + |(t,0) - (sx,sy)|``.
The sign of ``sy`` encodes the propagation side: ``sy < 0`` means the front
is about to enter the canonical face, ``sy > 0`` the twin face, ``sy == 0``
is an along-edge (flat) window that never crosses into a face.

Windows on one edge have disjoint interiors and, once propagation has
saturated, tile (0, L); equidistant overlaps are resolved toward the lowest
source id.  Pseudosources with d0 > 0 arise only from re-radiation at saddle
or boundary vertices; with every vertex acting as a source no re-radiation
can fire and all apexes are direct unfolded source images.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field as dc_field
from heapq import heappush, heappop

import numpy as np

from .geom import cone_crossings_on_axis, point_in_tri_2d
from .meshcore import Mesh, SurfacePoint

__all__ = ["Window", "DistanceField", "GeodesicPath", "propagate", "propagate_all_vertices"]


class Window:
    __slots__ = ("e", "b0", "b1", "sx", "sy", "d0", "site", "popped", "dead", "seq")

    def __init__(self, e, b0, b1, sx, sy, d0, site):
        self.e = e
        self.b0 = b0
        self.b1 = b1
        self.sx = sx
        self.sy = sy
        self.d0 = d0
        self.site = site
        self.popped = False
        self.dead = False
        self.seq = -1

    def value(self, t):
        return self.d0 + math.hypot(t - self.sx, self.sy)

    def min_value(self):
        if self.sx < self.b0:
            return self.d0 + math.hypot(self.b0 - self.sx, self.sy)
        if self.sx > self.b1:
            return self.d0 + math.hypot(self.b1 - self.sx, self.sy)
        return self.d0 + abs(self.sy)

    def clone(self, b0, b1):
        w = Window(self.e, b0, b1, self.sx, self.sy, self.d0, self.site)
        w.popped = self.popped
        return w

    def __repr__(self):
        return (
            f"Window(e={self.e}, [{self.b0:.6g},{self.b1:.6g}], "
            f"S=({self.sx:.6g},{self.sy:.6g}), d0={self.d0:.6g}, site={self.site})"
        )


@dataclass
class GeodesicPath:
    points: list
    length: float
    site: int
    crossed_edges: list = dc_field(default_factory=list)


def _product_nonpos_intervals(c0a, cda, c0b, cdb):
    """{t in [0,1] : (c0a + cda*t)(c0b + cdb*t) <= 0} as (lo, hi) pieces."""
    if cda == 0.0 and cdb == 0.0:
        return [(0.0, 1.0)] if c0a * c0b <= 0.0 else []
    if cda == 0.0 or cdb == 0.0:
        cconst, (c0, cd) = (c0a, (c0b, cdb)) if cda == 0.0 else (c0b, (c0a, cda))
        if cconst == 0.0:
            return [(0.0, 1.0)]
        t0 = -c0 / cd
        # need sign(c0 + cd*t) opposite to sign(cconst)
        if cconst * cd > 0.0:
            lo, hi = 0.0, min(1.0, t0)
        else:
            lo, hi = max(0.0, t0), 1.0
        return [(lo, hi)] if lo <= hi else []
    ta, tb = -c0a / cda, -c0b / cdb
    t1, t2 = (ta, tb) if ta <= tb else (tb, ta)
    if cda * cdb > 0.0:
        lo, hi = max(0.0, t1), min(1.0, t2)
        return [(lo, hi)] if lo <= hi else []
    pieces = []
    if t1 >= 0.0:
        pieces.append((0.0, min(1.0, t1)))
    if t2 <= 1.0:
        pieces.append((max(0.0, t2), 1.0))
    return [(lo, hi) for lo, hi in pieces if lo <= hi]


def _clip_wedge_to_segment(S, P0, P1, A, B):
    """Intersect the wedge (apex S, through P0 and P1) with segment AB.

    P0 None means an unrestricted fan: the whole segment.  Returns the
    clipped endpoints, or None when the forward wedge misses the segment.
    """
    dx, dy = B[0] - A[0], B[1] - A[1]
    if P0 is None:
        return A, B
    consts = []
    for P in (P0, P1):
        rx, ry = P[0] - S[0], P[1] - S[1]
        consts.append((rx * (A[1] - S[1]) - ry * (A[0] - S[0]), rx * dy - ry * dx))
    (c0a, cda), (c0b, cdb) = consts
    mx = 0.5 * (P0[0] + P1[0]) - S[0]
    my = 0.5 * (P0[1] + P1[1]) - S[1]
    for lo, hi in _product_nonpos_intervals(c0a, cda, c0b, cdb):
        tm = 0.5 * (lo + hi)
        qx, qy = A[0] + tm * dx - S[0], A[1] + tm * dy - S[1]
        # the double wedge test also admits the opposite cone; keep the
        # piece the window actually radiates toward
        if qx * mx + qy * my >= 0.0:
            return (
                (A[0] + lo * dx, A[1] + lo * dy),
                (A[0] + hi * dx, A[1] + hi * dy),
            )
    return None


class DistanceField:
    """Saturated window envelope plus per-vertex nearest-site data."""

    def __init__(self, mesh: Mesh, sources, eps=None):
        self.mesh = mesh
        self.sources = list(sources)
        self.eps_w = eps if eps is not None else 1e-7 * mesh.bbox_diag
        self.windows = [[] for _ in range(mesh.n_edges)]
        n = mesh.n_vertices
        self.vertex_dist = np.full(n, np.inf)
        self.vertex_site = np.full(n, -1, dtype=np.int64)
        self.vertex_window = [None] * n
        self._heap = []
        self._seq = 0
        self._saddle = self._find_reradiators()
        self._touched_edges = set()
        self.max_radius = None

    # -- setup -----------------------------------------------------------------

    def _find_reradiators(self):
        """Vertices where geodesics may bend: saddles and boundary vertices."""
        m = self.mesh
        angle = np.zeros(m.n_vertices)
        for h in range(m.n_halfedges):
            la = m.he_len[h]
            lb = m.he_len[m.he_next(h)]
            lc = m.he_len[m.he_prev(h)]
            # interior angle at org(h), between sides h and prev(h)
            cosv = (la * la + lc * lc - lb * lb) / (2.0 * la * lc)
            angle[m.he_org[h]] += math.acos(min(1.0, max(-1.0, cosv)))
        out = angle > 2.0 * math.pi + 1e-9
        for h in range(m.n_halfedges):
            if m.he_twin[h] < 0:
                out[m.he_org[h]] = True
                out[m.he_head[h]] = True
        return out

    # -- frames ------------------------------------------------------------------

    def _edge_param_of_vertex(self, e, v):
        h = int(self.mesh.edge_he[e])
        if self.mesh.he_org[h] == v:
            return 0.0
        assert self.mesh.he_head[h] == v
        return float(self.mesh.he_len[h])

    def _point2d_in_he_frame(self, h, p3d):
        o, u, w = self.mesh.he_frame(h)
        d = p3d - o
        return float(np.dot(d, u)), float(np.dot(d, w))

    def _canonicalize(self, h, b0, b1, sx, sy):
        """Map window data from halfedge h's frame to its edge's canonical frame."""
        he0 = int(self.mesh.edge_he[self.mesh.he_edge[h]])
        if he0 == h:
            return b0, b1, sx, sy
        L = float(self.mesh.he_len[h])
        return L - b1, L - b0, L - sx, -sy

    # -- seeding -------------------------------------------------------------------

    def _push(self, w):
        key = w.min_value()
        if self.max_radius is not None and key > self.max_radius:
            return
        w.seq = self._seq
        self._seq += 1
        heappush(self._heap, (key, w.seq, w))

    def _update_vertex(self, v, val, site, window):
        if val >= self.vertex_dist[v] - 1e-13 * (1.0 + abs(val)):
            return
        self.vertex_dist[v] = val
        self.vertex_site[v] = site
        self.vertex_window[v] = window
        if self._saddle[v] and not (
            self.max_radius is not None and val > self.max_radius
        ):
            self._seed_vertex_fan(v, site, val)

    def _seed_vertex_fan(self, v, site, d0):
        """Emit the full window fan of a (pseudo)source sitting at vertex v."""
        m = self.mesh
        h_last = -1
        for h in m.vertex_star(v):
            h_last = h
            e = int(m.he_edge[h])
            L = m.edge_length(e)
            tv = self._edge_param_of_vertex(e, v)
            self._insert(Window(e, 0.0, L, tv, 0.0, d0, site))
            # window across the face of h, on the side opposite v
            h_opp = m.he_next(h)
            e_opp = int(m.he_edge[h_opp])
            ax, ay = m.apex_2d(h_opp)  # v's position in h_opp's frame
            L2 = m.edge_length(e_opp)
            b0, b1, sx, sy = self._canonicalize(h_opp, 0.0, L2, ax, ay)
            self._insert(Window(e_opp, b0, b1, sx, sy, d0, site))
        # at a boundary vertex the star yields outgoing halfedges only; the
        # clockwise-last incident edge appears solely as an incoming halfedge
        if h_last >= 0:
            h_in = m.he_prev(h_last)
            if m.he_twin[h_in] < 0 and m.he_head[h_in] == v:
                e = int(m.he_edge[h_in])
                L = m.edge_length(e)
                tv = self._edge_param_of_vertex(e, v)
                self._insert(Window(e, 0.0, L, tv, 0.0, d0, site))

    def _seed_source(self, site_id, sp: SurfacePoint):
        m = self.mesh
        if sp.kind == "vertex":
            v = sp.index
            if self.vertex_dist[v] > 0.0:
                self.vertex_dist[v] = 0.0
                self.vertex_site[v] = site_id
                self.vertex_window[v] = None
            self._seed_vertex_fan(v, site_id, 0.0)
            return

        p3d = sp.position(m)
        if sp.kind == "edge":
            e = sp.index
            h = int(m.edge_he[e])
            halfedges = [h] if m.he_twin[h] < 0 else [h, int(m.he_twin[h])]
            L = m.edge_length(e)
            tp = sp.t * L
            self._insert(Window(e, 0.0, L, tp, 0.0, 0.0, site_id))
            for hh in halfedges:
                # the source illuminates each adjacent face entirely
                for h2 in (m.he_next(hh), m.he_prev(hh)):
                    e2 = int(m.he_edge[h2])
                    sx, sy = self._point2d_in_he_frame(h2, p3d)
                    L2 = m.edge_length(e2)
                    b0, b1, sx, sy = self._canonicalize(h2, 0.0, L2, sx, sy)
                    self._insert(Window(e2, b0, b1, sx, sy, 0.0, site_id))
            for v in m.edge_endpoints(e):
                self._update_vertex(
                    int(v), float(np.linalg.norm(m.vertices[v] - p3d)), site_id, None
                )
            return

        if sp.kind == "face":
            f = sp.index
            for k in range(3):
                h = 3 * f + k
                e = int(m.he_edge[h])
                sx, sy = self._point2d_in_he_frame(h, p3d)
                L = m.edge_length(e)
                b0, b1, sx, sy = self._canonicalize(h, 0.0, L, sx, sy)
                self._insert(Window(e, b0, b1, sx, sy, 0.0, site_id))
            for v in m.faces[f]:
                self._update_vertex(
                    int(v), float(np.linalg.norm(m.vertices[v] - p3d)), site_id, None
                )
            return
        raise ValueError(f"bad source kind {sp.kind!r}")

    # -- envelope insertion -----------------------------------------------------------

    def _insert(self, w):
        """Trim w against edge e's envelope; insert and queue surviving pieces."""
        e = w.e
        eps_len = 1e-12 * (1.0 + self.mesh.edge_length(e))
        if w.b1 - w.b0 <= eps_len:
            return []
        lst = self.windows[e]
        self._touched_edges.add(e)
        pieces = [(w.b0, w.b1)]
        keep_old = []
        new_old = []
        for u in lst:
            if not pieces:
                keep_old.append(u)
                continue
            nxt_pieces = []
            u_parts = [(u.b0, u.b1)]
            for (p0, p1) in pieces:
                lo, hi = max(p0, u.b0), min(p1, u.b1)
                if hi - lo <= eps_len:
                    nxt_pieces.append((p0, p1))
                    continue
                cross = cone_crossings_on_axis(
                    w.sx, w.sy, w.d0, u.sx, u.sy, u.d0, lo, hi
                )
                marks = [lo] + cross + [hi]
                w_wins = []
                for a, b in zip(marks, marks[1:]):
                    if b - a <= eps_len:
                        continue
                    tm = 0.5 * (a + b)
                    vw, vu = w.value(tm), u.value(tm)
                    if vw < vu - self.eps_w:
                        win_new = True
                    elif vu < vw - self.eps_w:
                        win_new = False
                    elif w.site != u.site:
                        win_new = w.site < u.site
                    else:
                        win_new = False  # same-site tie: keep the old window
                    if win_new:
                        w_wins.append((a, b))
                merged = []
                for a, b in w_wins:
                    if merged and a - merged[-1][1] <= eps_len:
                        merged[-1] = (merged[-1][0], b)
                    else:
                        merged.append((a, b))
                # carve w's winning spans out of u
                u_next = []
                for (ua, ub) in u_parts:
                    cur = ua
                    for a, b in merged:
                        aa, bb = max(a, ua), min(b, ub)
                        if bb - aa <= eps_len:
                            continue
                        if aa - cur > eps_len:
                            u_next.append((cur, aa))
                        cur = max(cur, bb)
                    if ub - cur > eps_len:
                        u_next.append((cur, ub))
                u_parts = u_next
                # w survives outside the overlap plus on its winning spans
                if lo - p0 > eps_len:
                    nxt_pieces.append((p0, lo))
                nxt_pieces.extend(merged)
                if p1 - hi > eps_len:
                    nxt_pieces.append((hi, p1))
            nxt_pieces.sort()
            glued = []
            for a, b in nxt_pieces:
                if glued and a - glued[-1][1] <= eps_len:
                    glued[-1] = (glued[-1][0], b)
                else:
                    glued.append((a, b))
            pieces = glued
            if (
                len(u_parts) == 1
                and abs(u_parts[0][0] - u.b0) <= eps_len
                and abs(u_parts[0][1] - u.b1) <= eps_len
            ):
                keep_old.append(u)
            else:
                u.dead = True
                for (ua, ub) in u_parts:
                    if ub - ua <= eps_len:
                        continue
                    c = u.clone(ua, ub)
                    new_old.append(c)

        out = []
        for (a, b) in pieces:
            if b - a <= eps_len:
                continue
            if not out and a == w.b0 and b == w.b1:
                piece = w
            else:
                piece = w.clone(a, b)
            piece.b0, piece.b1 = a, b
            out.append(piece)

        if new_old or out or len(keep_old) != len(lst):
            lst[:] = keep_old
            for c in new_old:
                lst.append(c)
                if not c.popped:
                    self._push(c)
            lst.extend(out)
            lst.sort(key=lambda x: (x.b0, x.b1))

        if out:
            L = self.mesh.edge_length(e)
            he0 = int(self.mesh.edge_he[e])
            vo, vh = int(self.mesh.he_org[he0]), int(self.mesh.he_head[he0])
            for piece in out:
                self._push(piece)
                if piece.b0 <= self.eps_w:
                    self._update_vertex(vo, piece.value(0.0), piece.site, piece)
                if piece.b1 >= L - self.eps_w:
                    self._update_vertex(vh, piece.value(L), piece.site, piece)
        return out

    # -- propagation -------------------------------------------------------------------

    def _run(self):
        m = self.mesh
        while self._heap:
            key, _, w = heappop(self._heap)
            if w.dead or w.popped:
                continue
            w.popped = True
            if self.max_radius is not None and key > self.max_radius:
                continue
            if w.sy == 0.0:
                continue
            he0 = int(m.edge_he[w.e])
            if w.sy < 0.0:
                g_he = he0
                b0, b1, sx, sy = w.b0, w.b1, w.sx, w.sy
            else:
                g_he = int(m.he_twin[he0])
                if g_he < 0:
                    continue  # boundary edge: the front stops here
                L = float(m.he_len[he0])
                b0, b1, sx, sy = L - w.b1, L - w.b0, L - w.sx, -w.sy
            self._propagate_through(w, g_he, b0, b1, sx, sy)

    def _propagate_through(self, w, g_he, b0, b1, sx, sy):
        """Extend window w across face(g_he); inputs are in g_he's frame, sy < 0."""
        m = self.mesh
        L = float(m.he_len[g_he])
        cx, cy = m.apex_2d(g_he)
        hn = m.he_next(g_he)  # runs (L,0) -> (cx,cy)
        hp = m.he_prev(g_he)  # runs (cx,cy) -> (0,0)
        for h2, P, Q in ((hn, (L, 0.0), (cx, cy)), (hp, (cx, cy), (0.0, 0.0))):
            lo, hi = self._wedge_clip(sx, sy, b0, b1, P, Q)
            if lo is None or hi - lo < 1e-13:
                continue
            l2 = float(m.he_len[h2])
            ux, uy = (Q[0] - P[0]) / l2, (Q[1] - P[1]) / l2
            dxs, dys = sx - P[0], sy - P[1]
            ax = dxs * ux + dys * uy
            ay = -dxs * uy + dys * ux
            # genuine wedge exits keep the apex strictly on the source side
            if ay < 1e-13 * (1.0 + abs(ax)):
                continue
            e2 = int(m.he_edge[h2])
            nb0, nb1, nsx, nsy = self._canonicalize(h2, lo * l2, hi * l2, ax, ay)
            self._insert(Window(e2, nb0, nb1, nsx, nsy, w.d0, w.site))

    @staticmethod
    def _wedge_clip(sx, sy, b0, b1, P, Q):
        """Params u in [0,1] of segment P->Q lit from (sx,sy) through (b0,b1).

        The apex sits strictly below the x-axis and P, Q at y >= 0, so the
        crossing abscissa c(u) of segment apex->X(u) with the x-axis is a
        monotone projective function of u; the lit set is its preimage of
        [b0, b1].
        """

        def cross_x(Xx, Xy):
            t = -sy / (Xy - sy)
            return sx + t * (Xx - sx)

        cP = cross_x(P[0], P[1])
        cQ = cross_x(Q[0], Q[1])
        inc = cP <= cQ
        c_lo, c_hi = (cP, cQ) if inc else (cQ, cP)
        if c_hi < b0 or c_lo > b1:
            return None, None

        def solve(btarget):
            # u where apex, (btarget, 0), X(u) are collinear; linear in u
            rx, ry = btarget - sx, -sy
            dx0, dy0 = P[0] - sx, P[1] - sy
            dxd, dyd = Q[0] - P[0], Q[1] - P[1]
            den = dxd * ry - dyd * rx
            num = rx * dy0 - ry * dx0
            if den == 0.0:
                return None
            return num / den

        if inc:
            u_lo = 0.0 if b0 <= cP else solve(b0)
            u_hi = 1.0 if b1 >= cQ else solve(b1)
        else:
            u_lo = 0.0 if b1 >= cP else solve(b1)
            u_hi = 1.0 if b0 <= cQ else solve(b0)
        if u_lo is None or u_hi is None:
            return None, None
        u_lo, u_hi = max(0.0, min(u_lo, u_hi)), min(1.0, max(u_lo, u_hi))
        if u_hi <= u_lo:
            return None, None
        return u_lo, u_hi

    # -- queries ---------------------------------------------------------------------

    def edge_envelope(self, e):
        return sorted(self.windows[e], key=lambda w: (w.b0, w.b1))

    def distance_at(self, sp: SurfacePoint):
        """Geodesic distance to the nearest source, and that source's id."""
        m = self.mesh
        if sp.kind == "vertex":
            return float(self.vertex_dist[sp.index]), int(self.vertex_site[sp.index])

        if sp.kind == "edge":
            e = sp.index
            L = m.edge_length(e)
            s = sp.t * L
            best = (math.inf, -1)
            for w in self.windows[e]:
                if w.b0 - self.eps_w <= s <= w.b1 + self.eps_w:
                    best = self._better(best, w.value(s), w.site)
            he0 = int(m.edge_he[e])
            vo, vh = int(m.he_org[he0]), int(m.he_head[he0])
            if math.isfinite(self.vertex_dist[vo]):
                best = self._better(best, float(self.vertex_dist[vo]) + s,
                                    int(self.vertex_site[vo]))
            if math.isfinite(self.vertex_dist[vh]):
                best = self._better(best, float(self.vertex_dist[vh]) + (L - s),
                                    int(self.vertex_site[vh]))
            return best

        if sp.kind == "face":
            f = sp.index
            q2d = self.point2d_in_face(sp, f)
            return self.distance_at_face_point(f, q2d)
        raise ValueError(f"bad query kind {sp.kind!r}")

    def _better(self, best, val, site):
        """Fold one distance candidate into (value, site) with tie-breaking."""
        if not math.isfinite(val) or site < 0:
            return best
        bv, bs = best
        if val < bv - self.eps_w:
            return (val, site)
        if val <= bv + self.eps_w:
            return (min(val, bv), site if (bs < 0 or site < bs) else bs)
        return best

    def distance_at_face_point(self, f, query2d):
        best = (math.inf, -1)
        for site, ax, ay, d0, _wedge, _w in self.face_cones(f, query2d):
            val = d0 + math.hypot(query2d[0] - ax, query2d[1] - ay)
            best = self._better(best, val, site)
        return best

    # -- in-face cone structure ----------------------------------------------------------

    def face_corners_2d(self, f):
        m = self.mesh
        h = 3 * f
        L = float(m.he_len[h])
        cx, cy = m.apex_2d(h)
        return [(0.0, 0.0), (L, 0.0), (cx, cy)]

    def window_apex_in_face(self, w, f):
        """Apex and covered edge segment of window w unfolded into f's frame."""
        m = self.mesh
        he0 = int(m.edge_he[w.e])
        if m.he_face(he0) == f:
            h = he0
            b0, b1, sx, sy = w.b0, w.b1, w.sx, w.sy
        else:
            h = int(m.he_twin[he0])
            assert h >= 0 and m.he_face(h) == f
            L = float(m.he_len[he0])
            b0, b1, sx, sy = L - w.b1, L - w.b0, L - w.sx, -w.sy
        corners = self.face_corners_2d(f)
        k = h % 3  # org(h) is corner k of the face
        A = corners[k]
        B = corners[(k + 1) % 3]
        Lh = float(m.he_len[h])
        ux, uy = (B[0] - A[0]) / Lh, (B[1] - A[1]) / Lh

        def mapxy(x, y):
            return A[0] + x * ux - y * uy, A[1] + x * uy + y * ux

        return mapxy(sx, sy), mapxy(b0, 0.0), mapxy(b1, 0.0)

    def window_enters_face(self, w, f):
        m = self.mesh
        if w.sy == 0.0:
            return False
        he0 = int(m.edge_he[w.e])
        if m.he_face(he0) == f:
            return w.sy < 0.0
        tw = int(m.he_twin[he0])
        if tw < 0 or m.he_face(tw) != f:
            return False
        return w.sy > 0.0

    def face_cones(self, f, query2d=None, extend=True):
        """Distance cones on face f: (site, ax, ay, d0, wedge|None, window|None).

        ``wedge`` is the validity triple (S, P0, P1) in f's frame; cones with
        wedge None (corner cones, in-face sources) are valid everywhere on f.
        With ``query2d`` set, wedge cones are filtered to those containing
        the query point.  ``extend`` adds one-step continuations of
        neighbor-face cones across each edge (see _continued_cones); those
        carry window None and cannot be backtraced.
        """
        m = self.mesh
        corners = self.face_corners_2d(f)
        cones = []
        for k in range(3):
            e = int(m.he_edge[3 * f + k])
            for w in self.windows[e]:
                if not self.window_enters_face(w, f):
                    continue
                S, P0, P1 = self.window_apex_in_face(w, f)
                cones.append((w.site, S[0], S[1], w.d0, (S, P0, P1), w))
        for k in range(3):
            v = int(m.faces[f][k])
            dv = float(self.vertex_dist[v])
            if math.isfinite(dv):
                cones.append(
                    (int(self.vertex_site[v]), corners[k][0], corners[k][1], dv, None, None)
                )
        face_edges = {int(m.he_edge[3 * f + k]) for k in range(3)}
        for sid, sp in enumerate(self.sources):
            if sp.kind == "face" and sp.index == f:
                Sx = sum(b * c[0] for b, c in zip(sp.bary, corners))
                Sy = sum(b * c[1] for b, c in zip(sp.bary, corners))
                cones.append((sid, Sx, Sy, 0.0, None, None))
            elif sp.kind == "edge" and sp.index in face_edges:
                # the source's window on its own edge is flat and never
                # enters either face, so expose it as a zero-offset cone
                Sx, Sy = self.point2d_in_face(sp, f)
                cones.append((sid, Sx, Sy, 0.0, None, None))
        if extend:
            cones.extend(self._continued_cones(f, corners))
        if query2d is not None:
            qx, qy = query2d
            kept = []
            for c in cones:
                wedge = c[4]
                if wedge is not None:
                    S, P0, P1 = wedge
                    c1 = (P0[0] - S[0]) * (qy - S[1]) - (P0[1] - S[1]) * (qx - S[0])
                    c2 = (P1[0] - S[0]) * (qy - S[1]) - (P1[1] - S[1]) * (qx - S[0])
                    if c1 * c2 > 0.0:
                        continue
                kept.append(c)
            return kept
        return cones

    def _continued_cones(self, f, corners):
        """One-step continuations of neighbor-face fields across f's edges.

        An exact tie on an edge keeps a single winner in that edge's
        envelope, so the losing wavefront becomes invisible inside f even
        though the equidistant locus it supports runs through f (mirror
        symmetric meshes put whole edges on such loci).  Neighbor windows
        and sources whose value on the shared edge stays within a whisker
        of the envelope are unfolded across it, wedges clipped to the
        crossed span.
        """
        m = self.mesh
        band = 40.0 * self.eps_w
        out = []
        for k in range(3):
            h = 3 * f + k
            tw = int(m.he_twin[h])
            if tw < 0:
                continue
            g = m.he_face(tw)
            A, B = corners[k], corners[(k + 1) % 3]
            e = int(m.he_edge[h])
            gcorners = self.face_corners_2d(g)
            k2 = tw % 3
            Q0, Q1 = gcorners[k2], gcorners[(k2 + 1) % 3]  # = B, A on the surface
            Lg = math.hypot(Q1[0] - Q0[0], Q1[1] - Q0[1])
            ugx, ugy = (Q1[0] - Q0[0]) / Lg, (Q1[1] - Q0[1]) / Lg
            Lf = math.hypot(A[0] - B[0], A[1] - B[1])
            ufx, ufy = (A[0] - B[0]) / Lf, (A[1] - B[1]) / Lf
            rc = ugx * ufx + ugy * ufy
            rs = ugx * ufy - ugy * ufx

            def to_f(p, Q0=Q0, B=B, rc=rc, rs=rs):
                dx, dy = p[0] - Q0[0], p[1] - Q0[1]
                return (B[0] + rc * dx - rs * dy, B[1] + rs * dx + rc * dy)

            cand = []
            g_edges = {int(m.he_edge[3 * g + k3]) for k3 in range(3)}
            for k3 in range(3):
                e2 = int(m.he_edge[3 * g + k3])
                if e2 == e:
                    continue
                for w in self.windows[e2]:
                    if not self.window_enters_face(w, g):
                        continue
                    S, P0, P1 = self.window_apex_in_face(w, g)
                    cand.append((w.site, w.d0, to_f(S), to_f(P0), to_f(P1)))
            for sid, sp in enumerate(self.sources):
                if (sp.kind == "face" and sp.index == g) or (
                    sp.kind == "edge" and sp.index != e and sp.index in g_edges
                ):
                    cand.append((sid, 0.0, to_f(self.point2d_in_face(sp, g)), None, None))
            va, vb = int(m.he_org[h]), int(m.he_head[h])
            for k3 in range(3):
                v = int(m.faces[g][k3])
                if v == va or v == vb:
                    continue  # shared corners are f's own corner cones
                dv = float(self.vertex_dist[v])
                if math.isfinite(dv):
                    cand.append(
                        (int(self.vertex_site[v]), dv, to_f(gcorners[k3]), None, None)
                    )
            for site, d0, S, P0, P1 in cand:
                span = _clip_wedge_to_segment(S, P0, P1, A, B)
                if span is None:
                    continue
                W0, W1 = span
                mid = (0.5 * (W0[0] + W1[0]), 0.5 * (W0[1] + W1[1]))
                for q in (W0, W1, mid):
                    val = d0 + math.hypot(q[0] - S[0], q[1] - S[1])
                    s_h = math.hypot(q[0] - A[0], q[1] - A[1])
                    if val <= self._edge_reference_dist(e, h, s_h) + band:
                        out.append((site, S[0], S[1], d0, (S, W0, W1), None))
                        break
        return out

    def _edge_reference_dist(self, e, h, s_h):
        """Smallest known distance at arclength s_h along halfedge h of edge e."""
        m = self.mesh
        he0 = int(m.edge_he[e])
        L = float(m.he_len[he0])
        t = s_h if h == he0 else L - s_h
        best = math.inf
        for w in self.windows[e]:
            if w.b0 - self.eps_w <= t <= w.b1 + self.eps_w:
                tt = min(w.b1, max(w.b0, t))
                best = min(best, w.value(tt))
        dvo = float(self.vertex_dist[int(m.he_org[he0])])
        dvh = float(self.vertex_dist[int(m.he_head[he0])])
        if math.isfinite(dvo):
            best = min(best, dvo + t)
        if math.isfinite(dvh):
            best = min(best, dvh + (L - t))
        return best

    def point2d_in_face(self, sp: SurfacePoint, f):
        """2D coords in f's frame of a surface point lying on face f."""
        corners = self.face_corners_2d(f)
        m = self.mesh
        if sp.kind == "face":
            assert sp.index == f
            x = sum(b * c[0] for b, c in zip(sp.bary, corners))
            y = sum(b * c[1] for b, c in zip(sp.bary, corners))
            return x, y
        p3d = sp.position(m)
        o, u, w = m.he_frame(3 * f)
        d = p3d - o
        return float(np.dot(d, u)), float(np.dot(d, w))

    # -- path backtrace ---------------------------------------------------------------

    def trace_path(self, sp: SurfacePoint):
        """Geodesic polyline from sp back to its nearest source."""
        m = self.mesh
        if sp.kind == "vertex":
            v = sp.index
            site = int(self.vertex_site[v])
            if site < 0:
                raise RuntimeError(f"vertex {v} has no distance information")
            if self.vertex_dist[v] == 0.0:
                return GeodesicPath([m.vertices[v].copy()], 0.0, site)
            w = self.vertex_window[v]
            if w is None:
                spos = self.sources[site].position(m)
                pts = [m.vertices[v].copy(), spos]
                return GeodesicPath(pts, float(np.linalg.norm(pts[1] - pts[0])), site)
            t = self._edge_param_of_vertex(w.e, v)
            tail = self._trace_from_window(w, t)
            pts = [m.vertices[v].copy()] + tail.points[1:]
            return GeodesicPath(pts, tail.length, site, tail.crossed_edges)

        if sp.kind == "edge":
            e = sp.index
            L = m.edge_length(e)
            s = sp.t * L
            dist, site = self.distance_at(sp)
            bestw = None
            for w in self.windows[e]:
                if w.b0 - self.eps_w <= s <= w.b1 + self.eps_w and w.site == site:
                    if bestw is None or w.value(s) < bestw.value(s):
                        bestw = w
            if bestw is not None and bestw.value(s) <= dist + self.eps_w:
                return self._trace_from_window(bestw, s)
            he0 = int(m.edge_he[e])
            vo, vh = int(m.he_org[he0]), int(m.he_head[he0])
            p0 = sp.position(m)
            v = vo if self.vertex_dist[vo] + s <= self.vertex_dist[vh] + (L - s) else vh
            tail = self.trace_path(SurfacePoint.vertex(v))
            seg = float(np.linalg.norm(p0 - tail.points[0]))
            return GeodesicPath([p0] + tail.points, seg + tail.length, tail.site,
                                tail.crossed_edges)

        f = sp.index
        q2d = self.point2d_in_face(sp, f)
        # backtracing needs real windows, so skip the continued cones
        cones = self.face_cones(f, q2d, extend=False)
        if not cones:
            raise RuntimeError(f"no distance information on face {f}")
        best = min(cones, key=lambda c: (c[3] + math.hypot(q2d[0] - c[1], q2d[1] - c[2]), c[0]))
        site, ax, ay, d0, _wedge, w = best
        p0 = sp.position(m)
        if w is None:
            corners = self.face_corners_2d(f)
            vcorn = None
            for k, c in enumerate(corners):
                if math.hypot(c[0] - ax, c[1] - ay) < 1e-9 * (1 + m.bbox_diag):
                    vcorn = int(m.faces[f][k])
            if vcorn is None:
                # direct in-face source
                spos = self.sources[site].position(m)
                seg = math.hypot(q2d[0] - ax, q2d[1] - ay)
                return GeodesicPath([p0, spos], seg, site)
            tail = self.trace_path(SurfacePoint.vertex(vcorn))
            seg = float(np.linalg.norm(p0 - tail.points[0]))
            return GeodesicPath([p0] + tail.points, seg + tail.length, site,
                                tail.crossed_edges)
        tcross = self._crossing_param_on_edge(w, f, q2d)
        tail = self._trace_from_window(w, tcross)
        seg = float(np.linalg.norm(p0 - tail.points[0]))
        return GeodesicPath([p0] + tail.points, seg + tail.length, site,
                            [w.e] + tail.crossed_edges)

    def _crossing_param_on_edge(self, w, f, q2d):
        """Canonical arclength where segment apex->query crosses w's edge."""
        m = self.mesh
        he0 = int(m.edge_he[w.e])
        h = he0 if m.he_face(he0) == f else int(m.he_twin[he0])
        S, _P0, _P1 = self.window_apex_in_face(w, f)
        corners = self.face_corners_2d(f)
        k = h % 3
        A, B = corners[k], corners[(k + 1) % 3]
        dx, dy = q2d[0] - S[0], q2d[1] - S[1]
        ex, ey = B[0] - A[0], B[1] - A[1]
        den = dx * ey - dy * ex
        if den == 0.0:
            u = 0.5
        else:
            u = ((A[0] - S[0]) * dy - (A[1] - S[1]) * dx) / den
            u = min(1.0, max(0.0, u))
        s_h = u * float(m.he_len[h])
        return s_h if h == he0 else float(m.he_len[h]) - s_h

    def _trace_from_window(self, w, t):
        """Backtrace from param t on w's edge through the unfolding to the apex.

        Maintains a running plane (the canonical frame of w's edge) containing
        the current point and the fixed apex; each iteration crosses one edge
        of the current face until the apex falls inside it.
        """
        m = self.mesh
        he0 = int(m.edge_he[w.e])
        pts = [self._edge_point_3d(w.e, t)]
        crossed = []

        if w.sy == 0.0:
            total = abs(t - w.sx)
            if w.d0 > 0.0:
                vend = self._vertex_at_param(w.e, w.sx)
                tail = self.trace_path(SurfacePoint.vertex(vend))
                return GeodesicPath(pts + tail.points, total + tail.length, w.site,
                                    crossed + tail.crossed_edges)
            return GeodesicPath(pts + [self._edge_point_3d(w.e, w.sx)], total, w.site,
                                crossed)

        # stand on the edge, walk into the face on the apex's side; A, B are
        # the running-plane positions of org/head of the halfedge whose face
        # we are entering
        if w.sy > 0.0:
            cur_h = he0
            A, B = (0.0, 0.0), (float(m.he_len[he0]), 0.0)
        else:
            cur_h = int(m.he_twin[he0])
            if cur_h < 0:
                raise RuntimeError("window apex on a nonexistent face side")
            A, B = (float(m.he_len[he0]), 0.0), (0.0, 0.0)
        x2 = (t, 0.0)
        S2 = (w.sx, w.sy)
        total = 0.0
        guard = 4 * m.n_faces + 16
        scale = 1.0 + m.bbox_diag
        while True:
            guard -= 1
            if guard < 0:
                raise RuntimeError("geodesic back-walk failed to terminate")
            Lh = float(m.he_len[cur_h])
            ux, uy = (B[0] - A[0]) / Lh, (B[1] - A[1]) / Lh
            ax_loc, ay_loc = m.apex_2d(cur_h)
            C = (A[0] + ax_loc * ux - ay_loc * uy, A[1] + ax_loc * uy + ay_loc * ux)
            if point_in_tri_2d(S2[0], S2[1], A[0], A[1], B[0], B[1], C[0], C[1],
                               eps=1e-9 * scale):
                total += math.hypot(S2[0] - x2[0], S2[1] - x2[1])
                endpoint = self._face_point_3d(cur_h, A, B, C, S2)
                pts.append(endpoint)
                if w.d0 > 0.0:
                    vend = self._nearest_face_vertex(m.he_face(cur_h), endpoint)
                    tail = self.trace_path(SurfacePoint.vertex(vend))
                    return GeodesicPath(pts + tail.points[1:], total + tail.length,
                                        w.site, crossed + tail.crossed_edges)
                return GeodesicPath(pts, total, w.site, crossed)
            hit = None
            for hh, P, Q in ((m.he_next(cur_h), B, C), (m.he_prev(cur_h), C, A)):
                u = self._seg_param(x2, S2, P, Q)
                if u is not None:
                    hit = (hh, P, Q, u)
                    break
            if hit is None:
                raise RuntimeError("geodesic back-walk lost the unfolding strip")
            hh, P, Q, u = hit
            xn = (P[0] + u * (Q[0] - P[0]), P[1] + u * (Q[1] - P[1]))
            crossed.append(int(m.he_edge[hh]))
            pts.append(self._he_point_3d(hh, u))
            tw = int(m.he_twin[hh])
            if tw < 0:
                raise RuntimeError("geodesic back-walk crossed a boundary edge")
            total += math.hypot(xn[0] - x2[0], xn[1] - x2[1])
            A, B = Q, P  # twin runs opposite: org(tw) = head(hh)
            cur_h = tw
            x2 = xn

    @staticmethod
    def _seg_param(x, s, P, Q):
        """Param on segment P->Q where ray x->s crosses it strictly after x."""
        dx, dy = s[0] - x[0], s[1] - x[1]
        ex, ey = Q[0] - P[0], Q[1] - P[1]
        den = dx * ey - dy * ex
        if den == 0.0:
            return None
        t = ((P[0] - x[0]) * ey - (P[1] - x[1]) * ex) / den
        u = ((P[0] - x[0]) * dy - (P[1] - x[1]) * dx) / den
        if t > 1e-12 and -1e-9 <= u <= 1.0 + 1e-9:
            return min(1.0, max(0.0, u))
        return None

    def _face_point_3d(self, cur_h, A, B, C, p2):
        """3D position of running-plane point p2 inside face(cur_h).

        A, B, C are the plane positions of org(cur_h), head(cur_h), and the
        face apex, in that order.
        """
        m = self.mesh
        det = (B[0] - A[0]) * (C[1] - A[1]) - (B[1] - A[1]) * (C[0] - A[0])
        l1 = ((p2[0] - A[0]) * (C[1] - A[1]) - (p2[1] - A[1]) * (C[0] - A[0])) / det
        l2 = ((B[0] - A[0]) * (p2[1] - A[1]) - (B[1] - A[1]) * (p2[0] - A[0])) / det
        l0 = 1.0 - l1 - l2
        va = m.vertices[m.he_org[cur_h]]
        vb = m.vertices[m.he_head[cur_h]]
        vc = m.vertices[m.he_head[m.he_next(cur_h)]]
        return l0 * va + l1 * vb + l2 * vc

    def _he_point_3d(self, h, u):
        m = self.mesh
        a = m.vertices[m.he_org[h]]
        b = m.vertices[m.he_head[h]]
        return a + u * (b - a)

    def _edge_point_3d(self, e, s):
        m = self.mesh
        h = int(m.edge_he[e])
        return self._he_point_3d(h, s / float(m.he_len[h]))

    def _vertex_at_param(self, e, s):
        m = self.mesh
        h = int(m.edge_he[e])
        return int(m.he_org[h]) if s < 0.5 * float(m.he_len[h]) else int(m.he_head[h])

    def _nearest_face_vertex(self, f, p3d):
        m = self.mesh
        d = np.linalg.norm(m.vertices[m.faces[f]] - p3d, axis=1)
        return int(m.faces[f][int(np.argmin(d))])

    # -- incremental sources ---------------------------------------------------------

    def insert_source(self, sp: SurfacePoint):
        """Add one source to a saturated field and re-run propagation.

        Returns (site_id, touched_faces): the faces adjacent to any edge whose
        envelope changed, i.e. the region whose distance data moved.
        """
        sid = len(self.sources)
        self.sources.append(sp)
        self._touched_edges = set()
        self._seed_source(sid, sp)
        self._run()
        m = self.mesh
        faces = set()
        for e in self._touched_edges:
            h = int(m.edge_he[e])
            faces.add(m.he_face(h))
            tw = int(m.he_twin[h])
            if tw >= 0:
                faces.add(m.he_face(tw))
        return sid, faces

    # -- window dump ------------------------------------------------------------------

    MAGIC = b"IDTW"
    VERSION = 1

    def dump_windows(self, path):
        """Little-endian binary dump of the per-edge window envelope.

        Layout: magic 'IDTW', u32 version, u64 n_edges, u64 n_windows, then
        for each edge a u32 count followed by its records, each packed
        '<5dq': b0, b1, sx, sy, d0 as f64 and the site id as i64.
        """
        buf = io.BytesIO()
        total = sum(len(lst) for lst in self.windows)
        buf.write(self.MAGIC)
        buf.write(struct.pack("<IQQ", self.VERSION, len(self.windows), total))
        for lst in self.windows:
            buf.write(struct.pack("<I", len(lst)))
            for w in sorted(lst, key=lambda x: (x.b0, x.b1)):
                buf.write(struct.pack("<5dq", w.b0, w.b1, w.sx, w.sy, w.d0, w.site))
        with open(path, "wb") as fh:
            fh.write(buf.getvalue())

    @classmethod
    def load_windows(cls, path):
        """Read a window dump back as per-edge lists of record tuples."""
        with open(path, "rb") as fh:
            data = fh.read()
        if data[:4] != cls.MAGIC:
            raise ValueError("not a window dump")
        version, n_edges, _total = struct.unpack_from("<IQQ", data, 4)
        if version != cls.VERSION:
            raise ValueError(f"unsupported window dump version {version}")
        off = 4 + struct.calcsize("<IQQ")
        rec = struct.Struct("<5dq")
        out = []
        for _ in range(n_edges):
            (cnt,) = struct.unpack_from("<I", data, off)
            off += 4
            lst = []
            for _ in range(cnt):
                lst.append(rec.unpack_from(data, off))
                off += rec.size
            out.append(lst)
        return out


def propagate(mesh, sources, max_radius=None, eps=None):
    """Run multi-source MMP propagation to saturation.

    ``sources`` is a list of SurfacePoints; source ids are list indices.
    ``max_radius`` truncates the front, leaving distances beyond it unset.
    """
    field = DistanceField(mesh, sources, eps=eps)
    field.max_radius = max_radius
    for sid, sp in enumerate(field.sources):
        field._seed_source(sid, sp)
    field._run()
    return field


def propagate_all_vertices(mesh, eps=None):
    """Saturated field with every vertex as its own source (site i = vertex i)."""
    return propagate(mesh, [SurfacePoint.vertex(v) for v in range(mesh.n_vertices)], eps=eps)
