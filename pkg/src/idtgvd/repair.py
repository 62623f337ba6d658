"""Closed-ball repairs for geodesic Voronoi diagrams.

A diagram dualizes to a triangulation only when every cell is a closed disk,
any two cells share at most one Voronoi edge, and (on bordered meshes) each
cell meets the mesh boundary in at most one point or arc while two cells meet
it in at most one point. Violations are destroyed by inserting auxiliary
sites:

* interior ridge (pseudo-bisector) in a cell -> site at the ridge point
  nearest the cell's own site (perpendicular foot of the unfolded segment,
  else an endpoint);
* two Voronoi edges between the same cell pair, or a closed Voronoi edge ->
  site at the nearest point of the first offending edge;
* cell touching the boundary in two components, or owning a whole loop ->
  site at the nearest boundary point of a far component;
* boundary loop covered by exactly two cells -> site at the cheaper of the
  two contact nodes, claiming it for a third cell.

Each insertion re-propagates the distance field locally (the new wavefront
dies wherever it loses) and the symbolic diagram is re-extracted. The driver
runs the three procedures to fixpoints, audits, and aborts past a 2n
insertion budget.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .meshcore import SurfacePoint
from .gvd import VoronoiDiagram, build_gvd


PSEUDO = "pseudo-bisector"
DUPLICATE = "duplicate-voronoi-edge"
BOUNDARY = "boundary-A1A2"


class RepairError(RuntimeError):
    """Raised when repair exceeds its insertion budget or cannot proceed."""


@dataclass
class AuxiliarySite:
    point: SurfacePoint
    reason: str  # PSEUDO | DUPLICATE | BOUNDARY
    parents: tuple
    value: float  # geodesic distance from the primary parent at insertion
    gap: float  # equidistance residual of the tie the site destroys
    site_id: int = -1

    def to_dict(self):
        return {
            "point": self.point.to_json(),
            "reason": self.reason,
            "parents": list(self.parents),
            "value": self.value,
            "gap": self.gap,
            "site_id": self.site_id,
        }


@dataclass
class RepairState:
    budget: int
    inserted: list = dfield(default_factory=list)
    counts: dict = dfield(
        default_factory=lambda: {PSEUDO: 0, DUPLICATE: 0, BOUNDARY: 0}
    )

    def record(self, aux):
        self.inserted.append(aux)
        self.counts[aux.reason] += 1
        if len(self.inserted) > self.budget:
            raise RepairError(
                f"insertion budget {self.budget} exhausted; "
                f"last insertion {aux.to_dict()}"
            )


def _default_state(vd):
    return RepairState(budget=2 * max(1, len(vd.field.sources)))


# ---------------- local update -----------------------------------------------------


def local_update(vd, sp):
    """Insert one source and rebuild the diagram.

    Returns (diagram, site_id, touched_faces). Distance data outside the
    newly claimed region is untouched; the symbolic layer is re-extracted.
    """
    d, _near = vd.field.distance_at(sp)
    if d <= vd.eps_w:
        raise ValueError("duplicate site: insertion point lies on an existing site")
    sid, touched = vd.field.insert_source(sp)
    return build_gvd(vd.field), sid, touched


# ---------------- argmin machinery --------------------------------------------------


def _chain_argmin(vd, chain, site):
    """Point of a Voronoi chain nearest to `site`: (value, gap, surface point).

    Values along one conic arc come from the arc's own cone: the distance to
    a focus is affine in the branch coordinate, so the minimum over the arc
    sits at the branch vertex y = 0, clamped to the arc's span.
    """
    best = None
    for arc in chain.arcs:
        cone = arc.cone0 if arc.cone0.site == site else arc.cone1
        other = arc.cone1 if cone is arc.cone0 else arc.cone0
        lo, hi = min(arc.y0, arc.y1), max(arc.y0, arc.y1)
        y = min(max(0.0, lo), hi)
        x, yy = VoronoiDiagram._bisector_point(arc.frame, y)
        val = cone.value(x, yy)
        if best is None or val < best[0]:
            gap = abs(val - other.value(x, yy))
            best = (val, gap, arc.face, (x, yy))
    val, gap, f, (x, y) = best
    return val, gap, _surface_point_in_face(vd, f, x, y)


def _surface_point_in_face(vd, f, x, y):
    return vd.surface_point_in_face(f, x, y)


def _fragment_intervals(m, fr):
    """Halfedge sub-intervals (h, t0, t1) covered by a border fragment."""
    loop = fr["loop"]
    he_of_org = {int(m.he_org[h]): h for h in loop}
    out = []
    cur_h, t0 = None, 0.0
    for st in fr["stations"]:
        if st[0] == "v":
            if cur_h is not None and t0 < 1.0:
                out.append((cur_h, t0, 1.0))
            cur_h, t0 = he_of_org[st[1]], 0.0
        else:
            e, h, s = st[1]
            t = s / m.edge_length(e)
            if cur_h is None:
                cur_h, t0 = h, t
            else:
                if t > t0:
                    out.append((h, t0, t))
                cur_h, t0 = h, t
    return out


def _loop_intervals(m, loop):
    return [(h, 0.0, 1.0) for h in loop]


def _distance_on_halfedge(vd, h, t):
    m = vd.mesh
    e = int(m.he_edge[h])
    tt = t if int(m.edge_he[e]) == h else 1.0 - t
    d, site = vd.field.distance_at(SurfacePoint.on_edge(e, tt))
    return d, site, e, tt


def _boundary_argmin(vd, intervals, n_samples=33):
    """Nearest-site minimum over boundary intervals: (value, surface point).

    Sampled scan plus a golden-section polish inside the best bracket. The
    fragments scanned here belong to the cell being repaired, so the nearest
    site is the cell's own and `distance_at` evaluates the right function.
    """
    m = vd.mesh
    best = None
    for (h, t0, t1) in intervals:
        for t in np.linspace(t0, t1, n_samples):
            d, _s, e, tt = _distance_on_halfedge(vd, h, float(t))
            if best is None or d < best[0]:
                best = (d, h, float(t), t0, t1)
    d, h, t, t0, t1 = best
    span = (t1 - t0) / (n_samples - 1)
    lo, hi = max(t0, t - span), min(t1, t + span)
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c1, c2 = b - phi * (b - a), a + phi * (b - a)
    f1 = _distance_on_halfedge(vd, h, c1)[0]
    f2 = _distance_on_halfedge(vd, h, c2)[0]
    for _ in range(60):
        if f1 < f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - phi * (b - a)
            f1 = _distance_on_halfedge(vd, h, c1)[0]
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + phi * (b - a)
            f2 = _distance_on_halfedge(vd, h, c2)[0]
    t = 0.5 * (a + b)
    d, _s, e, tt = _distance_on_halfedge(vd, h, t)
    # snap onto a loop vertex when the minimum sits at an interval end
    if tt <= 1e-7 or tt >= 1.0 - 1e-7:
        v = int(m.he_org[int(m.edge_he[e])] if tt <= 1e-7 else m.he_head[int(m.edge_he[e])])
        sp = SurfacePoint.vertex(v)
        dv, _sv = vd.field.distance_at(sp)
        if dv > vd.eps_w:
            return dv, sp
    return d, SurfacePoint.on_edge(e, tt)


def _node_surface_point(vd, nd):
    return vd.node_surface_point(nd)


# ---------------- boundary condition checks -----------------------------------------


def _boundary_components(vd, s):
    """Connected components of cell s's boundary trace.

    Returns (components, whole_loops) where each component is a dict with
    the fragments and isolated contact nodes it contains. Isolated contacts
    are boundary GVD nodes incident to the cell with no adjoining fragment.
    """
    frags = [
        fr
        for fr in vd.border_fragments
        if s in fr["sites"] and not fr["whole_loop"]
    ]
    whole = [fr for fr in vd.border_fragments if s in fr["sites"] and fr["whole_loop"]]
    contact = set()
    for nd in vd.nodes:
        if nd.on_mesh_boundary and s in nd.sites:
            contact.add(nd.id)
    items = [("frag", i) for i in range(len(frags))] + [
        ("node", n) for n in sorted(contact)
    ]
    parent = {it: it for it in items}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for i, fr in enumerate(frags):
        for n in fr["nodes"]:
            if ("node", n) in parent:
                union(("frag", i), ("node", n))
    comps = {}
    for it in items:
        comps.setdefault(find(it), []).append(it)
    out = []
    for members in comps.values():
        comp_frags = [frags[i] for (k, i) in members if k == "frag"]
        deg = {}
        for fr in comp_frags:
            for n in fr["nodes"]:
                deg[n] = deg.get(n, 0) + 1
        # a path has two odd-degree ends; all-even means the trace closes up
        closed = bool(comp_frags) and all(d % 2 == 0 for d in deg.values())
        out.append(
            {
                "fragments": comp_frags,
                "nodes": [n for (k, n) in members if k == "node"],
                "closed": closed,
            }
        )
    out.sort(key=lambda c: (len(c["fragments"]) == 0, c["nodes"][:1]))
    return out, whole


def check_boundary_conditions(vd):
    """A1/A2 report: cells with disconnected or circular boundary traces and
    boundary loops covered by fewer than three cells."""
    a1 = []
    sites = range(len(vd.field.sources))
    has_boundary = any(True for _ in vd.border_fragments)
    for s in sites:
        comps, whole = _boundary_components(vd, s)
        circular = any(c["closed"] for c in comps)
        if whole or circular or len(comps) > 1:
            a1.append(
                {
                    "site": s,
                    "n_components": len(comps),
                    "whole_loops": len(whole),
                    "circular": circular,
                }
            )
    by_loop = {}
    for fr in vd.border_fragments:
        if not fr["whole_loop"]:
            by_loop.setdefault(fr["loop_id"], []).append(fr)
    a2 = []
    for loop_id, frs in sorted(by_loop.items()):
        owners = {next(iter(fr["sites"])) for fr in frs}
        if len(owners) == 2:
            a2.append({"loop": loop_id, "owners": sorted(owners)})
    return {"a1": a1, "a2": a2, "ok": not a1 and not a2, "bordered": has_boundary}


# ---------------- audit --------------------------------------------------------------


def audit_closed_ball(vd):
    """Full closed-ball audit of a diagram.

    Checks every cell is a disk, no cell pair shares two Voronoi edges, no
    Voronoi edge is a closed curve, every interior Voronoi vertex bounds at
    least three cells (boundary vertices two), and the boundary conditions
    hold on bordered meshes.
    """
    sites = range(len(vd.field.sources))
    non_disk = [s for s in sites if not vd.cell_topology(s)["is_disk"]]
    dups = vd.duplicate_pairs()
    cyc = [ed.sites for ed in vd.cyclic_edges()]
    bad_nodes = []
    seen = set()
    for ed in vd.edges:
        if ed.pseudo:
            continue
        for nid in (ed.n0, ed.n1):
            if nid < 0 or nid in seen:
                continue
            seen.add(nid)
            nd = vd.nodes[nid]
            need = 2 if nd.on_mesh_boundary else 3
            if len(nd.sites) < need:
                bad_nodes.append(nid)
    boundary = check_boundary_conditions(vd)
    ok = (
        not non_disk
        and not dups
        and not cyc
        and not bad_nodes
        and boundary["ok"]
    )
    return {
        "ok": ok,
        "non_disk_cells": non_disk,
        "duplicate_pairs": [list(p) for p in dups],
        "cyclic_edges": [list(p) for p in cyc],
        "thin_voronoi_vertices": bad_nodes,
        "boundary": boundary,
    }


# ---------------- the three procedures -----------------------------------------------


def ensure_homeomorphism(vd, state=None):
    """Destroy interior ridges until every cell is a disk."""
    state = state or _default_state(vd)
    while True:
        ridges = vd.pseudo_edges()
        if not ridges:
            return vd
        ridges.sort(key=lambda ed: (ed.sites[0], ed.id))
        chain = ridges[0]
        s = chain.sites[0]
        val, gap, sp = _chain_argmin(vd, chain, s)
        vd, sid, _faces = local_update(vd, sp)
        state.record(
            AuxiliarySite(point=sp, reason=PSEUDO, parents=(s,), value=val, gap=gap, site_id=sid)
        )


def ensure_two_cell(vd, state=None):
    """Destroy duplicated and closed Voronoi edges."""
    state = state or _default_state(vd)
    while True:
        offenders = []
        dup = set(vd.duplicate_pairs())
        for ed in vd.edges:
            if ed.pseudo:
                continue
            if ed.sites in dup or ed.cyclic:
                offenders.append(ed)
        if not offenders:
            return vd
        offenders.sort(key=lambda ed: (ed.sites, ed.id))
        chain = offenders[0]
        i = chain.sites[0]
        val, gap, sp = _chain_argmin(vd, chain, i)
        vd, sid, _faces = local_update(vd, sp)
        state.record(
            AuxiliarySite(
                point=sp, reason=DUPLICATE, parents=chain.sites, value=val, gap=gap, site_id=sid
            )
        )


def ensure_boundary(vd, state=None):
    """Restore the bordered-mesh conditions; identity on closed meshes."""
    state = state or _default_state(vd)
    m = vd.mesh
    while True:
        report = check_boundary_conditions(vd)
        if report["ok"]:
            return vd
        if report["a1"]:
            s = report["a1"][0]["site"]
            comps, whole = _boundary_components(vd, s)
            target = _pick_far_component(vd, s, comps, whole)
            if target is None:
                raise RepairError(
                    f"cell {s} violates the boundary conditions with no "
                    "fragment to host an auxiliary site"
                )
            val, sp = target
            try:
                vd, sid, _faces = local_update(vd, sp)
            except ValueError as ex:
                # recurring sliver contacts (an acute boundary corner casts a
                # fresh sliver after every fix) shrink the gap geometrically
                # until the target collides with an existing site
                raise RepairError(
                    f"boundary repair stalled at cell {s}: the insertion "
                    f"target (gap {val:.3g}) coincides with an existing site"
                ) from ex
            state.record(
                AuxiliarySite(
                    point=sp, reason=BOUNDARY, parents=(s,), value=val, gap=0.0, site_id=sid
                )
            )
            continue
        # two-owner loop: claim the cheaper contact node for a third cell
        loop_id = report["a2"][0]["loop"]
        i, j = report["a2"][0]["owners"]
        stations = set()
        for fr in vd.border_fragments:
            if not fr["whole_loop"] and fr["loop_id"] == loop_id:
                stations.update(n for n in fr["nodes"] if n is not None)
        cand = sorted(stations, key=lambda n: (vd.nodes[n].value, n))
        nd = vd.nodes[cand[0]]
        sp = _node_surface_point(vd, nd)
        try:
            vd, sid, _faces = local_update(vd, sp)
        except ValueError as ex:
            raise RepairError(
                f"boundary repair stalled between cells {i} and {j}: the "
                "contact station coincides with an existing site"
            ) from ex
        state.record(
            AuxiliarySite(
                point=sp, reason=BOUNDARY, parents=(i, j), value=nd.value, gap=0.0, site_id=sid
            )
        )


def _pick_far_component(vd, s, comps, whole):
    """Insertion point (value, surface point) on the far contact component.

    The cell is split by claiming its far boundary contact, so the component
    containing the site itself (min distance 0) is never the target.  Ranking
    components by their argmin distance handles vertex, edge and face sites
    alike.  A component can also be a single tangent node with no fragments
    (exactly cocircular sites meeting on the boundary); its node point is
    then the insertion target.
    """
    m = vd.mesh
    best = None
    for comp in comps:
        ivals = []
        for fr in comp["fragments"]:
            ivals.extend(_fragment_intervals(m, fr))
        if ivals:
            val, sp = _boundary_argmin(vd, ivals)
        elif comp["nodes"]:
            nd = vd.nodes[min(comp["nodes"], key=lambda n: (vd.nodes[n].value, n))]
            val, sp = nd.value, _node_surface_point(vd, nd)
        else:
            continue
        if best is None or val > best[0]:
            best = (val, sp)
    if best is not None and best[0] > vd.eps_w:
        return best
    for fr in whole:
        return _boundary_argmin(vd, _loop_intervals(m, fr["loop"]))
    return best


# ---------------- driver --------------------------------------------------------------


def repair(field_or_vd, max_rounds=3, budget=None):
    """Run all three procedures to fixpoints, audit, and report.

    Returns (diagram, report). The report lists every auxiliary site with
    its reason, per-procedure counts, and the final audit. Total insertions
    are capped at twice the entering site count unless ``budget`` overrides
    the cap (coarse meshes with very few sites can need more).
    """
    vd = field_or_vd if isinstance(field_or_vd, VoronoiDiagram) else build_gvd(field_or_vd)
    n0 = len(vd.field.sources)
    state = RepairState(budget=budget if budget is not None else 2 * max(1, n0))
    audit = None
    for _ in range(max_rounds):
        vd = ensure_homeomorphism(vd, state)
        vd = ensure_two_cell(vd, state)
        vd = ensure_boundary(vd, state)
        audit = audit_closed_ball(vd)
        if audit["ok"]:
            break
    if audit is None:
        audit = audit_closed_ball(vd)
    if not audit["ok"]:
        raise RepairError(f"closed-ball audit still failing after repair: {audit}")
    report = {
        "inserted": [a.to_dict() for a in state.inserted],
        "counts": dict(state.counts),
        "n_sites": {"before": n0, "after": len(vd.field.sources)},
        "audit": audit,
    }
    return vd, report


def write_report(report, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)
