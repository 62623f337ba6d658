"""Small planar-geometry kernel shared by the geodesic and Voronoi layers.

Everything here works on plain floats / small tuples so the propagation hot
loop never touches numpy scalars.  Distance cones are additively weighted
point sources: ``value(z) = d0 + |z - apex|``.
"""

from __future__ import annotations

import math

__all__ = [
    "tri_area_2d",
    "tri_area_from_lengths",
    "opposite_angle",
    "circumcenter_2d",
    "cone_value",
    "cone_crossings_on_axis",
    "equidistant_point",
    "segment_crossing_param",
    "point_in_tri_2d",
]


def tri_area_2d(ax, ay, bx, by, cx, cy):
    """Signed area of triangle abc (positive when ccw)."""
    return 0.5 * ((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))


def tri_area_from_lengths(a, b, c):
    """Triangle area from side lengths via the numerically stable Kahan form.

    Raises ValueError when the lengths violate the triangle inequality by more
    than floating slack (the caller decides what degenerate means).
    """
    x, y, z = sorted((a, b, c), reverse=True)
    if z - (x - y) < 0.0:
        raise ValueError(f"side lengths {a}, {b}, {c} violate triangle inequality")
    s = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z))
    return 0.25 * math.sqrt(max(s, 0.0))


def opposite_angle(a, b, c):
    """Angle opposite side ``a`` in a triangle with side lengths a, b, c."""
    cos_val = (b * b + c * c - a * a) / (2.0 * b * c)
    return math.acos(min(1.0, max(-1.0, cos_val)))


def cot_opposite(a, b, c):
    """Cotangent of the angle opposite side ``a``: (b² + c² − a²) / 4A."""
    area = tri_area_from_lengths(a, b, c)
    if area <= 0.0:
        raise ValueError(f"degenerate triangle with sides {a}, {b}, {c}")
    return (b * b + c * c - a * a) / (4.0 * area)


def circumcenter_2d(ax, ay, bx, by, cx, cy):
    """Circumcenter of triangle abc, or None when degenerate."""
    dx1, dy1 = bx - ax, by - ay
    dx2, dy2 = cx - ax, cy - ay
    d = 2.0 * (dx1 * dy2 - dy1 * dx2)
    if d == 0.0:
        return None
    q1 = dx1 * dx1 + dy1 * dy1
    q2 = dx2 * dx2 + dy2 * dy2
    ux = ax + (dy2 * q1 - dy1 * q2) / d
    uy = ay + (dx1 * q2 - dx2 * q1) / d
    return ux, uy


def cone_value(apex_x, apex_y, d0, px, py):
    return d0 + math.hypot(px - apex_x, py - apex_y)


def cone_crossings_on_axis(ax, ay, da, bx, by, db, lo, hi, tol=1e-13):
    """Params t in [lo, hi] where two cones are equal along the x-axis.

    Cone values at (t, 0) are ``da + |(t,0)-A|`` and ``db + |(t,0)-B|``.
    Returns a sorted list of crossing params (0, 1 or 2 entries).  Roots are
    solved analytically and polished by one bisection-safe Newton step; ties
    over an interval (identical cones) return [].
    """
    c = db - da
    # f(t) = sqrt((t-ax)^2 + ay^2) - sqrt((t-bx)^2 + by^2) - c
    # u - v = c  =>  u^2 - v^2 = L(t) = c * (u + v)
    # L(t) = (ax^2 + ay^2 - bx^2 - by^2) + 2 t (bx - ax)
    l0 = ax * ax + ay * ay - bx * bx - by * by
    l1 = 2.0 * (bx - ax)
    roots = []
    if abs(c) < tol:
        # plain perpendicular-bisector line: L(t) = 0
        if abs(l1) > tol:
            roots = [-l0 / l1]
    else:
        # u = (L/c + c) / 2 ; square once more -> quadratic in t
        # 4 c^2 u^2 = (L + c^2)^2 with u^2 = (t-ax)^2 + ay^2
        p2 = l1 * l1 - 4.0 * c * c
        p1 = 2.0 * l1 * (l0 + c * c) + 8.0 * c * c * ax
        p0 = (l0 + c * c) ** 2 - 4.0 * c * c * (ax * ax + ay * ay)
        if abs(p2) < tol * max(1.0, abs(p1), abs(p0)):
            if abs(p1) > tol:
                roots = [-p0 / p1]
        else:
            disc = p1 * p1 - 4.0 * p2 * p0
            if disc < 0.0 and disc >= -1e-10 * max(1.0, p1 * p1, abs(4.0 * p2 * p0)):
                disc = 0.0
            if disc >= 0.0:
                sq = math.sqrt(disc)
                # Citardauq form for the smaller-magnitude root
                q = -0.5 * (p1 + math.copysign(sq, p1))
                roots = [q / p2]
                if q != 0.0:
                    roots.append(p0 / q)

    span = hi - lo
    pad = max(1e-9, 1e-9 * abs(span))
    out = []
    for t in roots:
        if not (lo - pad <= t <= hi + pad):
            continue
        # polish: a couple of Newton steps on f(t) = uA - uB - c
        for _ in range(2):
            ua = math.hypot(t - ax, ay)
            ub = math.hypot(t - bx, by)
            fv = ua - ub - c
            if ua == 0.0 or ub == 0.0:
                break
            fp = (t - ax) / ua - (t - bx) / ub
            if abs(fp) < 1e-14:
                break
            step = fv / fp
            if abs(step) > 0.1 * max(1.0, abs(span)):
                break
            t -= step
        if not (lo - pad <= t <= hi + pad):
            continue
        # squaring introduces spurious roots: accept only genuine near-zeros
        v = cone_value(ax, ay, da, t, 0.0) - cone_value(bx, by, db, t, 0.0)
        scale = max(1.0, abs(da), abs(db))
        if abs(v) > 1e-7 * scale:
            continue
        out.append(min(hi, max(lo, t)))
    out.sort()
    # dedupe near-identical roots
    dedup = []
    for t in out:
        if not dedup or t - dedup[-1] > 1e-12 * max(1.0, abs(span)):
            dedup.append(t)
    return dedup


def equidistant_point(cones):
    """Points equidistant (in cone value) to three weighted apexes.

    ``cones`` is a sequence of three (x, y, d0) triples.  Returns a list of
    (x, y, value) solutions with value >= every d0; the linearized Apollonius
    system reduces to at most two candidates.
    """
    (x0, y0, d0), (x1, y1, d1), (x2, y2, d2) = cones
    # |z - Qi|^2 = (D - di)^2 ; subtract pairwise -> linear in (zx, zy, D)
    a11 = 2.0 * (x1 - x0)
    a12 = 2.0 * (y1 - y0)
    b1 = 2.0 * (d1 - d0)
    c1 = (x1 * x1 + y1 * y1 - d1 * d1) - (x0 * x0 + y0 * y0 - d0 * d0)
    a21 = 2.0 * (x2 - x0)
    a22 = 2.0 * (y2 - y0)
    b2 = 2.0 * (d2 - d0)
    c2 = (x2 * x2 + y2 * y2 - d2 * d2) - (x0 * x0 + y0 * y0 - d0 * d0)
    det = a11 * a22 - a12 * a21
    if abs(det) < 1e-14 * max(1.0, abs(a11), abs(a12), abs(a21), abs(a22)) ** 2:
        return []
    # z = p + D q
    px = (c1 * a22 - c2 * a12) / det
    py = (a11 * c2 - a21 * c1) / det
    qx = (b1 * a22 - b2 * a12) / det
    qy = (a11 * b2 - a21 * b1) / det
    # |p + Dq - Q0|^2 = (D - d0)^2
    ex, ey = px - x0, py - y0
    k2 = qx * qx + qy * qy - 1.0
    k1 = 2.0 * (ex * qx + ey * qy) + 2.0 * d0
    k0 = ex * ex + ey * ey - d0 * d0
    sols = []
    if abs(k2) < 1e-14:
        if abs(k1) > 1e-14:
            sols = [-k0 / k1]
    else:
        disc = k1 * k1 - 4.0 * k2 * k0
        # tangent cone pairs give a double root that roundoff pushes below zero
        if disc < 0.0 and disc >= -1e-10 * max(1.0, k1 * k1, abs(4.0 * k2 * k0)):
            disc = 0.0
        if disc >= 0.0:
            sq = math.sqrt(disc)
            sols = [(-k1 - sq) / (2.0 * k2), (-k1 + sq) / (2.0 * k2)]
    dmax = max(d0, d1, d2)
    out = []
    for dv in sols:
        if dv < dmax - 1e-9 * max(1.0, abs(dmax)):
            continue
        zx, zy = px + dv * qx, py + dv * qy
        out.append((zx, zy, dv))
    return out


def segment_crossing_param(ax, ay, bx, by, px, py, qx, qy):
    """Param s along segment a->b where it crosses segment p->q, else None.

    Crossing must be proper for the p->q segment as a *line* clipped to its
    extent with a small pad; used for ray clipping against triangle sides.
    """
    rx, ry = bx - ax, by - ay
    sx, sy = qx - px, qy - py
    den = rx * sy - ry * sx
    if den == 0.0:
        return None
    t = ((px - ax) * sy - (py - ay) * sx) / den
    u = ((px - ax) * ry - (py - ay) * rx) / den
    if -1e-12 <= t <= 1.0 + 1e-12 and -1e-9 <= u <= 1.0 + 1e-9:
        return min(1.0, max(0.0, t))
    return None


def point_in_tri_2d(px, py, ax, ay, bx, by, cx, cy, eps=0.0):
    """True when (px,py) lies inside ccw triangle abc, padded by eps."""
    d1 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    d2 = (cx - bx) * (py - by) - (cy - by) * (px - bx)
    d3 = (ax - cx) * (py - cy) - (ay - cy) * (px - cx)
    return d1 >= -eps and d2 >= -eps and d3 >= -eps
