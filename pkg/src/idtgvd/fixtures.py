"""Deterministic fixture meshes used by tests and the benchmark CLI.

Two of these are tuned to exhibit specific pipeline behavior:

* ``tube_with_lone_vertex`` (17 vertices): a tall thin open cylinder with one
  extra mid-height vertex whose Voronoi cell wraps the tube.  Repairing it
  takes exactly two auxiliary sites: one for the wrapping cell (its
  pseudo-bisector) and one for the duplicated Voronoi edge pair that the
  first insertion leaves behind.
* ``squat_prism`` (7 vertices): a flat triangular prism with one side quad
  replaced by a shallow apex fan.  Running the edge-flip baseline on it
  produces a self-loop at the apex; the Voronoi dual stays regular.
"""

from __future__ import annotations

import math

import numpy as np

from .meshcore import Mesh

__all__ = [
    "tetrahedron",
    "octahedron",
    "cube",
    "icosphere",
    "spindle",
    "flat_grid",
    "sheared_grid",
    "torus",
    "genus2",
    "tube_with_lone_vertex",
    "squat_prism",
]


def tetrahedron():
    v = np.array(
        [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=np.float64
    ) / math.sqrt(3.0)
    f = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return Mesh(v, f)


def octahedron():
    v = np.array(
        [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
        dtype=np.float64,
    )
    f = np.array(
        [
            [0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
            [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5],
        ]
    )
    return Mesh(v, f)


def cube():
    """Unit cube surface, each square split by a diagonal (8 vertices)."""
    v = np.array(
        [
            [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
            [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
        ],
        dtype=np.float64,
    )
    quads = [
        (3, 2, 1, 0),  # z=0, outward -z
        (4, 5, 6, 7),  # z=1
        (0, 1, 5, 4),  # y=0
        (2, 3, 7, 6),  # y=1
        (1, 2, 6, 5),  # x=1
        (3, 0, 4, 7),  # x=0
    ]
    f = []
    for a, b, c, d in quads:
        f.append([a, b, c])
        f.append([a, c, d])
    return Mesh(v, np.array(f))


def icosphere(subdivisions=1, radius=1.0):
    """Icosahedron refined by midpoint subdivision, projected to the sphere."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    verts = [np.array(v, dtype=np.float64) / np.linalg.norm(v) for v in verts]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    v = np.array(verts) * radius
    return Mesh(v, np.array(faces))


def spindle(subdivisions=2, stretch=8.0):
    """Icosphere stretched along z: a closed mesh full of skinny triangles."""
    m = icosphere(subdivisions)
    v = m.vertices.copy()
    v[:, 2] *= stretch
    return Mesh(v, m.faces.copy())


def flat_grid(nx=8, ny=8, width=1.0, height=1.0):
    """Planar grid in z=0, quads split by the same diagonal everywhere."""
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    v = np.array([[x, y, 0.0] for y in ys for x in xs])
    f = []
    for j in range(ny):
        for i in range(nx):
            a = j * (nx + 1) + i
            b = a + 1
            c = a + nx + 2
            d = a + nx + 1
            f.append([a, b, c])
            f.append([a, c, d])
    return Mesh(v, np.array(f))


def sheared_grid(nx=8, ny=8, shear=1.6, width=1.0, height=1.0):
    """Sheared planar grid: every quad becomes an obtuse parallelogram pair.

    The shear guarantees strictly negative cotangent weights, the stock
    ingredient for ill-conditioned extrinsic Laplacians.
    """
    m = flat_grid(nx, ny, width, height)
    v = m.vertices.copy()
    v[:, 0] += shear * v[:, 1]
    return Mesh(v, m.faces.copy())


def torus(n_major=12, n_minor=8, major_radius=2.0, minor_radius=0.7, center=(0.0, 0.0, 0.0)):
    v = []
    for i in range(n_major):
        u = 2.0 * math.pi * i / n_major
        for j in range(n_minor):
            w = 2.0 * math.pi * j / n_minor
            x = (major_radius + minor_radius * math.cos(w)) * math.cos(u)
            y = (major_radius + minor_radius * math.cos(w)) * math.sin(u)
            z = minor_radius * math.sin(w)
            v.append([x + center[0], y + center[1], z + center[2]])

    def vid(i, j):
        return (i % n_major) * n_minor + (j % n_minor)

    f = []
    for i in range(n_major):
        for j in range(n_minor):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            f.append([a, b, c])
            f.append([a, c, d])
    return np.array(v), np.array(f)


def genus2():
    """Two grid tori joined by a square tube: a closed genus-2 surface."""
    v1, f1 = torus(center=(-3.2, 0.0, 0.0))
    v2, f2 = torus(center=(3.2, 0.0, 0.0))
    n1 = len(v1)
    f2 = f2 + n1
    verts = np.vstack([v1, v2])

    # quad (i=0, j=0) of each torus: corners in ccw face order
    def quad(i, j, n_minor=8, base=0):
        vid = lambda a, b: base + (a % 12) * n_minor + (b % n_minor)
        return vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)

    # torus 1 faces +x around i=0 (u=0 points +x from its center at -3.2)
    qa = quad(0, 0, base=0)
    qb = quad(6, 0, base=n1)  # torus 2's u=pi side faces -x, toward torus 1
    drop = {
        (qa[0], qa[1], qa[2]), (qa[0], qa[2], qa[3]),
        (qb[0], qb[1], qb[2]), (qb[0], qb[2], qb[3]),
    }
    faces = [list(f) for f in np.vstack([f1, f2]) if tuple(f) not in drop]

    # bridge tube reuses the deleted faces' edge directions (qa forward,
    # qb reversed) so orientation stays consistent across both holes
    a = list(qa)
    b = [qb[0], qb[3], qb[2], qb[1]]
    for k in range(4):
        p, q = a[k], a[(k + 1) % 4]
        r, s = b[k], b[(k + 1) % 4]
        faces.append([p, q, s])
        faces.append([p, s, r])
    return Mesh(verts, np.array(faces))


def tube_with_lone_vertex(radius=0.35, height=6.0, n_ring=8):
    """Open 17-vertex cylinder with one isolated mid-height vertex.

    The lone vertex's Voronoi cell wraps the thin tube (half circumference
    ~1.1 versus ~3 to either rim), so its cell is an annulus.
    """
    verts = []
    step = 2.0 * math.pi / n_ring
    # tiny deterministic angular jitter to keep the field free of exact ties
    for k in range(n_ring):
        a = k * step + 0.0131 * math.sin(3.7 * k + 0.4)
        verts.append([radius * math.cos(a), radius * math.sin(a), 0.0])
    for k in range(n_ring):
        a = k * step + 0.0117 * math.sin(2.9 * k + 1.2)
        verts.append([radius * math.cos(a), radius * math.sin(a), height])
    a1 = 0.5 * step + 0.0137
    verts.append([radius * math.cos(a1), radius * math.sin(a1), 0.5 * height])
    lone = 2 * n_ring

    faces = []
    for k in range(1, n_ring):
        b0, b1 = k, (k + 1) % n_ring
        t0, t1 = n_ring + k, n_ring + (k + 1) % n_ring
        faces.append([b0, b1, t1])
        faces.append([b0, t1, t0])
    # column 0 hosts the lone vertex: fan its quad
    b0, b1, t0, t1 = 0, 1, n_ring, n_ring + 1
    faces.append([b0, b1, lone])
    faces.append([b1, t1, lone])
    faces.append([t1, t0, lone])
    faces.append([t0, b0, lone])
    return Mesh(np.array(verts, dtype=np.float64), np.array(faces))


def squat_prism(side=2.0, height=0.36, apex_lift=0.30):
    """Closed 7-vertex prism whose apex-side verticals are not Delaunay.

    A flat triangular prism; one side quad is replaced by a fan around a
    shallow apex.  The two vertical quad edges violate the local Delaunay
    test and intrinsic flipping walks them around the prism into a
    self-loop at the apex.
    """
    r = side / math.sqrt(3.0)
    top = []
    bot = []
    for k in range(3):
        a = 2.0 * math.pi * k / 3.0 + math.pi / 6.0
        top.append([r * math.cos(a), r * math.sin(a), height])
        bot.append([r * math.cos(a), r * math.sin(a), 0.0])
    t0, t1, t2 = 0, 1, 2
    b0, b1, b2 = 3, 4, 5
    apex = 6
    verts = top + bot
    # apex sits outside the quad between columns 0 and 1
    mid = (np.array(verts[t0]) + np.array(verts[t1]) + np.array(verts[b0]) + np.array(verts[b1])) / 4.0
    out = np.array([math.cos(math.pi / 2.0 + math.pi / 6.0), math.sin(math.pi / 2.0 + math.pi / 6.0), 0.0])
    # outward normal of that quad is along (top edge midpoint xy direction)
    nrm = mid.copy()
    nrm[2] = 0.0
    nrm /= np.linalg.norm(nrm)
    verts.append(list(mid + apex_lift * nrm))

    faces = [
        [t0, t1, t2],
        [b2, b1, b0],
        # quad between columns 1 and 2
        [b1, b2, t2], [b1, t2, t1],
        # quad between columns 2 and 0
        [b2, b0, t0], [b2, t0, t2],
        # apex fan over quad between columns 0 and 1
        [b0, b1, apex], [b1, t1, apex], [t1, t0, apex], [t0, b0, apex],
    ]
    del out
    return Mesh(np.array(verts, dtype=np.float64), np.array(faces))
