"""Halfedge triangle mesh: construction, validation, OBJ I/O, statistics.

Connectivity uses the implicit face-side scheme: face ``f`` owns halfedges
``3f, 3f+1, 3f+2``; halfedge ``h`` runs from ``faces[h//3, h%3]`` to
``faces[h//3, (h%3+1)%3]``, and ``next``/``prev`` are index arithmetic.  Only
``twin`` is stored (-1 on boundary sides).  Faces are assumed ccw-oriented
when viewed from outside; construction rejects inconsistent orientation.

Meshes are immutable after construction by convention: no method mutates the
arrays, so a Mesh can be shared freely across propagation runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Mesh",
    "MeshError",
    "NonManifoldError",
    "DegenerateFaceError",
    "SurfacePoint",
    "MeshStats",
    "load_obj",
    "save_obj",
    "mesh_stats",
    "genus",
    "boundary_loops",
]


class MeshError(ValueError):
    """Mesh failed validation (parse error, bad topology, degenerate face)."""


class NonManifoldError(MeshError):
    pass


class DegenerateFaceError(MeshError):
    pass


class Mesh:
    def __init__(self, vertices, faces, validate=True):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.faces = np.ascontiguousarray(faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must be (n, 3)")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise MeshError("faces must be (m, 3) triangles")
        self.obj_ignored_records = 0
        self._build(validate)

    # -- construction ------------------------------------------------------

    def _build(self, validate):
        V, F = self.vertices, self.faces
        nv, nf = len(V), len(F)
        if nf == 0:
            raise MeshError("mesh has no faces")
        if F.min() < 0 or F.max() >= nv:
            raise MeshError("face index out of range")

        for f in range(nf):
            a, b, c = F[f]
            if a == b or b == c or a == c:
                raise DegenerateFaceError(f"face {f} repeats a vertex")

        heads = F[:, [1, 2, 0]].reshape(-1)
        orgs = F.reshape(-1)
        self.he_org = orgs
        self.he_head = heads
        nh = 3 * nf

        vec = V[heads] - V[orgs]
        self.he_len = np.sqrt((vec * vec).sum(axis=1))

        if validate:
            # zero-area faces: collinear corners at the face's own scale
            for f in range(nf):
                ls = self.he_len[3 * f : 3 * f + 3]
                lmax = ls.max()
                if lmax == 0.0:
                    raise DegenerateFaceError(f"face {f} has a zero-length side")
                s = ls.sum() / 2.0
                prod = s * (s - ls[0]) * (s - ls[1]) * (s - ls[2])
                area = math.sqrt(max(prod, 0.0))
                if area <= 1e-14 * lmax * lmax:
                    raise DegenerateFaceError(f"face {f} has (near-)zero area")

        # twin pairing via directed-edge dict
        twin = np.full(nh, -1, dtype=np.int64)
        directed = {}
        for h in range(nh):
            key = (orgs[h], heads[h])
            if key in directed:
                raise NonManifoldError(
                    f"directed edge {key} appears twice: inconsistent orientation "
                    "or non-manifold edge"
                )
            directed[key] = h
        for h in range(nh):
            t = directed.get((heads[h], orgs[h]), -1)
            twin[h] = t
        self.he_twin = twin

        # undirected edge ids, deterministic by first halfedge occurrence
        edge_of = np.full(nh, -1, dtype=np.int64)
        edge_he = []
        for h in range(nh):
            if edge_of[h] >= 0:
                continue
            e = len(edge_he)
            edge_of[h] = e
            if twin[h] >= 0:
                edge_of[twin[h]] = e
            edge_he.append(h)
        self.he_edge = edge_of
        self.edge_he = np.asarray(edge_he, dtype=np.int64)
        self.n_edges = len(edge_he)

        # one outgoing halfedge per vertex; boundary vertices get their
        # boundary-side outgoing halfedge so fan rotation covers the star
        vert_he = np.full(nv, -1, dtype=np.int64)
        for h in range(nh):
            v = orgs[h]
            if vert_he[v] < 0:
                vert_he[v] = h
        for h in range(nh):
            if twin[h] < 0:
                # rotation twin(prev(.)) sweeps away from h's own edge, so a
                # boundary vertex must start its fan at its boundary side
                vert_he[orgs[h]] = h
        self.vert_he = vert_he

        if validate:
            isolated = np.setdiff1d(np.arange(nv), orgs)
            if len(isolated):
                raise MeshError(f"{len(isolated)} isolated vertices (e.g. {isolated[0]})")
            self._check_umbrellas()

        self.bbox_diag = float(np.linalg.norm(V.max(axis=0) - V.min(axis=0)))

    def _check_umbrellas(self):
        n_incident = np.zeros(len(self.vertices), dtype=np.int64)
        for h in range(len(self.he_org)):
            n_incident[self.he_org[h]] += 1
        for v in range(len(self.vertices)):
            seen = len(list(self.vertex_star(v)))
            if seen != n_incident[v]:
                raise NonManifoldError(
                    f"vertex {v} star is not a single fan "
                    f"({seen} of {n_incident[v]} outgoing halfedges reachable)"
                )

    # -- connectivity queries ---------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_halfedges(self):
        return len(self.he_org)

    @staticmethod
    def he_next(h):
        return h - h % 3 + (h + 1) % 3

    @staticmethod
    def he_prev(h):
        return h - h % 3 + (h + 2) % 3

    @staticmethod
    def he_face(h):
        return h // 3

    def vertex_star(self, v):
        """Outgoing halfedges of v in cw fan order starting at vert_he[v]."""
        h0 = int(self.vert_he[v])
        h = h0
        while True:
            yield h
            t = self.he_twin[self.he_prev(h)]
            if t < 0 or t == h0:
                return
            h = int(t)

    def edge_endpoints(self, e):
        h = int(self.edge_he[e])
        return int(self.he_org[h]), int(self.he_head[h])

    def edge_length(self, e):
        return float(self.he_len[self.edge_he[e]])

    def is_boundary_edge(self, e):
        return self.he_twin[self.edge_he[e]] < 0

    def face_area(self, f):
        a, b, c = self.vertices[self.faces[f]]
        return 0.5 * float(np.linalg.norm(np.cross(b - a, c - a)))

    def total_area(self):
        a = self.vertices[self.faces[:, 0]]
        b = self.vertices[self.faces[:, 1]]
        c = self.vertices[self.faces[:, 2]]
        return float(0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1).sum())

    # -- local 2D frames ----------------------------------------------------

    def he_frame(self, h):
        """Orthonormal frame of halfedge h: (origin, u_along, u_into_face).

        2D frame coords (x, y) map to 3D as ``origin + x*u + y*w``; the face
        of h occupies y > 0.
        """
        a = self.vertices[self.he_org[h]]
        b = self.vertices[self.he_head[h]]
        c = self.vertices[self.faces[self.he_face(h), :]].sum(axis=0) - a - b
        u = b - a
        u = u / np.linalg.norm(u)
        w = c - a
        w = w - np.dot(w, u) * u
        nw = np.linalg.norm(w)
        w = w / nw
        return a, u, w

    def frame_to_3d(self, h, x, y):
        o, u, w = self.he_frame(h)
        return o + x * u + y * w

    def apex_2d(self, h):
        """Third vertex of face(h) in h's frame, from intrinsic lengths."""
        la = float(self.he_len[h])
        lb = float(self.he_len[self.he_next(h)])  # head(h) -> apex
        lc = float(self.he_len[self.he_prev(h)])  # apex -> org(h)
        x = (la * la + lc * lc - lb * lb) / (2.0 * la)
        y2 = lc * lc - x * x
        return x, math.sqrt(max(y2, 0.0))


# -- surface points ---------------------------------------------------------


@dataclass(frozen=True)
class SurfacePoint:
    """A point on a mesh: a vertex, a point on an edge, or a point in a face.

    Edge points store the normalized param t in [0, 1] measured along the
    edge's representative halfedge; face points store barycentric coords in
    face-corner order.
    """

    kind: str
    index: int
    t: float = 0.0
    bary: tuple = ()

    @staticmethod
    def vertex(v):
        return SurfacePoint("vertex", int(v))

    @staticmethod
    def on_edge(e, t):
        return SurfacePoint("edge", int(e), t=float(t))

    @staticmethod
    def in_face(f, bary):
        b = tuple(float(x) for x in bary)
        s = sum(b)
        return SurfacePoint("face", int(f), bary=tuple(x / s for x in b))

    def position(self, mesh):
        if self.kind == "vertex":
            return mesh.vertices[self.index].copy()
        if self.kind == "edge":
            h = int(mesh.edge_he[self.index])
            a = mesh.vertices[mesh.he_org[h]]
            b = mesh.vertices[mesh.he_head[h]]
            return a + self.t * (b - a)
        if self.kind == "face":
            tri = mesh.vertices[mesh.faces[self.index]]
            return (np.asarray(self.bary)[:, None] * tri).sum(axis=0)
        raise ValueError(f"bad SurfacePoint kind {self.kind!r}")

    def to_json(self):
        d = {"kind": self.kind, "index": self.index}
        if self.kind == "edge":
            d["t"] = self.t
        elif self.kind == "face":
            d["bary"] = list(self.bary)
        return d

    @staticmethod
    def from_json(d):
        if d["kind"] == "vertex":
            return SurfacePoint.vertex(d["index"])
        if d["kind"] == "edge":
            return SurfacePoint.on_edge(d["index"], d["t"])
        return SurfacePoint.in_face(d["index"], d["bary"])


# -- OBJ I/O -----------------------------------------------------------------


def load_obj(path, triangulate_fan=False):
    """Read a Wavefront OBJ: only ``v`` and ``f`` records are honored.

    Any other record type bumps the returned mesh's ``obj_ignored_records``
    counter.  Faces with more than three corners raise unless
    ``triangulate_fan`` is set, in which case they are fanned from their
    first corner.
    """
    verts = []
    faces = []
    ignored = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            tag = tokens[0]
            if tag == "v":
                if len(tokens) < 4:
                    raise MeshError(f"{path}:{lineno}: malformed vertex record")
                verts.append([float(tokens[1]), float(tokens[2]), float(tokens[3])])
            elif tag == "f":
                idx = []
                for tok in tokens[1:]:
                    head = tok.split("/")[0]
                    i = int(head)
                    # OBJ is 1-based; negatives count from the end
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                if len(idx) < 3:
                    raise MeshError(f"{path}:{lineno}: face with <3 corners")
                if len(idx) == 3:
                    faces.append(idx)
                elif triangulate_fan:
                    for k in range(1, len(idx) - 1):
                        faces.append([idx[0], idx[k], idx[k + 1]])
                else:
                    raise MeshError(
                        f"{path}:{lineno}: non-triangular face "
                        "(pass triangulate_fan=True to fan-split)"
                    )
            else:
                ignored += 1
    mesh = Mesh(np.asarray(verts, dtype=np.float64), np.asarray(faces, dtype=np.int64))
    mesh.obj_ignored_records = ignored
    return mesh


def save_obj(mesh, path, decimals=17):
    fmt = f"%.{decimals}g"
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write("v " + " ".join(fmt % x for x in v) + "\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


# -- statistics --------------------------------------------------------------


@dataclass
class MeshStats:
    n_vertices: int
    n_edges: int
    n_faces: int
    genus: int
    n_boundary_loops: int
    euler_characteristic: int
    total_area: float
    bbox_diag: float
    sigma_min: float
    sigma_mean: float
    sigma_max: float
    edge_len_min: float
    edge_len_mean: float
    edge_len_max: float

    def to_json(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def boundary_loops(mesh):
    """Boundary cycles, each as a list of boundary halfedges in walk order."""
    nh = mesh.n_halfedges
    visited = set()
    loops = []
    for h0 in range(nh):
        if mesh.he_twin[h0] >= 0 or h0 in visited:
            continue
        loop = []
        h = h0
        while h not in visited:
            visited.add(h)
            loop.append(h)
            # advance to the next boundary side around head(h)
            nxt = mesh.he_next(h)
            while mesh.he_twin[nxt] >= 0:
                nxt = mesh.he_next(int(mesh.he_twin[nxt]))
            h = nxt
        loops.append(loop)
    return loops


def _connected_components(mesh):
    n = mesh.n_vertices
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for f in mesh.faces:
        a = find(int(f[0]))
        for v in f[1:]:
            b = find(int(v))
            if a != b:
                parent[b] = a
    return len({find(v) for v in range(n)})


def genus(mesh):
    ncomp = _connected_components(mesh)
    if ncomp != 1:
        raise MeshError(f"mesh is disconnected ({ncomp} components)")
    chi = mesh.n_vertices - mesh.n_edges + mesh.n_faces
    b = len(boundary_loops(mesh))
    g2 = 2 - b - chi
    if g2 < 0 or g2 % 2:
        raise MeshError(f"inconsistent topology: chi={chi}, boundary loops={b}")
    return g2 // 2


def _face_sigma(mesh):
    """Per-face anisotropy: half-perimeter * longest edge / (2 sqrt(3) area)."""
    l0 = mesh.he_len[0::3]
    l1 = mesh.he_len[1::3]
    l2 = mesh.he_len[2::3]
    p = 0.5 * (l0 + l1 + l2)
    h = np.maximum(np.maximum(l0, l1), l2)
    s = np.sqrt(np.maximum(p * (p - l0) * (p - l1) * (p - l2), 1e-300))
    return p * h / (2.0 * math.sqrt(3.0) * s)


def mesh_stats(mesh):
    g = genus(mesh)
    b = len(boundary_loops(mesh))
    sig = _face_sigma(mesh)
    el = mesh.he_len[mesh.edge_he]
    return MeshStats(
        n_vertices=mesh.n_vertices,
        n_edges=mesh.n_edges,
        n_faces=mesh.n_faces,
        genus=g,
        n_boundary_loops=b,
        euler_characteristic=mesh.n_vertices - mesh.n_edges + mesh.n_faces,
        total_area=mesh.total_area(),
        bbox_diag=mesh.bbox_diag,
        sigma_min=float(sig.min()),
        sigma_mean=float(sig.mean()),
        sigma_max=float(sig.max()),
        edge_len_min=float(el.min()),
        edge_len_mean=float(el.mean()),
        edge_len_max=float(el.max()),
    )
