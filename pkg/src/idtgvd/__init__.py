"""Intrinsic Delaunay triangulations via geodesic Voronoi diagrams.

Pipeline: exact multi-source geodesics (MMP window propagation) -> symbolic
geodesic Voronoi diagram -> closed-ball repairs -> dual intrinsic Delaunay
triangulation, plus an intrinsic edge-flip baseline and a discrete
Laplace-Beltrami benchmark suite.
"""

from .meshcore import (
    Mesh,
    MeshError,
    NonManifoldError,
    DegenerateFaceError,
    SurfacePoint,
    MeshStats,
    load_obj,
    save_obj,
    mesh_stats,
    genus,
    boundary_loops,
)
from .mmp import propagate, DistanceField, GeodesicPath
from .gvd import build_gvd, VoronoiDiagram
from .repair import repair, RepairError, audit_closed_ball
from .dual import (
    IntrinsicTriangulation,
    IntrinsicEdge,
    IntrinsicTriangle,
    extract_dual,
    verify_regular,
    verify_empty_circumcircle,
)

__version__ = "0.1.0"

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
    "propagate",
    "DistanceField",
    "GeodesicPath",
    "build_gvd",
    "VoronoiDiagram",
    "repair",
    "RepairError",
    "audit_closed_ball",
    "IntrinsicTriangulation",
    "IntrinsicEdge",
    "IntrinsicTriangle",
    "extract_dual",
    "verify_regular",
    "verify_empty_circumcircle",
    "__version__",
]
