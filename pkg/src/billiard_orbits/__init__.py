"""Periodic billiard trajectories in smooth convex bodies, found as critical
points of the perimeter and counted up to dihedral relabeling."""

from .geometry import BodyModel, bumped_ellipsoid, ellipsoid, unit_ball
from .varsolve import SolverConfig, TrajectoryCandidate, multistart_search
from .symmetry import OrbitClass, dedup
from .cohomology import build_plane_conf_algebra, build_sphere_conf_algebra, index_and_bound

__all__ = [
    "BodyModel",
    "bumped_ellipsoid",
    "ellipsoid",
    "unit_ball",
    "SolverConfig",
    "TrajectoryCandidate",
    "multistart_search",
    "OrbitClass",
    "dedup",
    "build_plane_conf_algebra",
    "build_sphere_conf_algebra",
    "index_and_bound",
]

__version__ = "0.1.0"
