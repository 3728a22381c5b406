"""Billiard map: ray shooting plus elastic reflection.

Used as an oracle independent of the variational solver: a closed polygon is
a billiard trajectory iff shooting along its first edge and reflecting ``p``
times reproduces its vertices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BilliardError, GrazingImpact, NoConvergence
from .geometry import BodyModel, normal

__all__ = ["RayState", "reflect", "billiard_step", "closure_residual", "shoot"]

GRAZING_TOL = 1e-9
EDGE_FACTOR = 1e-3
_MARCH_STEPS = 32
_MAX_ROOT_ITERS = 100


def min_edge(body: BodyModel) -> float:
    """Shortest admissible chord; consecutive vertices closer than this coincide."""
    return EDGE_FACTOR * body.diam


@dataclass(frozen=True)
class RayState:
    """A boundary point together with an inward unit direction."""

    x: np.ndarray
    v: np.ndarray

    def check(self, body: BodyModel) -> "RayState":
        if abs(body.g(self.x)) > 1e3 * body.tol_boundary:
            raise ValueError(f"ray origin is off the boundary: g = {body.g(self.x):.3g}")
        if abs(np.linalg.norm(self.v) - 1.0) > 1e-12:
            raise ValueError("ray direction must be a unit vector")
        if float(self.v @ normal(body, self.x)) >= 0:
            raise ValueError("ray direction must point strictly inward")
        return self


def reflect(v, n) -> np.ndarray:
    """Elastic reflection ``v - 2 (v.n) n`` of the travel direction ``v``.

    ``n`` is the outward unit normal at the impact point; at impact ``v.n > 0``
    and the result satisfies ``v'.n = -(v.n)``.
    """
    v = np.asarray(v, dtype=float)
    n = np.asarray(n, dtype=float)
    vn = float(v @ n)
    if abs(vn) < GRAZING_TOL:
        raise GrazingImpact(f"tangential impact, v.n = {vn:.3g}")
    return v - 2.0 * vn * n


def _exit_parameter(body: BodyModel, x, v) -> float:
    eps = min_edge(body)
    step = body.diam / _MARCH_STEPS
    h_eps = body.g(x + eps * v)
    if h_eps >= 0:
        raise GrazingImpact(f"chord shorter than the minimum edge {eps:.3g}")
    lo, hi = eps, None
    t = eps
    for _ in range(2 * _MARCH_STEPS + 2):
        t += step
        if body.g(x + t * v) > 0:
            hi = t
            break
        lo = t
    if hi is None:
        raise NoConvergence("ray does not leave the body")
    t = hi
    tol = body.tol_boundary
    for _ in range(_MAX_ROOT_ITERS):
        y = x + t * v
        h = body.g(y)
        if h == 0:
            return t
        if h > 0:
            hi = t
        else:
            lo = t
        dh = float(body.grad(y) @ v)
        t_new = t - h / dh if dh != 0 else np.nan
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        # iterate to roundoff: shot orbits amplify any impact error
        if abs(t_new - t) <= 4 * np.finfo(float).eps * max(t, 1.0):
            if abs(body.g(x + t_new * v)) <= tol:
                return t_new
            break
        t = t_new
    raise NoConvergence("impact root-find did not converge")


def billiard_step(body: BodyModel, s: RayState) -> RayState:
    """Next impact point and the reflected direction."""
    x = np.asarray(s.x, dtype=float)
    v = np.asarray(s.v, dtype=float)
    t = _exit_parameter(body, x, v)
    y = x + t * v
    return RayState(y, reflect(v, normal(body, y)))


def shoot(body: BodyModel, x0, x1, steps: int) -> np.ndarray:
    """Impact points of ``steps`` billiard steps starting at ``x0`` toward ``x1``."""
    x0 = np.asarray(x0, dtype=float)
    v = np.asarray(x1, dtype=float) - x0
    state = RayState(x0, v / np.linalg.norm(v))
    out = np.empty((steps, x0.size))
    for k in range(steps):
        state = billiard_step(body, state)
        out[k] = state.x
    return out


def closure_residual(body: BodyModel, traj) -> float:
    """Max distance between shot impacts and the polygon's vertices, over ``diam``.

    Accepts a ``(p, d)`` vertex array or any object with a ``vertices``
    attribute.  Grazing or failed steps give ``inf``.
    """
    verts = np.asarray(getattr(traj, "vertices", traj), dtype=float)
    p = verts.shape[0]
    if p < 2:
        raise ValueError("need at least 2 vertices")
    try:
        shot = shoot(body, verts[0], verts[1], p)
    except BilliardError:
        return float("inf")
    target = np.roll(verts, -1, axis=0)
    return float(np.max(np.linalg.norm(shot - target, axis=1)) / body.diam)
