"""Smooth strictly convex bodies given as level sets ``{g = 0}``.

The defining function is

    g(x) = sum_i (x_i / a_i)^2 - 1 + delta * sum_i c_i * x_i^4

with semi-axes ``a_i > 0``, bump amplitude ``delta >= 0`` and bump
coefficients ``c_i``.  ``delta = 0`` gives an ellipsoid.  The body is the
star-shaped component of ``{g <= 0}`` containing the origin.

All evaluation helpers broadcast over leading axes: a point array of shape
``(..., d)`` yields values of shape ``(...)`` or ``(..., d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePoint, InvalidBody, NoConvergence

__all__ = [
    "BodyModel",
    "BoundaryPoint",
    "ellipsoid",
    "bumped_ellipsoid",
    "unit_ball",
    "eval_constraint",
    "normal",
    "radial_project",
    "project_to_boundary",
]

_N_CONVEXITY_SAMPLES = 1000
_RADIAL_SCAN = 64
_MAX_ROOT_ITERS = 100


@dataclass(frozen=True)
class BoundaryPoint:
    x: np.ndarray
    n: np.ndarray


@dataclass(frozen=True)
class BodyModel:
    """Immutable smooth convex body; validated on construction.

    Raises
    ------
    InvalidBody
        If a semi-axis is non-positive, the bump coefficients have the wrong
        length, or the Hessian of ``g`` fails to be positive definite on
        sampled points of the body.
    """

    semi_axes: tuple[float, ...]
    bump_amplitude: float = 0.0
    bump_coeffs: tuple[float, ...] | None = None
    _a: np.ndarray = field(init=False, repr=False, compare=False)
    _c: np.ndarray = field(init=False, repr=False, compare=False)
    _inv_a2: np.ndarray = field(init=False, repr=False, compare=False)
    _bump: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = np.asarray(self.semi_axes, dtype=float)
        if a.ndim != 1 or a.size < 2:
            raise InvalidBody(f"need at least 2 semi-axes, got {self.semi_axes!r}")
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise InvalidBody(f"semi-axes must be positive, got {self.semi_axes!r}")
        delta = float(self.bump_amplitude)
        if not np.isfinite(delta) or delta < 0:
            raise InvalidBody(f"bump amplitude must be >= 0, got {delta!r}")
        if self.bump_coeffs is None:
            c = np.zeros_like(a)
        else:
            c = np.asarray(self.bump_coeffs, dtype=float)
            if c.shape != a.shape or not np.all(np.isfinite(c)):
                raise InvalidBody(
                    f"bump_coeffs must be {a.size} finite reals, got {self.bump_coeffs!r}"
                )
        object.__setattr__(self, "semi_axes", tuple(float(v) for v in a))
        object.__setattr__(self, "bump_amplitude", delta)
        object.__setattr__(self, "bump_coeffs", tuple(float(v) for v in c))
        a.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "_a", a)
        object.__setattr__(self, "_c", c)
        object.__setattr__(self, "_inv_a2", 1.0 / a**2)
        object.__setattr__(self, "_bump", delta * c)
        self._check_convexity()

    # -- descriptors ---------------------------------------------------------

    @property
    def dimension(self) -> int:
        return self._a.size

    @property
    def kind(self) -> str:
        if self.bump_amplitude == 0.0 or not np.any(self._c):
            return "ellipsoid"
        return "bumped-ellipsoid"

    @property
    def diam(self) -> float:
        """Diameter estimate ``2 * max(a_i)`` used to scale all tolerances."""
        return 2.0 * float(self._a.max())

    @property
    def tol_boundary(self) -> float:
        return 1e-10 * self.diam

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "dimension": self.dimension,
            "semi_axes": list(self.semi_axes),
            "bump_amplitude": self.bump_amplitude,
            "bump_coeffs": list(self.bump_coeffs),
        }

    # -- vectorized evaluation -----------------------------------------------

    def g(self, x):
        x = np.asarray(x, dtype=float)
        x2 = x * x
        val = x2 @ self._inv_a2 - 1.0
        if self.bump_amplitude == 0.0:
            return val
        return val + (x2 * x2) @ self._bump

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        if self.bump_amplitude == 0.0:
            return 2.0 * self._inv_a2 * x
        return (2.0 * self._inv_a2 + 4.0 * self._bump * (x * x)) * x

    def hess_diag(self, x):
        """Diagonal of the (diagonal) Hessian of ``g``."""
        x = np.asarray(x, dtype=float)
        return 2.0 / self._a**2 + 12.0 * self.bump_amplitude * self._c * x**2

    def hessian(self, x):
        h = self.hess_diag(x)
        return h[..., :, None] * np.eye(self.dimension)

    # -- internals -----------------------------------------------------------

    def _check_convexity(self):
        rng = np.random.default_rng(0)
        u = rng.standard_normal((_N_CONVEXITY_SAMPLES, self.dimension))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        try:
            t = radial_distance(self, u)
        except NoConvergence as exc:
            raise InvalidBody(f"body is not bounded along some ray: {exc}") from None
        # boundary points plus interior points on the same rays
        scales = np.array([1.0, 0.75, 0.5, 0.25, 0.0])
        pts = (scales[:, None, None] * t[None, :, None] * u[None, :, :]).reshape(
            -1, self.dimension
        )
        eig = np.linalg.eigvalsh(self.hessian(pts))
        if eig.min() <= 0:
            raise InvalidBody(
                "Hessian of the defining function is not positive definite on the body "
                f"(min eigenvalue {eig.min():.3g}); reduce the bump amplitude"
            )


def ellipsoid(*semi_axes: float) -> BodyModel:
    return BodyModel(tuple(semi_axes))


def bumped_ellipsoid(semi_axes, delta: float, coeffs) -> BodyModel:
    return BodyModel(tuple(semi_axes), float(delta), tuple(coeffs))


def unit_ball(d: int) -> BodyModel:
    return BodyModel((1.0,) * d)


def eval_constraint(body: BodyModel, x) -> float:
    """Value of the defining function; negative inside, zero on the boundary."""
    return float(body.g(x))


def normal(body: BodyModel, x) -> np.ndarray:
    """Outward unit normal ``grad g / |grad g|`` at ``x``."""
    gr = body.grad(x)
    nrm = float(np.linalg.norm(gr))
    if nrm < 1e-12:
        raise DegeneratePoint(f"|grad g| = {nrm:.3g} at {np.asarray(x)!r}")
    return gr / nrm


def radial_distance(body: BodyModel, u) -> np.ndarray:
    """Vectorized first root ``t > 0`` of ``g(t u) = 0`` for unit rows of ``u``.

    Safeguarded Newton: a coarse scan of ``[0, 2 max a]`` brackets the first
    sign change, then Newton steps falling outside the bracket are replaced
    by bisection.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    n = u.shape[0]
    hi_max = 2.0 * float(body._a.max())
    grid = np.linspace(0.0, hi_max, _RADIAL_SCAN + 1)[1:]
    hvals = body.g(grid[None, :, None] * u[:, None, :])
    positive = hvals > 0
    if not np.all(positive.any(axis=1)):
        raise NoConvergence("no boundary crossing within the bracket [0, 2 max a]")
    k = positive.argmax(axis=1)
    hi = grid[k]
    lo = np.where(k > 0, grid[np.maximum(k - 1, 0)], 0.0)
    t = hi.copy()
    tol = body.tol_boundary
    done = np.zeros(n, dtype=bool)
    for _ in range(_MAX_ROOT_ITERS):
        x = t[:, None] * u
        h = body.g(x)
        dh = np.sum(body.grad(x) * u, axis=1)
        pos = h > 0
        hi = np.where(pos, t, hi)
        lo = np.where(pos, lo, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_new = t - h / dh
        bad = ~np.isfinite(t_new) | (t_new <= lo) | (t_new >= hi)
        t_new = np.where(bad, 0.5 * (lo + hi), t_new)
        # stop once the update stalls at roundoff
        done |= (np.abs(h) <= 1e-6 * tol) | (
            np.abs(t_new - t) <= 4 * np.finfo(float).eps * np.maximum(t, 1.0)
        )
        if done.all():
            break
        t = np.where(done, t, t_new)
    if not done.all() or np.any(np.abs(body.g(t[:, None] * u)) > tol):
        raise NoConvergence("radial root-find did not converge")
    return t


def radial_project(body: BodyModel, u) -> BoundaryPoint:
    """Boundary point ``t u`` with ``t > 0`` on the ray through the unit vector ``u``."""
    u = np.asarray(u, dtype=float)
    t = radial_distance(body, u[None, :])[0]
    x = t * u
    return BoundaryPoint(x, normal(body, x))


def project_to_boundary(
    body: BodyModel, x, *, max_iter: int = 50
) -> BoundaryPoint:
    """Nearest boundary point to ``x`` by Newton on the optimality system.

    Solves ``y - x + lam * grad g(y) = 0``, ``g(y) = 0`` starting from the
    radial projection of ``x``.
    """
    x = np.asarray(x, dtype=float)
    d = body.dimension
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise NoConvergence("cannot project the origin: nearest point not unique")
    y = radial_project(body, x / r).x
    gy = body.grad(y)
    lam = -float((y - x) @ gy) / float(gy @ gy)
    tol = body.tol_boundary
    for _ in range(max_iter):
        gy = body.grad(y)
        res = np.concatenate([y - x + lam * gy, [body.g(y)]])
        if abs(res[-1]) <= tol and np.linalg.norm(res[:d]) <= 1e-12 * body.diam:
            return BoundaryPoint(y, normal(body, y))
        jac = np.zeros((d + 1, d + 1))
        jac[:d, :d] = np.eye(d) + lam * body.hessian(y)
        jac[:d, d] = gy
        jac[d, :d] = gy
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            break
        y = y + step[:d]
        lam = lam + step[d]
    raise NoConvergence(f"nearest-point projection of {x!r} did not converge")
