"""Periodic billiard trajectories as critical points of the perimeter.

A closed polygon ``x_1 .. x_p`` inscribed in the boundary is a billiard
trajectory exactly when the gradient of the perimeter

    f(x) = sum_i |x_i - x_{i+1}|

is normal to the boundary at every vertex.  The solver runs damped Newton on
the Lagrange system ``df/dx_i = lam_i grad g(x_i)``, ``g(x_i) = 0`` from many
random inscribed polygons.  Newton converges to saddles as well as extrema,
which matters because most periodic orbits are saddles of ``f``.

The core works on batches of shape ``(n, p, d)`` so that thousands of starts
share each numpy call.  Runs are deterministic for a fixed seed and config.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .dynamics import EDGE_FACTOR, GRAZING_TOL
from .errors import DegenerateEdge
from .geometry import BodyModel, radial_distance

__all__ = [
    "SolverConfig",
    "TrajectoryCandidate",
    "SearchStats",
    "perimeter",
    "perimeter_gradient",
    "kkt_residual",
    "newton_refine",
    "classify_continuum",
    "make_candidate",
    "random_starts",
    "multistart_search",
    "run_multistart",
]


@dataclass(frozen=True)
class SolverConfig:
    n_starts: int = 1000
    rng_seed: int = 0
    max_newton_iters: int = 60
    tol_crit: float = 1e-10
    edge_factor: float = EDGE_FACTOR
    deflation_radius: float = 1e-4
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    max_backtracks: int = 12
    batch_size: int = 512
    continuum_rtol: float = 1e-8

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                if name == "rng_seed" and value == 0:
                    continue
                raise ValueError(f"SolverConfig.{name} must be positive, got {value!r}")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must fit in 64 bits")
        if self.tol_crit > 1e-8:
            raise ValueError(f"tol_crit must be <= 1e-8, got {self.tol_crit!r}")
        if not self.armijo_shrink < 1:
            raise ValueError("armijo_shrink must be < 1")


@dataclass(frozen=True, eq=False)
class TrajectoryCandidate:
    """Cyclic sequence of ``p`` boundary points plus solver diagnostics."""

    vertices: np.ndarray
    perimeter: float
    kkt_residual: float
    converged: bool = False
    degenerate_edge: bool = False
    grazing: bool = False
    continuum_suspect: bool = False
    iterations: int = 0
    start_index: int = -1

    @property
    def p(self) -> int:
        return self.vertices.shape[0]

    @property
    def dimension(self) -> int:
        return self.vertices.shape[1]

    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.roll(self.vertices, -1, axis=0) - self.vertices, axis=1)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "vertices": self.vertices.tolist(),
            "perimeter": self.perimeter,
            "kkt_residual": self.kkt_residual,
            "converged": self.converged,
            "degenerate_edge": self.degenerate_edge,
            "grazing": self.grazing,
            "continuum_suspect": self.continuum_suspect,
            "iterations": self.iterations,
            "start_index": self.start_index,
        }


@dataclass
class SearchStats:
    starts: int = 0
    converged: int = 0
    degenerate: int = 0
    grazing: int = 0
    unconverged: int = 0
    continuum: int = 0
    deflated: int = 0


# -- batched kernels ----------------------------------------------------------


def _edges(X):
    E = np.roll(X, -1, axis=-2) - X
    r = np.linalg.norm(E, axis=-1)
    return E, r


def _grad_batch(X):
    E, r = _edges(X)
    with np.errstate(divide="ignore", invalid="ignore"):
        U = E / r[..., None]
    return np.roll(U, 1, axis=-2) - U, U, r


def _tangential(G, N):
    return G - np.sum(G * N, axis=-1, keepdims=True) * N


def _unit_normals(body, X):
    gr = body.grad(X)
    return gr / np.linalg.norm(gr, axis=-1, keepdims=True), gr


def _kkt_batch(body, X):
    G, _, _ = _grad_batch(X)
    N, _ = _unit_normals(body, X)
    return np.linalg.norm(_tangential(G, N), axis=-1).max(axis=-1) / 2.0


def _lagrangian_hessian(body, X, lam):
    """Hessian of ``f - sum lam_i g(x_i)`` as an ``(n, p*d, p*d)`` array."""
    n, p, d = X.shape
    _, U, r = _grad_batch(X)
    eye = np.eye(d)
    K = (eye - U[..., :, None] * U[..., None, :]) / r[..., None, None]
    H = np.zeros((n, p, p, d, d))
    idx = np.arange(p)
    nxt = (idx + 1) % p
    # p == 2 visits the same pair twice; np.add.at accumulates both edges
    np.add.at(H, (slice(None), idx, idx), K)
    np.add.at(H, (slice(None), nxt, nxt), K)
    np.add.at(H, (slice(None), idx, nxt), -K)
    np.add.at(H, (slice(None), nxt, idx), -K)
    H[:, idx, idx] -= lam[..., None, None] * body.hessian(X)
    return H.transpose(0, 1, 3, 2, 4).reshape(n, p * d, p * d)


def _multipliers(G, grad_g):
    return np.sum(G * grad_g, axis=-1) / np.sum(grad_g * grad_g, axis=-1)


# vertices sit on the boundary to roundoff so that shooting checks stay sharp
_POLISH = 1e-5
_SEGMENT = np.linspace(0.0, 1.0, 17)[1:-1]


def _retract(body, Y, max_iter=8):
    """Pull points back onto the boundary, vectorized over leading axes."""
    shape = Y.shape
    Y = Y.reshape(-1, shape[-1]).copy()
    tol = body.tol_boundary
    near = np.abs(body.g(Y)) < 0.25
    Z = Y[near]
    for k in range(max_iter):
        gz = body.g(Z)
        if np.all(np.abs(gz) <= _POLISH * tol) or k == max_iter - 1:
            break
        gr = body.grad(Z)
        Z = Z - (gz / np.sum(gr * gr, axis=-1))[:, None] * gr
    Y[near] = Z
    gy = body.g(Y)
    bad = ~near | ~np.isfinite(gy) | ~(np.abs(gy) <= tol)
    # {g <= 0} may have far components; the segment from the origin must stay inside
    inner = body.g(_SEGMENT[:, None, None] * Y[None]) < 0
    bad |= ~inner.all(axis=0)
    if bad.any():
        nrm = np.linalg.norm(Y[bad], axis=-1)
        ok = np.isfinite(nrm) & (nrm > 0)
        Ub = np.where(ok[:, None], Y[bad] / np.where(ok, nrm, 1.0)[:, None], 0.0)
        Ub[~ok, 0] = 1.0
        Y[bad] = radial_distance(body, Ub)[:, None] * Ub
    return Y.reshape(shape)


def _merit(body, X):
    G, _, r = _grad_batch(X)
    N, _ = _unit_normals(body, X)
    T = _tangential(G, N)
    return np.sum(T * T, axis=(-1, -2)), r.min(axis=-1)


def _newton_batch(body: BodyModel, X0, cfg: SolverConfig, known=None):
    """Damped Newton for a batch of starts.

    Returns final vertices, iteration counts and status arrays
    ``converged``, ``degenerate``, ``deflated``.
    """
    X = np.array(X0, dtype=float)
    n, p, d = X.shape
    eps = cfg.edge_factor * body.diam
    iters = np.zeros(n, dtype=int)
    converged = np.zeros(n, dtype=bool)
    degenerate = np.zeros(n, dtype=bool)
    deflated = np.zeros(n, dtype=bool)
    polished = np.zeros(n, dtype=bool)
    merit, rmin = _merit(body, X)
    degenerate |= ~(rmin >= eps)
    active = ~degenerate
    defl_r = cfg.deflation_radius * body.diam
    for it in range(cfg.max_newton_iters + 1):
        if not active.any():
            break
        a = np.flatnonzero(active)
        Xa = X[a]
        kkt = _kkt_batch(body, Xa)
        hit = kkt <= cfg.tol_crit
        # one extra full Newton step after reaching tolerance tightens to roundoff
        finish = hit & polished[a]
        converged[a[finish]] = True
        active[a[finish]] = False
        if known is not None and len(known) and defl_r > 0:
            close = _near_known(Xa, known, defl_r) & ~hit
            deflated[a[close]] = True
            active[a[close]] = False
            finish |= close
        if it == cfg.max_newton_iters:
            break
        keep = ~finish
        a, Xa, hit = a[keep], Xa[keep], hit[keep]
        if a.size == 0:
            break
        polished[a[hit]] = True
        iters[a] += 1
        G, _, _ = _grad_batch(Xa)
        N, gg = _unit_normals(body, Xa)
        lam = _multipliers(G, gg)
        m = p * d
        J = np.zeros((a.size, m + p, m + p))
        J[:, :m, :m] = _lagrangian_hessian(body, Xa, lam)
        cols = (np.arange(p)[:, None] * d + np.arange(d)[None, :])
        for i in range(p):
            J[:, cols[i], m + i] = -gg[:, i, :]
            J[:, m + i, cols[i]] = gg[:, i, :]
        rhs = np.concatenate([(G - lam[..., None] * gg).reshape(a.size, m), body.g(Xa)], axis=1)
        step = _solve(J, -rhs)[:, :m].reshape(a.size, p, d)
        ok = np.all(np.isfinite(step), axis=(1, 2))
        step[~ok] = 0.0
        m0 = merit[a]
        alpha = np.ones(a.size)
        accepted = np.zeros(a.size, dtype=bool)
        Xnew = Xa.copy()
        mnew = m0.copy()
        rnew = np.full(a.size, np.inf)
        for _ in range(cfg.max_backtracks):
            trial = ~accepted & ok
            if not trial.any():
                break
            t = np.flatnonzero(trial)
            Xt = _retract(body, Xa[t] + alpha[t, None, None] * step[t])
            mt, rt = _merit(body, Xt)
            good = (mt <= (1.0 - cfg.armijo_c * alpha[t]) * m0[t]) | hit[t]
            good &= rt >= eps
            acc = t[good]
            Xnew[acc] = Xt[good]
            mnew[acc] = mt[good]
            rnew[acc] = rt[good]
            accepted[acc] = True
            alpha[t[~good]] *= cfg.armijo_shrink
        stalled = ~accepted
        X[a[accepted]] = Xnew[accepted]
        merit[a[accepted]] = mnew[accepted]
        # a failed line search ends the run; an edge collapse marks it degenerate
        active[a[stalled]] = False
        _, rchk = _edges(X[a[stalled]])
        degenerate[a[stalled]] |= rchk.min(axis=-1) < 2 * eps
    return X, iters, converged, degenerate, deflated


def _solve(J, b):
    try:
        return np.linalg.solve(J, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.empty_like(b)
        for k in range(J.shape[0]):
            out[k] = np.linalg.lstsq(J[k], b[k], rcond=None)[0]
        return out


def _dihedral_stack(X):
    """All 2p vertex re-indexings, shape ``(2p, p, d)`` per trajectory row."""
    p = X.shape[-2]
    idx = np.arange(p)
    perms = [np.roll(idx, -k) for k in range(p)]
    rev = idx[::-1]
    perms += [np.roll(rev, -k) for k in range(p)]
    return X[..., np.array(perms), :]


def _near_known(Xa, known, radius):
    """Whether each iterate lies within ``radius`` of a known orbit (any re-indexing)."""
    K = _dihedral_stack(np.asarray(known))  # (k, 2p, p, d)
    diff = Xa[:, None, None] - K[None]
    dist = np.linalg.norm(diff, axis=-1).max(axis=-1)
    return dist.min(axis=(1, 2)) < radius


# -- public single-trajectory API --------------------------------------------


def _vertices(traj):
    X = np.asarray(getattr(traj, "vertices", traj), dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError(f"expected a (p, d) vertex array with p >= 2, got shape {X.shape}")
    return X


def perimeter(traj) -> float:
    """Sum of the cyclic edge lengths."""
    _, r = _edges(_vertices(traj))
    if r.min() < 1e-14:
        raise DegenerateEdge(f"edge of length {r.min():.3g}")
    return float(r.sum())


def perimeter_gradient(traj) -> np.ndarray:
    """``df/dx_i = unit(x_i - x_{i-1}) + unit(x_i - x_{i+1})`` as a ``(p, d)`` array."""
    X = _vertices(traj)
    G, _, r = _grad_batch(X)
    if r.min() < 1e-14:
        raise DegenerateEdge(f"edge of length {r.min():.3g}")
    return G


def kkt_residual(body: BodyModel, traj) -> float:
    """Largest tangential gradient component over the vertices, halved.

    Zero exactly at billiard trajectories; each gradient has norm at most 2.
    """
    X = _vertices(traj)
    perimeter_gradient(X)
    return float(_kkt_batch(body, X))


def make_candidate(body: BodyModel, X, **flags) -> TrajectoryCandidate:
    X = np.array(_vertices(X), dtype=float)
    _, r = _edges(X)
    per = float(r.sum())
    res = float(_kkt_batch(body, X)) if r.min() > 0 else float("inf")
    return TrajectoryCandidate(X, per, res, **flags)


def _grazing(body, X) -> bool:
    _, U, _ = _grad_batch(X)
    N, _ = _unit_normals(body, X)
    cos_out = np.abs(np.sum(U * N, axis=-1))
    return bool(cos_out.min() < GRAZING_TOL)


def newton_refine(body: BodyModel, traj, cfg: SolverConfig = SolverConfig()) -> TrajectoryCandidate:
    """Refine one inscribed polygon to a critical point of the perimeter.

    Never raises on failure: the returned candidate carries the diagnostic
    flags instead.
    """
    X0 = _vertices(traj)[None]
    X, iters, conv, degen, _ = _newton_batch(body, X0, cfg)
    return _finalize(body, X[0], iters[0], conv[0], degen[0], cfg, getattr(traj, "start_index", -1))


def _finalize(body, X, iters, conv, degen, cfg, start_index):
    eps = cfg.edge_factor * body.diam
    _, r = _edges(X)
    degen = bool(degen or r.min() < eps)
    cand = make_candidate(
        body,
        X,
        iterations=int(iters),
        start_index=int(start_index),
        degenerate_edge=degen,
    )
    grazing = _grazing(body, X) if np.isfinite(cand.kkt_residual) else True
    converged = bool(conv) and not degen and cand.kkt_residual <= cfg.tol_crit
    return replace(cand, converged=converged, grazing=grazing)


def reduced_hessian_eigenvalues(body: BodyModel, traj) -> np.ndarray:
    """Eigenvalues of the Lagrangian Hessian restricted to the product of tangent planes."""
    X = _vertices(traj)
    p, d = X.shape
    G, _, _ = _grad_batch(X)
    N, gg = _unit_normals(body, X)
    lam = _multipliers(G, gg)
    W = _lagrangian_hessian(body, X[None], lam[None])[0]
    Z = np.zeros((p * d, p * (d - 1)))
    for i in range(p):
        # orthonormal complement of the normal via a full QR
        q, _ = np.linalg.qr(np.column_stack([N[i], np.eye(d)]))
        Z[i * d:(i + 1) * d, i * (d - 1):(i + 1) * (d - 1)] = q[:, 1:d]
    return np.linalg.eigvalsh(Z.T @ W @ Z)


def classify_continuum(
    body: BodyModel, traj, rtol: float = 1e-8, expected_null: int = 0
) -> bool:
    """Flag critical points that sit on a continuous family.

    Counts reduced-Hessian eigenvalues below ``rtol`` times the largest one
    in magnitude.  The built-in bodies carry no continuous symmetry unless
    they are integrable (spheres, ellipsoids), so every zero mode beyond
    ``expected_null`` marks the trajectory as non-isolated.
    """
    ev = reduced_hessian_eigenvalues(body, traj)
    scale = np.abs(ev).max()
    return int(np.sum(np.abs(ev) < rtol * scale)) > expected_null


# -- multistart -----------------------------------------------------------------


def random_starts(body: BodyModel, p: int, seed: int, indices, edge_factor: float = EDGE_FACTOR):
    """Inscribed p-gons from unit Gaussian directions, one generator per start index.

    Rejection-sampled so consecutive vertices are at least the minimum edge apart.
    """
    d = body.dimension
    eps = edge_factor * body.diam
    rngs = [np.random.default_rng([seed, int(k)]) for k in indices]
    U = np.array([rng.standard_normal((p, d)) for rng in rngs]).reshape(-1, p, d)
    pending = np.arange(len(rngs))
    out = np.empty((len(rngs), p, d))
    while pending.size:
        u = U[pending]
        u /= np.linalg.norm(u, axis=-1, keepdims=True)
        X = radial_distance(body, u.reshape(-1, d)).reshape(-1, p, 1) * u
        ok = _edges(X)[1].min(axis=-1) >= eps
        out[pending[ok]] = X[ok]
        pending = pending[~ok]
        for k in pending:
            U[k] = rngs[k].standard_normal((p, d))
    return out


def run_multistart(
    body: BodyModel, p: int, cfg: SolverConfig = SolverConfig()
) -> tuple[list[TrajectoryCandidate], SearchStats]:
    """Multistart search returning certified candidates and run statistics.

    Starts are processed in fixed-size batches in ascending start index.
    Iterates entering the deflation radius of an orbit certified in an
    earlier batch stop early, since they can only reproduce it.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    stats = SearchStats(starts=cfg.n_starts)
    found: list[TrajectoryCandidate] = []
    known: list[np.ndarray] = []
    for lo in range(0, cfg.n_starts, cfg.batch_size):
        idx = np.arange(lo, min(lo + cfg.batch_size, cfg.n_starts))
        X0 = random_starts(body, p, cfg.rng_seed, idx, cfg.edge_factor)
        X, iters, conv, degen, defl = _newton_batch(
            body, X0, cfg, known=np.array(known) if known else None
        )
        stats.deflated += int(defl.sum())
        for j, k in enumerate(idx):
            if defl[j]:
                continue
            cand = _finalize(body, X[j], iters[j], conv[j], degen[j], cfg, k)
            if cand.degenerate_edge:
                stats.degenerate += 1
            elif not cand.converged:
                stats.unconverged += 1
            elif cand.grazing:
                stats.grazing += 1
            else:
                flag = classify_continuum(body, cand, cfg.continuum_rtol)
                cand = replace(cand, continuum_suspect=flag)
                stats.converged += 1
                stats.continuum += int(flag)
                found.append(cand)
                if not flag and not any(_same(cand.vertices, q, cfg.deflation_radius * body.diam) for q in known):
                    known.append(cand.vertices)
    return found, stats


def _same(X, Y, radius):
    return bool(_near_known(X[None], Y[None], radius)[0])


def multistart_search(
    body: BodyModel, p: int, cfg: SolverConfig = SolverConfig()
) -> list[TrajectoryCandidate]:
    """Converged, non-grazing, non-degenerate critical points from ``cfg.n_starts`` seeds."""
    return run_multistart(body, p, cfg)[0]
