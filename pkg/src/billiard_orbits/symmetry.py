"""Dihedral re-indexing of trajectories and deduplication into orbit classes.

Two vertex sequences describe the same trajectory when one is a cyclic
rotation of the other, possibly reversed.  Symmetries of the body itself
(for example the coordinate reflections of an ellipsoid) are *not*
quotiented, so mirror-image trajectories count separately.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .varsolve import TrajectoryCandidate

__all__ = ["OrbitClass", "dihedral_images", "same_orbit", "dedup", "signature", "canonical_image"]

TOL_DEDUP = 1e-6


@dataclass(frozen=True, eq=False)
class OrbitClass:
    representative: TrajectoryCandidate
    members: int
    perimeter: float
    signature: tuple

    def to_dict(self) -> dict:
        rep = self.representative
        return {
            "perimeter": self.perimeter,
            "vertices": rep.vertices.tolist(),
            "kkt_residual": rep.kkt_residual,
            "members": self.members,
            "signature": list(self.signature),
        }


@lru_cache(maxsize=None)
def _perms(p: int) -> np.ndarray:
    idx = np.arange(p)
    rots = [np.roll(idx, -k) for k in range(p)]
    refl = [np.roll(idx[::-1], -k) for k in range(p)]
    out = np.array(rots + refl)
    out.flags.writeable = False
    return out


def _verts(t) -> np.ndarray:
    return np.asarray(getattr(t, "vertices", t), dtype=float)


def dihedral_images(traj):
    """The 2p re-indexings: p rotations, then p rotations of the reversal.

    Returns candidates if given a candidate, else ``(p, d)`` arrays.
    """
    X = _verts(traj)
    images = [X[perm] for perm in _perms(X.shape[0])]
    if isinstance(traj, TrajectoryCandidate):
        return [replace(traj, vertices=img) for img in images]
    return images


def same_orbit(t1, t2, tol_dedup: float = TOL_DEDUP, diam: float = 1.0) -> bool:
    """True iff some re-indexing of ``t1`` matches ``t2`` vertexwise within ``tol_dedup * diam``."""
    X, Y = _verts(t1), _verts(t2)
    if X.shape != Y.shape:
        return False
    imgs = X[_perms(X.shape[0])]
    dist = np.linalg.norm(imgs - Y[None], axis=-1).max(axis=-1)
    return bool(dist.min() <= tol_dedup * diam)


def _quantize(values, q):
    return tuple(float(v) for v in np.round(np.asarray(values) / q) * q)


def signature(traj, tol_dedup: float = TOL_DEDUP, diam: float = 1.0) -> tuple:
    """Perimeter followed by the sorted edge lengths, rounded to ``tol_dedup * diam``."""
    X = _verts(traj)
    edges = np.linalg.norm(np.roll(X, -1, axis=0) - X, axis=1)
    q = tol_dedup * diam
    return _quantize([edges.sum()], q) + _quantize(np.sort(edges), q)


def canonical_image(X: np.ndarray) -> np.ndarray:
    """Lexicographically smallest re-indexing (coordinates rounded to 1e-9)."""
    imgs = X[_perms(X.shape[0])]
    keys = np.round(imgs.reshape(len(imgs), -1), 9)
    best = min(range(len(imgs)), key=lambda k: tuple(keys[k]))
    return imgs[best]


def dedup(
    candidates, tol_dedup: float = TOL_DEDUP, diam: float | None = None
) -> list[OrbitClass]:
    """Collapse candidates into dihedral orbit classes.

    Continuum-suspect candidates are skipped; they are reported separately.
    Candidates are compared only when their perimeters and sorted edge
    lengths agree within ``2 * tol_dedup * diam``; matching pairs are merged
    with union-find.  Classes come back ordered by (perimeter, signature),
    then by canonical vertices, so the result does not depend on the
    input order.
    """
    cands = [c for c in candidates if not c.continuum_suspect]
    if not cands:
        return []
    if diam is None:
        diam = 2.0 * max(float(np.abs(c.vertices).max()) for c in cands)
    window = 2.0 * tol_dedup * diam
    per = np.array([c.perimeter for c in cands])
    edges = [np.sort(c.edge_lengths()) for c in cands]
    order = np.argsort(per, kind="stable")
    parent = list(range(len(cands)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a_pos, i in enumerate(order):
        for j in order[a_pos + 1:]:
            if per[j] - per[i] > window:
                break
            if cands[i].p != cands[j].p:
                continue
            ri, rj = find(i), find(j)
            if ri == rj or np.max(np.abs(edges[i] - edges[j])) > window:
                continue
            if same_orbit(cands[i], cands[j], tol_dedup, diam):
                parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, list[int]] = {}
    for i in range(len(cands)):
        groups.setdefault(find(i), []).append(i)
    classes = []
    for members in groups.values():
        best = min(
            members,
            key=lambda k: (cands[k].kkt_residual, cands[k].start_index, tuple(cands[k].vertices.ravel())),
        )
        rep = cands[best]
        rep = replace(rep, vertices=canonical_image(rep.vertices))
        classes.append(
            OrbitClass(
                representative=rep,
                members=len(members),
                perimeter=rep.perimeter,
                signature=signature(rep, tol_dedup, diam),
            )
        )
    # mirror images share perimeter and signature; the canonical vertices break the tie
    classes.sort(key=lambda c: (c.perimeter, c.signature, tuple(np.round(c.representative.vertices.ravel(), 9))))
    return classes
