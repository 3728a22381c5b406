"""Search pipeline, bound verdicts, reports and trajectory exports."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cohomology import (
    build_plane_conf_algebra,
    build_sphere_conf_algebra,
    index_and_bound,
    is_prime,
    trajectory_bound,
)
from .config import ExperimentConfig
from .dynamics import closure_residual
from .geometry import BodyModel
from .symmetry import OrbitClass, dedup, same_orbit
from .varsolve import make_candidate, run_multistart

log = logging.getLogger(__name__)

PASS = "PASS"
FAIL = "FAIL"
INAPPLICABLE = "INAPPLICABLE"
DEGENERATE = "INAPPLICABLE-DEGENERATE"

EXPORT_COLUMNS = ("class", "p", "d", "perimeter", "kkt_residual", "members", "flags")


def verdict(d: int, p: int, count: int, continuum: int = 0) -> str:
    """PASS iff the main bound applies (d >= 3, p odd prime) and is met.

    An unmet bound on a body whose finds are all continuous families is
    reported as degenerate rather than as a failure: isolated orbits are not
    countable there.
    """
    if d < 3 or p == 2 or not is_prime(p):
        return INAPPLICABLE
    if count >= trajectory_bound(d, p):
        return PASS
    if continuum:
        return DEGENERATE
    return FAIL


def _continuum_families(cands, diam, tol):
    q = tol * diam
    fams: dict[float, int] = {}
    for c in cands:
        key = float(np.round(c.perimeter / q) * q)
        fams[key] = fams.get(key, 0) + 1
    return [{"perimeter": k, "members": v} for k, v in sorted(fams.items())]


@dataclass
class RunReport:
    config: dict
    body: dict
    d: int
    p: int
    classes: list[OrbitClass]
    continuum: list = field(default_factory=list)
    continuum_families: list = field(default_factory=list)
    bound: int = 0
    verdict: str = INAPPLICABLE
    seed: int = 0
    stats: dict = field(default_factory=dict)
    tol_dedup: float = 1e-6
    wall_clock: float = 0.0

    @property
    def certified_count(self) -> int:
        return len(self.classes)

    def to_dict(self) -> dict:
        """Reproducible document; wall-clock time is kept out of it."""
        return {
            "config": self.config,
            "body": self.body,
            "d": self.d,
            "p": self.p,
            "seed": self.seed,
            "tol_dedup": self.tol_dedup,
            "orbit_classes": [c.to_dict() for c in self.classes],
            "continuum": {
                "count": len(self.continuum),
                "families": self.continuum_families,
            },
            "certified_count": self.certified_count,
            "bound": self.bound,
            "verdict": self.verdict,
            "solver_stats": self.stats,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, path) -> None:
        path = Path(path)
        path.write_text(self.to_json(), encoding="utf-8")
        timing = path.with_name(path.name + ".timing.json")
        timing.write_text(json.dumps({"wall_clock_seconds": self.wall_clock}) + "\n", encoding="utf-8")


def body_from_dict(desc: dict) -> BodyModel:
    return BodyModel(tuple(desc["semi_axes"]), desc.get("bump_amplitude", 0.0), desc.get("bump_coeffs"))


def run_search(config: ExperimentConfig, *, write: bool = True) -> RunReport:
    """Multistart search, dedup into dihedral classes, compare with the bound."""
    t0 = time.perf_counter()
    body = config.body()
    d, p = body.dimension, config.p
    log.info("searching %d starts for p=%d on %s", config.solver.n_starts, p, body.describe())
    cands, stats = run_multistart(body, p, config.solver)
    isolated = [c for c in cands if not c.continuum_suspect]
    flagged = [c for c in cands if c.continuum_suspect]
    classes = dedup(isolated, config.tol_dedup, body.diam)
    report = RunReport(
        config=config.to_dict(),
        body=body.describe(),
        d=d,
        p=p,
        classes=classes,
        continuum=flagged,
        continuum_families=_continuum_families(flagged, body.diam, config.tol_dedup),
        bound=trajectory_bound(d, p),
        verdict=verdict(d, p, len(classes), len(flagged)),
        seed=config.solver.rng_seed,
        stats=dict(stats.__dict__),
        tol_dedup=config.tol_dedup,
        wall_clock=time.perf_counter() - t0,
    )
    log.info("found %d classes (bound %d): %s", len(classes), report.bound, report.verdict)
    if write:
        if config.report_path:
            report.write(config.report_path)
        if config.export_path:
            export_trajectories(report, config.export_path)
    return report


def run_cohomology(d: int, p: int) -> dict:
    """Betti tables, top degrees and index record for ``(d, p)``.

    ``d = 2`` yields the plane ring only; the sphere ring and index record
    need ``d >= 3`` and an odd prime ``p``.
    """
    plane = build_plane_conf_algebra(d, p).betti()
    frag = {
        "d": d,
        "p": p,
        "plane": plane.to_dict(),
        "checks": {"plane_degree0": plane.dims[0] == 1},
    }
    if d >= 3 and p > 2:
        sphere = build_sphere_conf_algebra(d, p).betti()
        rec = index_and_bound(d, p)
        frag["sphere"] = sphere.to_dict()
        frag["index"] = rec.to_dict()
        frag["checks"].update(
            {
                "plane_top_equals_hind_plane": plane.top_degree == rec.hind_plane,
                "plane_top_dimension": plane.dims[plane.top_degree] == p - 1,
                "sphere_top_equals_hind_sphere": sphere.top_degree == rec.hind_sphere,
                "sphere_dims_at_most_one": all(v <= 1 for v in sphere.dims.values()),
                "hind_sphere_at_least_stiefel": rec.hind_sphere >= rec.stiefel_index,
            }
        )
    return frag


# -- exports -------------------------------------------------------------------


def export_trajectories(report: RunReport, path) -> None:
    """Tab-separated table, one orbit class per row, full-precision coordinates."""
    d, p = report.d, report.p
    coords = [f"x{i + 1}_{k + 1}" for i in range(p) for k in range(d)]
    lines = [
        "# body " + json.dumps(report.body, sort_keys=True),
        "\t".join(EXPORT_COLUMNS + tuple(coords)),
    ]
    for k, cls in enumerate(report.classes):
        rep = cls.representative
        flags = "continuum" if rep.continuum_suspect else "isolated"
        row = [str(k), str(p), str(d), repr(cls.perimeter), repr(rep.kkt_residual), str(cls.members), flags]
        row += [repr(float(v)) for v in rep.vertices.ravel()]
        lines.append("\t".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_export(path) -> tuple[BodyModel, list[dict]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("# body "):
        raise ValueError(f"{path}: missing '# body' header line")
    body = body_from_dict(json.loads(lines[0][len("# body "):]))
    header = lines[1].split("\t")
    records = []
    for line in lines[2:]:
        if not line.strip():
            continue
        vals = dict(zip(header, line.split("\t")))
        p, d = int(vals["p"]), int(vals["d"])
        verts = np.array(
            [[float(vals[f"x{i + 1}_{k + 1}"]) for k in range(d)] for i in range(p)]
        )
        records.append({"class": int(vals["class"]), "perimeter": float(vals["perimeter"]), "vertices": verts})
    return body, records


def verify_export(path, tol: float = 1e-8) -> list[dict]:
    """Re-shoot every exported trajectory; ``ok`` iff its closure residual is within ``tol``."""
    body, records = read_export(path)
    out = []
    for rec in records:
        res = closure_residual(body, rec["vertices"])
        out.append({"class": rec["class"], "perimeter": rec["perimeter"], "closure_residual": res, "ok": res <= tol})
    return out


def merge_reports(paths) -> dict:
    """Pool orbit classes of several reports on one body and length, then re-dedup."""
    docs = [json.loads(Path(pth).read_text(encoding="utf-8")) for pth in paths]
    if not docs:
        raise ValueError("nothing to merge")
    body_desc, p = docs[0]["body"], docs[0]["p"]
    for doc, pth in zip(docs, paths):
        if doc["body"] != body_desc or doc["p"] != p:
            raise ValueError(f"{pth}: body or p differs from {paths[0]}")
    body = body_from_dict(body_desc)
    tol = max(doc["tol_dedup"] for doc in docs)
    pooled = []
    for doc in docs:
        for cls in doc["orbit_classes"]:
            pooled.append((make_candidate(body, cls["vertices"], converged=True), cls["members"]))
    classes = dedup([c for c, _ in pooled], tol, body.diam)
    merged = []
    for cls in classes:
        members = sum(m for c, m in pooled if same_orbit(c, cls.representative, tol, body.diam))
        entry = cls.to_dict()
        entry["members"] = members
        merged.append(entry)
    continuum = sum(doc["continuum"]["count"] for doc in docs)
    d = body.dimension
    return {
        "body": body_desc,
        "d": d,
        "p": p,
        "sources": [str(pth) for pth in paths],
        "seeds": [doc["seed"] for doc in docs],
        "tol_dedup": tol,
        "orbit_classes": merged,
        "continuum": {"count": continuum},
        "certified_count": len(merged),
        "bound": trajectory_bound(d, p),
        "verdict": verdict(d, p, len(merged), continuum),
    }
