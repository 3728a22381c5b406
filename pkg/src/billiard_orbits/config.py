"""Experiment configuration: a flat ``key = value`` file under one ``[experiment]`` section.

Example::

    [experiment]
    kind = bumped-ellipsoid
    semi_axes = 1, 1.25, 1.6
    bump_amplitude = 0.05
    bump_coeffs = 1, -1, 0.5
    p = 3
    n_starts = 10000
    rng_seed = 42
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields

from .errors import BilliardError, ConfigError
from .geometry import BodyModel
from .varsolve import SolverConfig

__all__ = ["ExperimentConfig", "parse_config", "load_config", "serialize_config"]

SECTION = "experiment"
KINDS = ("ellipsoid", "bumped-ellipsoid", "sphere")

_SOLVER_FIELDS = {f.name: f for f in fields(SolverConfig)}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    semi_axes: tuple[float, ...]
    p: int
    bump_amplitude: float = 0.0
    bump_coeffs: tuple[float, ...] | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    tol_dedup: float = 1e-6
    report_path: str = ""
    export_path: str = ""

    @property
    def dimension(self) -> int:
        return len(self.semi_axes)

    def body(self) -> BodyModel:
        return BodyModel(self.semi_axes, self.bump_amplitude, self.bump_coeffs)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "semi_axes": list(self.semi_axes),
            "bump_amplitude": self.bump_amplitude,
            "bump_coeffs": list(self.bump_coeffs) if self.bump_coeffs is not None else None,
            "p": self.p,
            "tol_dedup": self.tol_dedup,
            "report_path": self.report_path,
            "export_path": self.export_path,
        }
        out.update({name: getattr(self.solver, name) for name in _SOLVER_FIELDS})
        return out


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf"^\s*{re.escape(key)}\s*[=:]", re.IGNORECASE)
    for k, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return k
    return None


def _floats(raw: str) -> tuple[float, ...]:
    parts = [s for s in re.split(r"[,\s]+", raw.strip()) if s]
    return tuple(float(s) for s in parts)


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse and validate a configuration; errors name the file, line and field."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if not cp.has_section(SECTION):
        raise ConfigError(f"{source}: missing [{SECTION}] section")
    sec = dict(cp.items(SECTION))

    def fail(key, msg):
        line = _line_of(text, key)
        where = f"{source}:{line}" if line else source
        raise ConfigError(f"{where}: field '{key}': {msg}")

    def get(key, conv, default=None, required=False):
        if key not in sec:
            if required:
                fail(key, "required field is missing")
            return default
        try:
            return conv(sec.pop(key))
        except ValueError as exc:
            fail(key, str(exc))

    kind = get("kind", str, "ellipsoid")
    if kind not in KINDS:
        fail("kind", f"must be one of {', '.join(KINDS)}, got {kind!r}")
    if kind == "sphere":
        d = get("dimension", int, required=True)
        radius = get("radius", float, 1.0)
        semi_axes = (radius,) * d
    else:
        semi_axes = get("semi_axes", _floats, required=True)
    bump = get("bump_amplitude", float, 0.0)
    coeffs = get("bump_coeffs", _floats, None)
    if kind == "bumped-ellipsoid" and (coeffs is None or bump == 0.0):
        fail("bump_amplitude", "bumped-ellipsoid needs a positive bump_amplitude and bump_coeffs")
    if kind != "bumped-ellipsoid" and bump != 0.0:
        fail("bump_amplitude", f"kind {kind!r} takes no bump")
    p = get("p", int, required=True)
    if p < 2:
        fail("p", f"must be >= 2, got {p}")

    solver_kwargs = {}
    for name, f in _SOLVER_FIELDS.items():
        if name in sec:
            conv = int if f.type in ("int", int) else float
            solver_kwargs[name] = get(name, conv)
    try:
        solver = SolverConfig(**solver_kwargs)
    except ValueError as exc:
        bad = next((k for k in solver_kwargs if k in str(exc)), None)
        fail(bad or "solver", str(exc))
    tol_dedup = get("tol_dedup", float, 1e-6)
    if not tol_dedup > 0:
        fail("tol_dedup", "must be positive")
    report_path = get("report_path", str, "")
    export_path = get("export_path", str, "")
    if sec:
        key = sorted(sec)[0]
        fail(key, "unknown field")

    cfg = ExperimentConfig(
        kind=kind,
        semi_axes=semi_axes,
        p=p,
        bump_amplitude=bump,
        bump_coeffs=coeffs,
        solver=solver,
        tol_dedup=tol_dedup,
        report_path=report_path,
        export_path=export_path,
    )
    try:
        cfg.body()
    except BilliardError as exc:
        fail("semi_axes", f"invalid body: {exc}")
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


def _fmt(value) -> str:
    if isinstance(value, (list, tuple)):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = [f"[{SECTION}]", f"kind = {cfg.kind}"]
    if cfg.kind == "sphere":
        lines += [f"dimension = {cfg.dimension}", f"radius = {_fmt(cfg.semi_axes[0])}"]
    else:
        lines.append(f"semi_axes = {_fmt(cfg.semi_axes)}")
    if cfg.kind == "bumped-ellipsoid":
        lines.append(f"bump_amplitude = {_fmt(cfg.bump_amplitude)}")
        lines.append(f"bump_coeffs = {_fmt(cfg.bump_coeffs)}")
    lines.append(f"p = {cfg.p}")
    for name in _SOLVER_FIELDS:
        lines.append(f"{name} = {_fmt(getattr(cfg.solver, name))}")
    lines.append(f"tol_dedup = {_fmt(cfg.tol_dedup)}")
    if cfg.report_path:
        lines.append(f"report_path = {cfg.report_path}")
    if cfg.export_path:
        lines.append(f"export_path = {cfg.export_path}")
    return "\n".join(lines) + "\n"
