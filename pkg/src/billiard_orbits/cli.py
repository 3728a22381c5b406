"""Command line entry point.

    billiard-orbits search CONFIG [--report PATH] [--export PATH]
    billiard-orbits cohomology D P
    billiard-orbits verify EXPORT
    billiard-orbits report merge OUT REPORT [REPORT ...]

Exit codes: 0 on PASS or INAPPLICABLE, 1 on FAIL, 2 on configuration or
parameter errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import harness
from .errors import ConfigError, InvalidParams
from .config import load_config

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _exit_for(verdict: str) -> int:
    return EXIT_FAIL if verdict == harness.FAIL else EXIT_OK


def cmd_search(args) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    overrides = {}
    if args.report:
        overrides["report_path"] = args.report
    if args.export:
        overrides["export_path"] = args.export
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    report = harness.run_search(cfg)
    print(
        f"d={report.d} p={report.p} certified={report.certified_count} "
        f"continuum={len(report.continuum)} bound={report.bound} verdict={report.verdict} "
        f"({report.wall_clock:.1f}s)"
    )
    for k, cls in enumerate(report.classes):
        print(f"  [{k}] perimeter={cls.perimeter:.10f} members={cls.members} "
              f"kkt={cls.representative.kkt_residual:.2e}")
    return _exit_for(report.verdict)


def cmd_cohomology(args) -> int:
    try:
        frag = harness.run_cohomology(args.d, args.p)
    except InvalidParams as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(frag, indent=2, sort_keys=True))
    return EXIT_OK if all(frag["checks"].values()) else EXIT_FAIL


def cmd_verify(args) -> int:
    try:
        results = harness.verify_export(args.export, args.tol)
    except (OSError, ValueError, KeyError) as exc:
        print(f"cannot read export: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for r in results:
        status = "ok" if r["ok"] else "FAIL"
        print(f"class {r['class']}: perimeter={r['perimeter']:.10f} closure={r['closure_residual']:.3e} {status}")
    return EXIT_OK if all(r["ok"] for r in results) else EXIT_FAIL


def cmd_merge(args) -> int:
    try:
        merged = harness.merge_reports(args.reports)
    except (OSError, ValueError, KeyError) as exc:
        print(f"cannot merge: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    Path(args.out).write_text(json.dumps(merged, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"merged {len(args.reports)} reports: certified={merged['certified_count']} "
          f"bound={merged['bound']} verdict={merged['verdict']}")
    return _exit_for(merged["verdict"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="billiard-orbits",
        description="Find periodic billiard trajectories and check the lower bound on their number.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run a multistart search from a config file")
    p.add_argument("config")
    p.add_argument("--report", help="override report_path")
    p.add_argument("--export", help="override export_path")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("cohomology", help="Betti tables and index arithmetic")
    p.add_argument("d", type=int)
    p.add_argument("p", type=int)
    p.set_defaults(func=cmd_cohomology)

    p = sub.add_parser("verify", help="re-shoot exported trajectories")
    p.add_argument("export")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="report utilities")
    rsub = p.add_subparsers(dest="report_command", required=True)
    m = rsub.add_parser("merge", help="merge reports of the same body and length")
    m.add_argument("out")
    m.add_argument("reports", nargs="+")
    m.set_defaults(func=cmd_merge)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
