"""Command-line entry point.

Exit codes: 0 every condition passed, 1 a geometric condition failed (the
report is still printed), 2 input or usage error, 3 internal consistency
fault (a construction failed its own round trip).
"""
from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from typing import Sequence

import numpy as np

from .connection import ConstructionError, koszul_connection
from .degenerate import AugmentedMetric, DegeneracyError, check_nondegenerate, validate_bundle
from .expr import ExpressionError
from .manifest import ManifestError, ManifoldManifest, catalog_names, load_manifest
from .sampling import VerificationConfig
from .tensor import TensorError
from .verify import PipelineReport, run_proposition1, run_theorem_ii

REPORT_SCHEMA = "lightlike.report/1"
DEFAULT_GRID = 5

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_FAULT = 0, 1, 2, 3


def _clean(obj):
    """Make a report JSON-safe and canonical (non-finite floats become strings)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def render_machine(doc: dict) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _header(command: str, m: ManifoldManifest, cfg: VerificationConfig) -> dict:
    t = cfg.tolerances
    return {
        "schema": REPORT_SCHEMA,
        "command": command,
        "manifest": {"name": m.name, "digest": m.digest, "dimension": m.dimension,
                     "nullity": m.nullity, "index": m.index},
        "seed": cfg.seed,
        "sample_count": cfg.sample_count,
        "tolerances": {"exact": t.exact, "analytic": t.analytic,
                       "finite_difference": t.finite_difference},
    }


def _pipeline_doc(command: str, m: ManifoldManifest, cfg: VerificationConfig,
                  report: PipelineReport, per_sample: bool = True) -> dict:
    doc = _header(command, m, cfg)
    doc.update(report.to_dict(per_sample))
    return doc


def render_text(doc: dict) -> str:
    lines = [f"{doc['command']}: {doc['manifest']['name']} "
             f"(n={doc['manifest']['dimension']}, r={doc['manifest']['nullity']}, "
             f"seed={doc['seed']}, samples={doc['sample_count']})"]
    for c in doc.get("conditions", []):
        flag = "PASS" if c["passed"] else "FAIL"
        lines.append(f"  [{flag}] {c['condition']:<28} max={c['max_residual']:.3e} "
                     f"tol={c['tolerance']:.0e}  {c['description']}")
    diag = doc.get("diagnostics") or {}
    for c in diag.get("reports", []):
        lines.append(f"  (diagnostic) {c['condition']:<22} max={c['max_residual']:.3e}")
    if "kappa" in diag:
        lines.append(f"  (diagnostic) kappa = {diag['kappa']}")
    for entry in doc.get("points", []):
        lines.append(f"  point {entry['point']}:")
        gamma = np.asarray(entry["christoffel"])
        nonzero = [(k, i, j) for k, i, j in np.ndindex(gamma.shape) if gamma[k, i, j] != 0.0]
        if not nonzero:
            lines.append("    all Gamma^k_ij = 0")
        for k, i, j in nonzero:
            lines.append(f"    Gamma^{k}_{i}{j} = {gamma[k, i, j]:.12g}")
    if doc.get("message"):
        lines.append(f"  {doc['message']}")
    lines.append(f"status: {doc['status']} (exit {doc['exit_code']})")
    return "\n".join(lines) + "\n"


def _parse_point(text: str, n: int) -> list[float]:
    try:
        coords = [float(c) for c in text.split(",")]
    except ValueError:
        raise ManifestError(f"--point expects comma-separated numbers, got {text!r}") from None
    if len(coords) != n:
        raise ManifestError(f"--point needs {n} coordinates, got {len(coords)}")
    return coords


def _grid(domain, k: int) -> list[list[float]]:
    axes = [np.linspace(lo, hi, k) if k > 1 else np.array([(lo + hi) / 2]) for lo, hi in domain]
    return [list(map(float, p)) for p in itertools.product(*axes)]


# --------------------------------------------------------------------------
# commands

def cmd_validate(m: ManifoldManifest, cfg: VerificationConfig, args) -> dict:
    reports = validate_bundle(m.bundle(), cfg)
    ok = all(r.passed for r in reports)
    failed = next((r for r in reports if not r.passed), None)
    doc = _header("validate", m, cfg)
    doc.update({
        "status": "passed" if ok else "hypothesis_failed",
        "exit_code": EXIT_OK if ok else EXIT_FAILED,
        "failed_condition": failed.condition if failed else None,
        "message": "" if ok else f"{failed.condition} failed",
        "conditions": [r.to_dict() for r in reports],
        "diagnostics": {},
    })
    return doc


def cmd_build(m: ManifoldManifest, cfg: VerificationConfig, args) -> dict:
    n = m.dimension
    if args.point:
        points = [_parse_point(p, n) for p in args.point]
    else:
        points = _grid(m.domain, args.grid)
    gbar = AugmentedMetric(m.bundle())
    doc = _header("build", m, cfg)
    nondeg = check_nondegenerate(gbar, np.array(points))
    doc.update({"conditions": [nondeg.to_dict()], "diagnostics": {}, "message": "",
                "failed_condition": None})
    if not nondeg.passed:
        doc.update({"status": "hypothesis_failed", "exit_code": EXIT_FAILED,
                    "failed_condition": nondeg.condition,
                    "message": f"augmented metric degenerate near {list(nondeg.worst_point)}",
                    "points": []})
        return doc
    conn = koszul_connection(gbar, m.torsion, m.nonmetricity, check_points=points,
                             tol=cfg.tolerances.tier(gbar.exact_partials))
    doc.update({
        "status": "passed",
        "exit_code": EXIT_OK,
        "provenance": conn.provenance,
        "points": [{"point": p, "christoffel": conn(p).tolist()} for p in points],
    })
    return doc


def cmd_verify(m: ManifoldManifest, cfg: VerificationConfig, args) -> dict:
    report = run_theorem_ii(m.bundle(), m.torsion, m.nonmetricity, cfg)
    return _pipeline_doc("verify", m, cfg, report)


def cmd_prop1(m: ManifoldManifest, cfg: VerificationConfig, args) -> dict:
    bundle = m.bundle()
    if args.direction == "forward":
        report = run_proposition1(bundle, "forward", cfg)
        return _pipeline_doc("prop1", m, cfg, report)
    conn = m.connection()
    source = "manifest"
    if conn is None:
        # round trip: examine the connection a forward run constructs
        forward = run_proposition1(bundle, "forward", cfg)
        if forward.connection is None:
            doc = _pipeline_doc("prop1", m, cfg, forward)
            doc["connection_source"] = "forward-run"
            return doc
        conn = forward.connection
        source = "forward-run"
    report = run_proposition1(bundle, "reverse", cfg, connection=conn)
    doc = _pipeline_doc("prop1", m, cfg, report)
    doc["connection_source"] = source
    return doc


COMMANDS = {"validate": cmd_validate, "build": cmd_build, "verify": cmd_verify,
            "prop1": cmd_prop1}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("manifest", help="manifest file, or the name of a catalog manifest")
    common.add_argument("--samples", type=int, help="number of sample points (default 200)")
    common.add_argument("--seed", type=int, help="sampling seed (default 0)")
    common.add_argument("--tol-analytic", type=float, help="tolerance for symbolic partials")
    common.add_argument("--tol-fd", type=float, help="tolerance for finite-difference partials")
    common.add_argument("--format", choices=("text", "machine"), default="text")

    parser = argparse.ArgumentParser(
        prog="lightlike",
        description="Construct and verify linear connections on light-like manifolds.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check the bundle invariants")
    b = sub.add_parser("build", parents=[common], help="dump connection coefficients")
    b.add_argument("--point", action="append", help="chart point c0,c1,...; repeatable")
    b.add_argument("--grid", type=int, default=DEFAULT_GRID,
                   help="points per axis when no --point is given (default 5)")
    sub.add_parser("verify", parents=[common], help="full construction and verification pipeline")
    p = sub.add_parser("prop1", parents=[common],
                       help="torsion-free, g-compatible case with parallel coframe")
    p.add_argument("--direction", choices=("forward", "reverse"), default="forward")
    sub.add_parser("catalog", help="list the shipped manifests").add_argument(
        "manifest", nargs="?", help=argparse.SUPPRESS)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "catalog":
        print("\n".join(catalog_names()))
        return EXIT_OK
    try:
        m = load_manifest(args.manifest)
        cfg = m.config(args.samples, args.seed, args.tol_analytic, args.tol_fd)
        doc = COMMANDS[args.command](m, cfg, args)
    except ConstructionError as exc:
        print(f"internal consistency fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except (ManifestError, ExpressionError, TensorError, DegeneracyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.format == "machine":
        sys.stdout.write(render_machine(doc))
    else:
        sys.stdout.write(render_text(doc))
    return doc["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
