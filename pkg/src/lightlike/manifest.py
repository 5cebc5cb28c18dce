"""Manifold manifests: the on-disk description of a light-like structure.

A manifest is a YAML mapping validated against ``schemas/manifest.schema.json``.
Component entries are expression strings (bare numbers are accepted).  Rank-3
sections (``torsion``, ``nonmetricity``, ``connection``) are either dense
``n x n x n`` nested lists or sparse mappings ``"a,b,c": expr`` with omitted
entries zero; index order is ``T^k_{ij}`` -> ``"k,i,j"``, ``Q_{zij}`` ->
``"z,i,j"`` and ``Γ^k_{ij}`` -> ``"k,i,j"``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
import yaml

from .connection import ConnectionField
from .degenerate import DegenerateMetricBundle
from .expr import ExpressionError, ScalarExpression, parse_expression
from .sampling import Tolerances, VerificationConfig, as_box
from .tensor import ExpressionField

PROBE_POINTS = 10
SYMMETRY_TOLERANCE = 1e-12


class ManifestError(ValueError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field {field}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


def _schema() -> dict:
    text = resources.files("lightlike").joinpath("schemas/manifest.schema.json").read_text()
    return json.loads(text)


def catalog_names() -> list[str]:
    folder = resources.files("lightlike").joinpath("catalog")
    return sorted(p.name[: -len(".manifest")] for p in folder.iterdir()
                  if p.name.endswith(".manifest"))


def resolve_manifest(path: str | Path) -> Path:
    """A file path as given, or the name of a shipped catalog manifest."""
    p = Path(path)
    if p.exists():
        return p
    stem = p.name[: -len(".manifest")] if p.name.endswith(".manifest") else p.name
    if p.parent == Path(".") and stem in catalog_names():
        return Path(str(resources.files("lightlike").joinpath(f"catalog/{stem}.manifest")))
    raise ManifestError(f"no such manifest: {path}")


# --------------------------------------------------------------------------
# line lookup for error messages

def _line_of(node: yaml.Node | None, path: list) -> int | None:
    line = None
    for key in path:
        if node is None:
            break
        line = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            node = next((v for k, v in node.value if k.value == str(key)), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            node = None
    if node is not None:
        line = node.start_mark.line + 1
    return line


def _path_str(path) -> str:
    out = ""
    for key in path:
        out += f"[{key}]" if isinstance(key, int) else (f".{key}" if out else str(key))
    return out


# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ManifoldManifest:
    dimension: int
    nullity: int
    index: int
    domain: tuple[tuple[float, float], ...]
    metric: ExpressionField
    radical_frame: tuple[ExpressionField, ...]
    coframe: tuple[ExpressionField, ...]
    torsion: ExpressionField | None = None
    nonmetricity: ExpressionField | None = None
    connection_coefficients: ExpressionField | None = None
    parameters: dict = field(default_factory=dict)
    verification: dict = field(default_factory=dict)
    name: str = ""
    description: str = ""
    digest: str = ""
    source: str = ""

    def bundle(self) -> DegenerateMetricBundle:
        return DegenerateMetricBundle(self.metric, self.nullity, self.radical_frame,
                                      self.coframe, self.domain, self.index)

    def connection(self) -> ConnectionField | None:
        if self.connection_coefficients is None:
            return None
        return ConnectionField.from_field(self.connection_coefficients)

    def config(self, samples: int | None = None, seed: int | None = None,
               tol_analytic: float | None = None, tol_fd: float | None = None
               ) -> VerificationConfig:
        """Verification settings: command-line overrides beat manifest values beat defaults."""
        v = self.verification
        defaults = Tolerances()
        tolerances = Tolerances(
            exact=v.get("tol_exact", defaults.exact),
            analytic=tol_analytic if tol_analytic is not None else v.get("tol_analytic", defaults.analytic),
            finite_difference=tol_fd if tol_fd is not None else v.get("tol_fd", defaults.finite_difference),
        )
        return VerificationConfig(
            sample_count=samples if samples is not None else v.get("samples", 200),
            seed=seed if seed is not None else v.get("seed", 0),
            tolerances=tolerances,
        )


class _Loader:
    def __init__(self, data: dict, root: yaml.Node | None):
        self.data = data
        self.root = root

    def fail(self, message: str, path: list) -> ManifestError:
        return ManifestError(message, _path_str(path), _line_of(self.root, path))

    def expression(self, src, path, n, params) -> ScalarExpression:
        try:
            return parse_expression(str(src), n, params)
        except ExpressionError as exc:
            raise self.fail(str(exc), path) from None

    def matrix(self, key: str, rows: int, n: int, params, signature: str) -> list[ExpressionField]:
        value = self.data[key]
        if len(value) != rows:
            raise self.fail(f"expected {rows} rows, got {len(value)}", [key])
        out = []
        for a, row in enumerate(value):
            if len(row) != n:
                raise self.fail(f"expected {n} entries, got {len(row)}", [key, a])
            out.append([self.expression(src, [key, a, b], n, params) for b, src in enumerate(row)])
        if signature == "ll":
            return [ExpressionField("ll", np.array(out, dtype=object))]
        return [ExpressionField(signature, np.array(row, dtype=object)) for row in out]

    def rank3(self, key: str, n: int, params, signature: str) -> ExpressionField | None:
        value = self.data.get(key)
        if value is None:
            return None
        zero = parse_expression("0", n)
        grid = np.full((n, n, n), zero, dtype=object)
        if isinstance(value, dict):
            for idx_text, src in value.items():
                idx = tuple(int(s) for s in idx_text.split(","))
                if any(i >= n for i in idx):
                    raise self.fail(f"index {idx_text!r} out of range for dimension {n}",
                                    [key, idx_text])
                grid[idx] = self.expression(src, [key, idx_text], n, params)
        else:
            if len(value) != n:
                raise self.fail(f"expected {n} blocks, got {len(value)}", [key])
            for a, block in enumerate(value):
                if len(block) != n:
                    raise self.fail(f"expected {n} rows, got {len(block)}", [key, a])
                for b, row in enumerate(block):
                    if len(row) != n:
                        raise self.fail(f"expected {n} entries, got {len(row)}", [key, a, b])
                    for c, src in enumerate(row):
                        grid[a, b, c] = self.expression(src, [key, a, b, c], n, params)
        return ExpressionField(signature, grid)


def _check_pairs(name: str, grid: np.ndarray, pairs, sign: float, probes: np.ndarray,
                 label) -> None:
    bad = []
    for first, second in pairs:
        e1, e2 = grid[first], grid[second]
        if sign == 1.0 and e1.ast == e2.ast:
            continue
        for p in probes:
            try:
                a, b = e1.evaluate(p), e2.evaluate(p)
            except ExpressionError as exc:
                raise ManifestError(f"cannot evaluate at probe point {p.tolist()}: {exc}",
                                    name) from None
            if abs(a - sign * b) > SYMMETRY_TOLERANCE * (1.0 + abs(a)):
                bad.append(f"{label(first)}={a:.6g} vs {label(second)}={b:.6g} "
                           f"at {np.round(p, 6).tolist()}")
                break
    if bad:
        kind = "antisymmetry" if sign < 0 else "symmetry"
        raise ManifestError(f"{kind} violated: " + "; ".join(bad), name)


def load_manifest(path: str | Path) -> ManifoldManifest:
    """Read, validate and parse a manifest file (or a catalog name)."""
    path = resolve_manifest(path)
    raw = path.read_bytes()
    text = raw.decode("utf-8")
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ManifestError(f"YAML syntax error: {exc.problem}",
                            line=mark.line + 1 if mark else None) from None
    except yaml.YAMLError as exc:
        raise ManifestError(f"YAML syntax error: {exc}") from None
    if not isinstance(data, dict):
        raise ManifestError("manifest must be a mapping")

    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        p = list(err.absolute_path)
        raise ManifestError(err.message, _path_str(p) or "<root>", _line_of(root, p))

    loader = _Loader(data, root)
    n = data["dimension"]
    r = data["nullity"]
    params = {k: float(v) for k, v in (data.get("parameters") or {}).items()}
    if r > n:
        raise loader.fail(f"nullity {r} exceeds dimension {n}", ["nullity"])
    if len(data["domain"]) != n:
        raise loader.fail(f"expected {n} intervals, got {len(data['domain'])}", ["domain"])
    try:
        domain = as_box(data["domain"])
    except ValueError as exc:
        raise loader.fail(str(exc), ["domain"]) from None

    metric = loader.matrix("metric", n, n, params, "ll")[0]
    frame = loader.matrix("radical_frame", r, n, params, "u")
    coframe = loader.matrix("coframe", r, n, params, "l")
    torsion = loader.rank3("torsion", n, params, "ull")
    nonmetricity = loader.rank3("nonmetricity", n, params, "lll")
    connection = loader.rank3("connection", n, params, "ull")

    lo = np.array([a for a, _ in domain])
    hi = np.array([b for _, b in domain])
    probes = lo + (hi - lo) * np.random.default_rng(0).random((PROBE_POINTS, n))
    pairs2 = [((i, j), (j, i)) for i in range(n) for j in range(i + 1, n)]
    pairs3 = [((k, i, j), (k, j, i)) for k in range(n) for i in range(n) for j in range(i, n)]
    _check_pairs("metric", metric.grid, pairs2, 1.0, probes,
                 lambda ij: f"g{ij[0]}{ij[1]}")
    if torsion is not None:
        _check_pairs("torsion", torsion.grid, pairs3, -1.0, probes,
                     lambda kij: f"T^{kij[0]}_{kij[1]}{kij[2]}")
    if nonmetricity is not None:
        _check_pairs("nonmetricity", nonmetricity.grid, pairs3, 1.0, probes,
                     lambda zij: f"Q_{zij[0]}{zij[1]}{zij[2]}")

    return ManifoldManifest(
        dimension=n,
        nullity=r,
        index=data.get("index", 0),
        domain=domain,
        metric=metric,
        radical_frame=tuple(frame),
        coframe=tuple(coframe),
        torsion=torsion,
        nonmetricity=nonmetricity,
        connection_coefficients=connection,
        parameters=params,
        verification=dict(data.get("verification") or {}),
        name=data.get("name", path.stem),
        description=data.get("description", ""),
        digest=hashlib.sha256(raw).hexdigest(),
        source=str(path),
    )


def manifest_summary(m: ManifoldManifest) -> dict[str, Any]:
    return {"name": m.name, "digest": m.digest, "dimension": m.dimension,
            "nullity": m.nullity, "index": m.index}
