"""Named, sampled checks of the compatibility conditions and the construction pipelines.

Every check returns a :class:`~lightlike.sampling.ConditionReport` whose
per-sample residual is the max-norm over components (and over ``i`` for
conditions indexed by the radical frame).  Tolerances come from the
configuration: the analytic tier when every field involved has symbolic
partials, the finite-difference tier otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .connection import (ConnectionField, covariant_derivative, koszul_connection,
                         koszul_pointwise_solve, levi_civita_connection, nonmetricity_of, torsion_of)
from .degenerate import (AugmentedMetric, DegeneracyError, DegenerateMetricBundle,
                         check_nondegenerate, validate_bundle)
from .sampling import ConditionReport, VerificationConfig
from .tensor import (TensorField, exterior_derivative_1form, lie_derivative_metric)

UNIQUENESS_TOLERANCE = 1e-9

PASSED = "passed"
HYPOTHESIS_FAILED = "hypothesis_failed"
CONCLUSION_FAILED = "conclusion_failed"
FAULT = "fault"

EXIT_CODES = {PASSED: 0, HYPOTHESIS_FAILED: 1, CONCLUSION_FAILED: 1, FAULT: 3}


def _exact(*fields) -> bool:
    return all(f is None or f.exact_partials for f in fields)


def _tol(cfg: VerificationConfig, *fields) -> float:
    return cfg.tolerances.tier(_exact(*fields))


def _zeros3(n: int) -> np.ndarray:
    return np.zeros((n, n, n))


def _value(f: TensorField | None, p, n: int) -> np.ndarray:
    return _zeros3(n) if f is None else f.components(p)


def _points(b: DegenerateMetricBundle, cfg: VerificationConfig) -> np.ndarray:
    return cfg.points(b.domain)


# --------------------------------------------------------------------------
# hypotheses

def check_coframe_torsion(b: DegenerateMetricBundle, torsion: TensorField | None,
                          cfg: VerificationConfig | None = None) -> ConditionReport:
    """(dτ_i)(X, Y) = τ_i(T(X, Y)) on coordinate basis pairs."""
    cfg = cfg or VerificationConfig()
    pts = _points(b, cfg)
    n = b.dim
    res = []
    for p in pts:
        t = _value(torsion, p, n)
        worst = 0.0
        for tau in b.coframe:
            d = exterior_derivative_1form(tau, p).components
            worst = max(worst, float(np.max(np.abs(d - np.einsum("k,kab->ab", tau.components(p), t)))))
        res.append(worst)
    return ConditionReport.from_residuals(
        "coframe_torsion", res, pts, _tol(cfg, *b.coframe, torsion),
        "max |dτ_i(e_a, e_b) - τ_i(T(e_a, e_b))|")


def radical_lie_balance_terms(b: DegenerateMetricBundle, xi: TensorField,
                              torsion: TensorField | None, nonmetricity: TensorField | None,
                              p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the Lie-derivative balance for one radical vector at ``p``.

    Left: (L_ξ g)(X, Y).  Right: g(X, T(ξ, Y)) + g(Y, T(ξ, X)) + Q(ξ, X, Y)
    - Q(X, Y, ξ) - Q(Y, X, ξ).
    """
    n = b.dim
    g = b.metric.components(p)
    x = xi.components(p)
    t = _value(torsion, p, n)
    q = _value(nonmetricity, p, n)
    t_xi = np.einsum("kmb,m->kb", t, x)          # T(ξ, e_b)^k
    g_t = g @ t_xi                                # g(e_a, T(ξ, e_b))
    q_first = np.einsum("m,mab->ab", x, q)        # Q(ξ, e_a, e_b)
    q_last = np.einsum("abm,m->ab", q, x)         # Q(e_a, e_b, ξ)
    rhs = g_t + g_t.T + q_first - q_last - q_last.T
    return lie_derivative_metric(xi, b.metric, p).components, rhs


def check_radical_lie_balance(b: DegenerateMetricBundle, torsion: TensorField | None,
                              nonmetricity: TensorField | None,
                              cfg: VerificationConfig | None = None) -> ConditionReport:
    """L_{ξ_i} g balanced by the torsion and non-metricity terms, for every ξ_i."""
    cfg = cfg or VerificationConfig()
    pts = _points(b, cfg)
    res = []
    for p in pts:
        worst = 0.0
        for xi in b.radical_frame:
            lhs, rhs = radical_lie_balance_terms(b, xi, torsion, nonmetricity, p)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        res.append(worst)
    return ConditionReport.from_residuals(
        "radical_lie_balance", res, pts,
        _tol(cfg, b.metric, *b.radical_frame, torsion, nonmetricity),
        "max |L_ξi g - [g(X,T(ξi,Y)) + g(Y,T(ξi,X)) + Q(ξi,X,Y) - Q(X,Y,ξi) - Q(Y,X,ξi)]|")


def check_killing(b: DegenerateMetricBundle,
                  cfg: VerificationConfig | None = None) -> ConditionReport:
    """L_{ξ_i} g = 0 for the given radical frame (not for every section of the radical)."""
    cfg = cfg or VerificationConfig()
    pts = _points(b, cfg)
    res = [max(float(np.max(np.abs(lie_derivative_metric(xi, b.metric, p).components)))
               for xi in b.radical_frame) for p in pts]
    return ConditionReport.from_residuals(
        "killing", res, pts, _tol(cfg, b.metric, *b.radical_frame), "max |L_ξi g|")


def check_closed_coframe(b: DegenerateMetricBundle,
                         cfg: VerificationConfig | None = None) -> ConditionReport:
    cfg = cfg or VerificationConfig()
    pts = _points(b, cfg)
    res = [max(float(np.max(np.abs(exterior_derivative_1form(tau, p).components)))
               for tau in b.coframe) for p in pts]
    return ConditionReport.from_residuals(
        "closed_coframe", res, pts, _tol(cfg, *b.coframe), "max |dτ_i|")


# --------------------------------------------------------------------------
# conclusions

def check_parallel_coframe(conn: ConnectionField, b: DegenerateMetricBundle,
                           cfg: VerificationConfig | None = None) -> ConditionReport:
    cfg = cfg or VerificationConfig()
    pts = _points(b, cfg)
    res = [max(float(np.max(np.abs(covariant_derivative(conn, tau, p).components)))
               for tau in b.coframe) for p in pts]
    return ConditionReport.from_residuals(
        "parallel_coframe", res, pts, _tol(cfg, conn, *b.coframe), "max |∇τ_i|")


def check_nonmetricity_condition(conn: ConnectionField, b: DegenerateMetricBundle,
                                 nonmetricity: TensorField | None,
                                 cfg: VerificationConfig | None = None) -> ConditionReport:
    """(∇_Z g)(X, Y) = Q(Z, X, Y); with ``nonmetricity=None`` this is ∇g = 0."""
    cfg = cfg or VerificationConfig()
    pts = _points(b, cfg)
    n = b.dim
    res = [float(np.max(np.abs(nonmetricity_of(conn, b.metric, p).components
                               - _value(nonmetricity, p, n)))) for p in pts]
    return ConditionReport.from_residuals(
        "nonmetricity_g", res, pts, _tol(cfg, conn, b.metric, nonmetricity),
        "max |∇g - Q|")


def check_parallel_radical(conn: ConnectionField, b: DegenerateMetricBundle,
                           cfg: VerificationConfig | None = None) -> ConditionReport:
    cfg = cfg or VerificationConfig()
    pts = _points(b, cfg)
    res = [max(float(np.max(np.abs(covariant_derivative(conn, xi, p).components)))
               for xi in b.radical_frame) for p in pts]
    return ConditionReport.from_residuals(
        "parallel_radical", res, pts, _tol(cfg, conn, *b.radical_frame), "max |∇ξ_i|")


def check_augmented_killing(b: DegenerateMetricBundle, gbar: TensorField,
                            cfg: VerificationConfig | None = None) -> ConditionReport:
    cfg = cfg or VerificationConfig()
    pts = _points(b, cfg)
    res = [max(float(np.max(np.abs(lie_derivative_metric(xi, gbar, p).components)))
               for xi in b.radical_frame) for p in pts]
    return ConditionReport.from_residuals(
        "augmented_killing", res, pts, _tol(cfg, gbar, *b.radical_frame), "max |L_ξi ḡ|")


def check_torsion(conn: ConnectionField, torsion: TensorField | None, points: np.ndarray,
                  tol: float, condition: str = "torsion") -> ConditionReport:
    n = conn.dim
    res = [float(np.max(np.abs(torsion_of(conn, p).components - _value(torsion, p, n))))
           for p in points]
    return ConditionReport.from_residuals(condition, res, points, tol, "max |T(∇) - T|")


def check_metric_nonmetricity(conn: ConnectionField, metric: TensorField,
                              nonmetricity: TensorField | None, points: np.ndarray, tol: float,
                              condition: str) -> ConditionReport:
    n = conn.dim
    res = [float(np.max(np.abs(nonmetricity_of(conn, metric, p).components
                               - _value(nonmetricity, p, n)))) for p in points]
    return ConditionReport.from_residuals(condition, res, points, tol, "max |∇m - Q|")


def check_uniqueness(gbar: TensorField, torsion: TensorField | None,
                     nonmetricity: TensorField | None, conn: ConnectionField,
                     points: np.ndarray, tol: float = UNIQUENESS_TOLERANCE,
                     condition: str = "uniqueness") -> ConditionReport:
    """Agreement of ``conn`` with the direct solve of the defining equations."""
    n = gbar.dim
    res = []
    for p in points:
        direct = koszul_pointwise_solve(gbar.components(p), gbar.gradient(p),
                                        _value(torsion, p, n), _value(nonmetricity, p, n))
        res.append(float(np.max(np.abs(conn(p) - direct))))
    return ConditionReport.from_residuals(
        condition, res, points, tol, "max |Γ(closed form) - Γ(linear solve)|")


# --------------------------------------------------------------------------
# pipelines

@dataclass
class PipelineReport:
    pipeline: str
    status: str = PASSED
    reports: list[ConditionReport] = field(default_factory=list)
    failed_condition: str | None = None
    message: str = ""
    diagnostics: dict = field(default_factory=dict)
    connection: ConnectionField | None = None
    augmented_metric: TensorField | None = None

    @property
    def passed(self) -> bool:
        return self.status == PASSED

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def report(self, condition: str) -> ConditionReport:
        for r in self.reports:
            if r.condition == condition:
                return r
        for r in self.diagnostics.get("reports", []):
            if r.condition == condition:
                return r
        raise KeyError(condition)

    def _add(self, report: ConditionReport, on_fail: str) -> bool:
        """Record ``report``; on failure set ``on_fail`` status and return False."""
        self.reports.append(report)
        if not report.passed and self.status == PASSED:
            self.status = on_fail
            self.failed_condition = report.condition
            self.message = (f"{report.condition} failed: max residual {report.max_residual:.3e} "
                            f"> {report.tolerance:.0e} at {list(report.worst_point)}")
        return report.passed

    def to_dict(self, per_sample: bool = True) -> dict:
        diag = {k: v for k, v in self.diagnostics.items() if k != "reports"}
        if "reports" in self.diagnostics:
            diag["reports"] = [r.to_dict(per_sample) for r in self.diagnostics["reports"]]
        return {
            "pipeline": self.pipeline,
            "status": self.status,
            "exit_code": self.exit_code,
            "failed_condition": self.failed_condition,
            "message": self.message,
            "conditions": [r.to_dict(per_sample) for r in self.reports],
            "diagnostics": diag,
        }


def _validate_into(out: PipelineReport, b: DegenerateMetricBundle,
                   cfg: VerificationConfig) -> bool:
    for rep in validate_bundle(b, cfg):
        if not out._add(rep, HYPOTHESIS_FAILED):
            return False
    return True


def _augment_into(out: PipelineReport, b: DegenerateMetricBundle,
                  cfg: VerificationConfig) -> AugmentedMetric | None:
    gbar = AugmentedMetric(b)
    if not out._add(check_nondegenerate(gbar, _points(b, cfg)), HYPOTHESIS_FAILED):
        return None
    out.augmented_metric = gbar
    return gbar


def contrapositive_probe(b: DegenerateMetricBundle, balance: ConditionReport,
                         cfg: VerificationConfig) -> dict:
    """Parallel-coframe residual of the Levi-Civita connection of ḡ after a failed balance.

    Reports κ = (balance residual) / (parallel-coframe residual); no bound is asserted.
    """
    gbar = AugmentedMetric(b)
    try:
        rep = check_parallel_coframe(levi_civita_connection(gbar), b, cfg)
    except DegeneracyError as exc:
        return {"contrapositive_error": str(exc)}
    rep = ConditionReport(**{**rep.__dict__, "condition": "levi_civita.parallel_coframe"})
    kappa = balance.max_residual / rep.max_residual if rep.max_residual > 0 else float("inf")
    return {"reports": [rep], "kappa": kappa}


def run_theorem_ii(b: DegenerateMetricBundle, torsion: TensorField | None = None,
                   nonmetricity: TensorField | None = None,
                   cfg: VerificationConfig | None = None) -> PipelineReport:
    """Check the hypotheses, build the connection on ḡ and certify its conclusions.

    Order: bundle invariants, coframe-torsion relation, radical Lie balance,
    nondegeneracy of ḡ, construction with its round trip, parallel coframe,
    non-metricity relative to g, and the cross-check against the direct solve.
    Stops at the first failure.
    """
    cfg = cfg or VerificationConfig()
    out = PipelineReport("theorem")
    pts = _points(b, cfg)
    if not _validate_into(out, b, cfg):
        return out
    if not out._add(check_coframe_torsion(b, torsion, cfg), HYPOTHESIS_FAILED):
        return out
    balance = check_radical_lie_balance(b, torsion, nonmetricity, cfg)
    if not out._add(balance, HYPOTHESIS_FAILED):
        if torsion is None and nonmetricity is None:
            out.diagnostics.update(contrapositive_probe(b, balance, cfg))
        return out
    gbar = _augment_into(out, b, cfg)
    if gbar is None:
        return out

    conn = koszul_connection(gbar, torsion, nonmetricity)
    out.connection = conn
    tol = _tol(cfg, gbar, torsion, nonmetricity)
    if not out._add(check_torsion(conn, torsion, pts, tol, "construction.torsion"), FAULT):
        return out
    if not out._add(check_metric_nonmetricity(conn, gbar, nonmetricity, pts, tol,
                                              "construction.nonmetricity"), FAULT):
        return out
    out._add(check_parallel_coframe(conn, b, cfg), CONCLUSION_FAILED)
    out._add(check_nonmetricity_condition(conn, b, nonmetricity, cfg), CONCLUSION_FAILED)
    out._add(check_uniqueness(gbar, torsion, nonmetricity, conn, pts), FAULT)
    return out


def run_proposition1(b: DegenerateMetricBundle, direction: str = "forward",
                     cfg: VerificationConfig | None = None,
                     connection: ConnectionField | None = None) -> PipelineReport:
    """Torsion-free, metric-compatible case with parallel coframe, in either direction.

    ``forward``: closed coframe and Killing frame imply that the Levi-Civita
    connection of ḡ has ∇g = 0, ∇τ = 0, ∇ξ = 0, and that L_ξ ḡ = 0.
    ``reverse``: a torsion-free ``connection`` with ∇g = 0 and ∇τ = 0 forces
    dτ = 0, L_ξ g = 0, and coincides with the Levi-Civita connection of ḡ.
    Torsion-freeness of the given connection is held to the exact tier.
    """
    cfg = cfg or VerificationConfig()
    if direction not in ("forward", "reverse"):
        raise ValueError(f"direction must be 'forward' or 'reverse', got {direction!r}")
    out = PipelineReport(f"proposition1-{direction}")
    pts = _points(b, cfg)
    if not _validate_into(out, b, cfg):
        return out

    if direction == "forward":
        if not out._add(check_closed_coframe(b, cfg), HYPOTHESIS_FAILED):
            return out
        if not out._add(check_killing(b, cfg), HYPOTHESIS_FAILED):
            return out
        gbar = _augment_into(out, b, cfg)
        if gbar is None:
            return out
        conn = levi_civita_connection(gbar)
        out.connection = conn
        out._add(check_torsion(conn, None, pts, cfg.tolerances.exact, "torsion_free"),
                 CONCLUSION_FAILED)
        out._add(check_nonmetricity_condition(conn, b, None, cfg), CONCLUSION_FAILED)
        out._add(check_parallel_coframe(conn, b, cfg), CONCLUSION_FAILED)
        out._add(check_parallel_radical(conn, b, cfg), CONCLUSION_FAILED)
        out._add(check_augmented_killing(b, gbar, cfg), CONCLUSION_FAILED)
        return out

    if connection is None:
        raise ValueError("the reverse direction needs a connection to examine")
    out.connection = connection
    if not out._add(check_torsion(connection, None, pts, cfg.tolerances.exact, "torsion_free"),
                    HYPOTHESIS_FAILED):
        return out
    if not out._add(check_nonmetricity_condition(connection, b, None, cfg), HYPOTHESIS_FAILED):
        return out
    if not out._add(check_parallel_coframe(connection, b, cfg), HYPOTHESIS_FAILED):
        return out
    out._add(check_closed_coframe(b, cfg), CONCLUSION_FAILED)
    out._add(check_killing(b, cfg), CONCLUSION_FAILED)
    gbar = AugmentedMetric(b)
    out.augmented_metric = gbar
    lc = levi_civita_connection(gbar)
    res = [float(np.max(np.abs(connection(p) - lc(p)))) for p in pts]
    out._add(ConditionReport.from_residuals(
        "levi_civita_match", res, pts, _tol(cfg, connection, gbar),
        "max |Γ - Γ(Levi-Civita of ḡ)|"), CONCLUSION_FAILED)
    return out
