"""Degenerate metrics, their radical frame and coframe, and the augmented metric."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .sampling import Box, ConditionReport, VerificationConfig, as_box
from .tensor import (DerivedField, SignatureError, TensorField, TensorValue,
                     chart_point, constant_field)

RANK_TOLERANCE = 1e-10
DEGENERACY_TOLERANCE = 1e-10


class NullityMismatch(ValueError):
    """The metric's nullity at a point differs from the declared nullity degree."""


class DegeneracyError(ValueError):
    """The augmented metric (or a Koszul system) is singular at a point."""


def _matrix(g) -> np.ndarray:
    m = np.asarray(g.components if isinstance(g, TensorValue) else g, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def _spectrum(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Eigen-decomposition of the symmetric part, plus the absolute zero threshold."""
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    return w, v, RANK_TOLERANCE * scale


def nullity(g) -> int:
    w, _, cut = _spectrum(_matrix(g))
    return int(np.sum(np.abs(w) <= cut))


def radical_basis(g, r: int) -> np.ndarray:
    """Orthonormal basis of the null space of ``g``, one vector per row.

    Eigenvalues whose magnitude is at most ``1e-10`` times the largest count
    as zero.  Raises :class:`NullityMismatch` if the count is not ``r``.
    """
    m = _matrix(g)
    w, v, cut = _spectrum(m)
    null = np.abs(w) <= cut
    found = int(np.sum(null))
    if found != r:
        raise NullityMismatch(f"metric has nullity {found}, expected {r}")
    return v[:, null].T.copy()


@dataclass(frozen=True)
class DegenerateMetricBundle:
    """A light-like structure on a chart.

    ``radical_frame`` holds ``r`` vector fields meant to span the radical of
    ``metric``; ``coframe`` holds ``r`` 1-forms dual to them.  Nothing is
    checked beyond signatures here; see :func:`validate_bundle`.
    """

    metric: TensorField
    nullity: int
    radical_frame: tuple[TensorField, ...]
    coframe: tuple[TensorField, ...]
    domain: Box
    index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "radical_frame", tuple(self.radical_frame))
        object.__setattr__(self, "coframe", tuple(self.coframe))
        object.__setattr__(self, "domain", as_box(self.domain))
        if self.metric.signature != "ll":
            raise SignatureError("metric must be a (0,2) field")
        n = self.metric.dim
        if self.nullity < 1:
            raise ValueError("nullity degree must be at least 1")
        if self.nullity > n:
            raise ValueError("nullity degree exceeds the dimension")
        if self.index < 0:
            raise ValueError("index must be non-negative")
        if len(self.radical_frame) != self.nullity or len(self.coframe) != self.nullity:
            raise ValueError(f"need exactly {self.nullity} radical vectors and 1-forms")
        for xi in self.radical_frame:
            if xi.signature != "u" or xi.dim != n:
                raise SignatureError("radical frame entries must be vector fields on the chart")
        for tau in self.coframe:
            if tau.signature != "l" or tau.dim != n:
                raise SignatureError("coframe entries must be 1-form fields on the chart")
        if len(self.domain) != n:
            raise ValueError(f"domain box has {len(self.domain)} intervals for dimension {n}")

    @property
    def dim(self) -> int:
        return self.metric.dim

    @property
    def exact_partials(self) -> bool:
        fields = (self.metric, *self.radical_frame, *self.coframe)
        return all(f.exact_partials for f in fields)

    def frame(self, p: np.ndarray) -> np.ndarray:
        """ξ_i(p) as the rows of an ``(r, n)`` array."""
        return np.array([xi.components(p) for xi in self.radical_frame])

    def coframe_values(self, p: np.ndarray) -> np.ndarray:
        """τ_i(p) as the rows of an ``(r, n)`` array."""
        return np.array([tau.components(p) for tau in self.coframe])


def validate_bundle(b: DegenerateMetricBundle,
                    cfg: VerificationConfig | None = None) -> tuple[ConditionReport, ...]:
    """Check the bundle invariants over the sample cloud, one report per invariant.

    Failures are returned as report entries, never raised.
    """
    cfg = cfg or VerificationConfig()
    pts = cfg.points(b.domain)
    tol = cfg.tolerances
    r = b.nullity
    sym, null, rad, indep, dual, index = ([] for _ in range(6))
    for p in pts:
        g = b.metric.components(p)
        xi = b.frame(p)
        tau = b.coframe_values(p)
        sym.append(np.max(np.abs(g - g.T)))
        w, _, cut = _spectrum(g)
        null.append(abs(int(np.sum(np.abs(w) <= cut)) - r))
        index.append(abs(int(np.sum(w < -cut)) - b.index))
        rad.append(np.max(np.abs(xi @ g)))
        indep.append(r - np.linalg.matrix_rank(xi))
        dual.append(np.max(np.abs(tau @ xi.T - np.eye(r))))
    value_tol = tol.analytic
    return (
        ConditionReport.from_residuals("bundle.symmetry", sym, pts, tol.exact,
                                       "max |g_ij - g_ji|"),
        ConditionReport.from_residuals("bundle.nullity", null, pts, 0.0,
                                       "|nullity(g) - r|"),
        ConditionReport.from_residuals("bundle.radical", rad, pts, value_tol,
                                       "max |g(ξ_i, e_j)|"),
        ConditionReport.from_residuals("bundle.independence", indep, pts, 0.0,
                                       "r - rank(ξ_1..ξ_r)"),
        ConditionReport.from_residuals("bundle.duality", dual, pts, value_tol,
                                       "max |τ_i(ξ_j) - δ_ij|"),
        ConditionReport.from_residuals("bundle.index", index, pts, 0.0,
                                       "|#negative eigenvalues - declared index|"),
    )


class AugmentedMetric(DerivedField):
    """ḡ = g + Σ_k τ_k ⊗ τ_k, with partials by the product rule."""

    def __init__(self, bundle: DegenerateMetricBundle):
        self.bundle = bundle
        super().__init__("ll", bundle.dim, self._value, self._partial,
                         exact_partials=bundle.exact_partials)

    def _value(self, p):
        tau = self.bundle.coframe_values(p)
        return self.bundle.metric.components(p) + tau.T @ tau

    def _partial(self, p, i):
        tau = self.bundle.coframe_values(p)
        dtau = np.array([t.partial_components(p, i) for t in self.bundle.coframe])
        cross = dtau.T @ tau
        return self.bundle.metric.partial_components(p, i) + cross + cross.T


def check_nondegenerate(gbar: TensorField, points: np.ndarray) -> ConditionReport:
    """Residual is how far the smallest |eigenvalue| falls short of the degeneracy floor."""
    short = []
    for p in points:
        w = np.linalg.eigvalsh(gbar.components(p))
        short.append(max(0.0, DEGENERACY_TOLERANCE - float(np.min(np.abs(w)))))
    # any positive shortfall fails; the floor itself is the pass line
    return ConditionReport.from_residuals("augmented.nondegenerate", short, points, 0.0,
                                          "max(0, 1e-10 - min |eig ḡ|)")


def build_augmented_metric(b: DegenerateMetricBundle,
                           cfg: VerificationConfig | None = None) -> AugmentedMetric:
    """Form ḡ and confirm it is nondegenerate on the sample cloud."""
    gbar = AugmentedMetric(b)
    cfg = cfg or VerificationConfig()
    pts = cfg.points(b.domain)
    report = check_nondegenerate(gbar, pts)
    if not report.passed:
        raise DegeneracyError(f"augmented metric is degenerate near {list(report.worst_point)}")
    return gbar


def augmented_metric_at(b: DegenerateMetricBundle, p: Sequence[float]) -> TensorValue:
    p = chart_point(p, b.dim)
    return TensorValue(AugmentedMetric(b).components(p), "ll")


def constant_bundle(g, domain, index: int | None = None) -> DegenerateMetricBundle:
    """Convenience bundle for a constant metric matrix.

    The radical frame is an arbitrary orthonormal null basis and each τ_i is
    its Euclidean dual.  This choice is not canonical; modelling work should
    pick ξ_i and τ_i deliberately.
    """
    m = _matrix(g)
    w, v, cut = _spectrum(m)
    null = np.abs(w) <= cut
    r = int(np.sum(null))
    if r == 0:
        raise NullityMismatch("metric is nondegenerate")
    basis = v[:, null].T
    if index is None:
        index = int(np.sum(w < -cut))
    return DegenerateMetricBundle(
        metric=constant_field(m, "ll"),
        nullity=r,
        radical_frame=tuple(constant_field(vec, "u") for vec in basis),
        coframe=tuple(constant_field(vec, "l") for vec in basis),
        domain=as_box(domain),
        index=index,
    )
