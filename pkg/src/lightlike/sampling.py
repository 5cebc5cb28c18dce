"""Sample clouds, tolerance tiers and per-condition residual reports."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

Box = tuple[tuple[float, float], ...]


def as_box(domain) -> Box:
    box = tuple((float(lo), float(hi)) for lo, hi in domain)
    if not box:
        raise ValueError("domain box has no coordinates")
    for lo, hi in box:
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
            raise ValueError(f"empty or non-finite interval [{lo}, {hi}]")
    return box


@dataclass(frozen=True)
class Tolerances:
    exact: float = 1e-12
    analytic: float = 1e-8
    finite_difference: float = 1e-4

    def __post_init__(self):
        if not 0 < self.exact < self.analytic < self.finite_difference:
            raise ValueError("tolerances must satisfy 0 < exact < analytic < finite_difference")

    def tier(self, exact_partials: bool) -> float:
        return self.analytic if exact_partials else self.finite_difference


@dataclass(frozen=True)
class VerificationConfig:
    sample_count: int = 200
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)
    domain: Box | None = None

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be at least 1")
        if self.domain is not None:
            object.__setattr__(self, "domain", as_box(self.domain))

    def points(self, domain: Box | None = None) -> np.ndarray:
        """Seeded uniform sample cloud of shape ``(sample_count, n)`` inside the box."""
        box = self.domain if self.domain is not None else domain
        if box is None:
            raise ValueError("no domain box configured")
        box = as_box(box)
        lo = np.array([a for a, _ in box])
        hi = np.array([b for _, b in box])
        rng = np.random.default_rng(self.seed)
        return lo + (hi - lo) * rng.random((self.sample_count, len(box)))


@dataclass(frozen=True)
class ConditionReport:
    """Residuals of one pointwise identity over a sample cloud.

    ``passed`` holds exactly when ``max_residual <= tolerance``.
    """

    condition: str
    description: str
    residuals: tuple[float, ...]
    max_residual: float
    mean_residual: float
    passed: bool
    worst_point: tuple[float, ...]
    tolerance: float

    @classmethod
    def from_residuals(cls, condition: str, residuals: Sequence[float], points: np.ndarray,
                       tolerance: float, description: str = "") -> "ConditionReport":
        res = np.asarray(residuals, dtype=float)
        if res.size == 0:
            raise ValueError("no residuals")
        # a NaN residual is a failure and marks the worst point
        nan = np.isnan(res)
        worst = int(np.argmax(nan)) if nan.any() else int(np.argmax(res))
        max_res = float("nan") if nan.any() else float(res[worst])
        return cls(
            condition=condition,
            description=description,
            residuals=tuple(float(r) for r in res),
            max_residual=max_res,
            mean_residual=float(np.mean(res)),
            passed=bool(max_res <= tolerance),
            worst_point=tuple(float(c) for c in points[worst]),
            tolerance=float(tolerance),
        )

    def to_dict(self, per_sample: bool = True) -> dict:
        out = {
            "condition": self.condition,
            "description": self.description,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "worst_point": list(self.worst_point),
        }
        if per_sample:
            out["residuals"] = list(self.residuals)
        return out

    def summary(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"[{flag}] {self.condition:<28} max={self.max_residual:.3e} "
                f"mean={self.mean_residual:.3e} tol={self.tolerance:.0e}")
