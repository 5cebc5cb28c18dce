"""Shared fixtures: bundle builders and random expression generators."""
from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from lightlike.degenerate import DegenerateMetricBundle
from lightlike.tensor import field_from_strings


# filled by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def bundle(metric, frame, coframe, domain=None, index=0, params=None):
    n = len(metric)
    domain = domain or [(-1.0, 1.0)] * n
    return DegenerateMetricBundle(
        metric=field_from_strings("ll", metric, n, params),
        nullity=len(frame),
        radical_frame=[field_from_strings("u", row, n, params) for row in frame],
        coframe=[field_from_strings("l", row, n, params) for row in coframe],
        domain=domain,
        index=index,
    )


def diag(*entries):
    n = len(entries)
    return [[str(entries[i]) if i == j else "0" for j in range(n)] for i in range(n)]


def sparse3(n, entries):
    grid = np.full((n, n, n), "0", dtype=object)
    for idx, src in entries.items():
        grid[idx] = src
    return grid


FLAT3 = dict(metric=diag(0, 1, 1), frame=[["1", "0", "0"]], coframe=[["1", "0", "0"]])
PPWAVE = dict(metric=diag(0, "1 + x1^2", 1), frame=[["1", "0", "0"]],
              coframe=[["1", "0", "0"]], domain=[(-2.0, 2.0)] * 3)
NONKILLING = dict(metric=diag(0, "1 + x0^2", 1), frame=[["1", "0", "0"]],
                  coframe=[["1", "0", "0"]])
TORSIONFUL = dict(metric=diag(0, 1, 1), frame=[["1", "0", "0"]], coframe=[["1", "0", "x1"]])
FLAT4R2 = dict(metric=diag(0, 0, 1, 1),
               frame=[["1", "0", "0", "0"], ["0", "1", "0", "0"]],
               coframe=[["1", "0", "0", "0"], ["0", "1", "0", "0"]])


# --------------------------------------------------------------------------
# random expressions that stay finite and smooth on [-1, 1]^n

_UNARY = (
    "sin({})", "cos({})", "exp(sin({}))", "log(2 + cos({}))", "sqrt(1 + ({})^2)",
    "tan(sin({})/2)", "(1 + ({})^2)^(-1/2)", "({})^2", "({})^3", "-({})",
)
_BINARY = ("({}) + ({})", "({}) - ({})", "({})*({})", "({})/(2 + sin({}))")


def random_expression(rng: np.random.Generator, n: int, depth: int = 3) -> str:
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.7:
            return f"x{rng.integers(n)}"
        return f"{rng.uniform(-2, 2):.3f}"
    if rng.random() < 0.5:
        return _UNARY[rng.integers(len(_UNARY))].format(random_expression(rng, n, depth - 1))
    form = _BINARY[rng.integers(len(_BINARY))]
    return form.format(random_expression(rng, n, depth - 1), random_expression(rng, n, depth - 1))


def expression_sources(n: int) -> st.SearchStrategy[str]:
    leaves = st.one_of(
        st.integers(0, n - 1).map(lambda i: f"x{i}"),
        st.floats(-2, 2, allow_nan=False).map(lambda v: f"{v:.4f}"),
    )
    return st.recursive(
        leaves,
        lambda inner: st.one_of(
            st.tuples(st.sampled_from(_UNARY), inner).map(lambda t: t[0].format(t[1])),
            st.tuples(st.sampled_from(_BINARY), inner, inner).map(
                lambda t: t[0].format(t[1], t[2])),
        ),
        max_leaves=8,
    )


def central_difference(f, p, i, h=1e-5):
    p = np.asarray(p, dtype=float)
    e = np.zeros_like(p)
    e[i] = h
    return (f(p + e) - f(p - e)) / (2 * h)


def random_polynomial(rng: np.random.Generator, n: int, degree: int = 2) -> str:
    """Random polynomial source of total degree at most ``degree`` in n variables."""
    terms = [f"{rng.uniform(-1, 1):.3f}"]
    for _ in range(4):
        powers = rng.integers(0, degree + 1, size=n)
        if powers.sum() > degree or powers.sum() == 0:
            continue
        mono = "*".join(f"x{i}^{k}" for i, k in enumerate(powers) if k)
        terms.append(f"{rng.uniform(-1, 1):.3f}*{mono}")
    return " + ".join(terms)
