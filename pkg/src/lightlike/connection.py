"""Linear connections on a chart.

Coefficients are stored as ``gamma[k, i, j] = Γ^k_{ij}`` with
``∇_{∂_i} ∂_j = Γ^k_{ij} ∂_k``; ``i`` is the derivative slot.  With that
convention

* torsion:        T^k_{ij} = Γ^k_{ij} - Γ^k_{ji}
* non-metricity:  Q_{zij}  = ∂_z m_{ij} - Γ^k_{zi} m_{kj} - Γ^k_{zj} m_{ik}

Two independent routes produce the connection with prescribed torsion and
non-metricity relative to a nondegenerate metric: the closed Koszul form
(Levi-Civita plus contorsion and disformation terms) and a direct linear
solve of the n³ defining equations above.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .degenerate import DEGENERACY_TOLERANCE, DegeneracyError
from .tensor import SignatureError, TensorError, TensorField, TensorValue, chart_point


class ConstructionError(RuntimeError):
    """A constructed connection failed to reproduce its own torsion/non-metricity."""


class ConnectionField:
    """Connection coefficients as a function of the chart point."""

    def __init__(self, dim: int, coefficients: Callable[[np.ndarray], np.ndarray],
                 provenance: str = "user", exact_partials: bool = True):
        self.dim = dim
        self._coefficients = coefficients
        self.provenance = provenance
        self.exact_partials = exact_partials

    def __call__(self, p) -> np.ndarray:
        gamma = np.asarray(self._coefficients(chart_point(p, self.dim)), dtype=float)
        if gamma.shape != (self.dim,) * 3:
            raise TensorError(f"connection coefficients have shape {gamma.shape}")
        return gamma

    def evaluate(self, p) -> TensorValue:
        return TensorValue(self(p), "ull")

    def __repr__(self):
        return f"ConnectionField(dim={self.dim}, provenance={self.provenance!r})"

    @classmethod
    def from_field(cls, field: TensorField) -> "ConnectionField":
        """Wrap a ``"ull"`` field whose components are Γ^k_{ij}."""
        if field.signature != "ull":
            raise SignatureError("connection coefficients need signature 'ull'")
        return cls(field.dim, field.components, "user", field.exact_partials)


def _metric_data(metric: TensorField, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    g = metric.components(p)
    w = np.linalg.eigvalsh(0.5 * (g + g.T))
    if np.min(np.abs(w)) <= DEGENERACY_TOLERANCE:
        raise DegeneracyError(f"metric is degenerate at {p.tolist()}")
    return g, metric.gradient(p)


def _optional(field: TensorField | None, signature: str, dim: int, p) -> np.ndarray:
    if field is None:
        return np.zeros((dim,) * 3)
    if field.signature != signature:
        raise SignatureError(f"expected signature {signature!r}, got {field.signature!r}")
    return field.components(p)


# --------------------------------------------------------------------------
# pointwise formulas

def christoffel_from_derivatives(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} - ∂_l g_{ij}); ``dg[a, i, j] = ∂_a g_{ij}``."""
    lowered = 0.5 * (dg + np.einsum("jil->ijl", dg) - np.einsum("lij->ijl", dg))
    gamma = np.einsum("kl,ijl->kij", np.linalg.inv(g), lowered)
    # exact symmetry in the lower pair
    return 0.5 * (gamma + np.swapaxes(gamma, 1, 2))


def koszul_closed_form(g: np.ndarray, dg: np.ndarray, torsion: np.ndarray,
                       nonmetricity: np.ndarray) -> np.ndarray:
    """Coefficients with torsion ``T^k_{ij}`` and non-metricity ``Q_{zij}`` relative to ``g``.

    Writing ``A_{ijl} = g(∇_i ∂_j, ∂_l)``, ``S = ∂g - Q`` and ``T_{lij} = g_{lk}T^k_{ij}``::

        2 A_{ijl} = S_{ijl} + S_{jil} - S_{lij} + T_{lij} - T_{jil} - T_{ijl}
    """
    base = christoffel_from_derivatives(g, dg - nonmetricity)
    if not torsion.any():
        return base
    t_low = np.einsum("lk,kij->lij", g, torsion)
    contorsion_low = 0.5 * (np.einsum("lij->ijl", t_low)
                            - np.einsum("jil->ijl", t_low)
                            - t_low)
    return base + np.einsum("kl,ijl->kij", np.linalg.inv(g), contorsion_low)


def _defining_system(g: np.ndarray) -> np.ndarray:
    """Matrix of the n³ linear equations for torsion and non-metricity in the unknowns Γ."""
    n = g.shape[0]
    rows = []

    def unknown(k, i, j):
        return (k * n + i) * n + j

    for k in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                row = np.zeros(n ** 3)
                row[unknown(k, i, j)] += 1.0
                row[unknown(k, j, i)] -= 1.0
                rows.append(row)
    for z in range(n):
        for i in range(n):
            for j in range(i, n):
                row = np.zeros(n ** 3)
                for k in range(n):
                    row[unknown(k, z, i)] += g[k, j]
                    row[unknown(k, z, j)] += g[i, k]
                rows.append(row)
    return np.array(rows)


def koszul_pointwise_solve(g: np.ndarray, dg: np.ndarray, torsion: np.ndarray,
                           nonmetricity: np.ndarray) -> np.ndarray:
    """Solve the defining equations for Γ directly, without the Koszul combination."""
    n = g.shape[0]
    rhs = []
    for k in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                rhs.append(torsion[k, i, j])
    for z in range(n):
        for i in range(n):
            for j in range(i, n):
                rhs.append(dg[z, i, j] - nonmetricity[z, i, j])
    try:
        sol = np.linalg.solve(_defining_system(g), np.array(rhs))
    except np.linalg.LinAlgError as exc:
        raise DegeneracyError("singular Koszul system") from exc
    return sol.reshape(n, n, n)


# --------------------------------------------------------------------------
# fields

def levi_civita(metric: TensorField, p) -> TensorValue:
    """Christoffel symbols of a nondegenerate metric field at ``p``."""
    p = chart_point(p, metric.dim)
    g, dg = _metric_data(metric, p)
    return TensorValue(christoffel_from_derivatives(g, dg), "ull")


def levi_civita_connection(metric: TensorField) -> ConnectionField:
    return ConnectionField(metric.dim, lambda p: levi_civita(metric, p).components,
                           "levi-civita", metric.exact_partials)


def koszul_solve_at(metric: TensorField, torsion: TensorField | None,
                    nonmetricity: TensorField | None, p) -> TensorValue:
    p = chart_point(p, metric.dim)
    g, dg = _metric_data(metric, p)
    n = metric.dim
    t = _optional(torsion, "ull", n, p)
    q = _optional(nonmetricity, "lll", n, p)
    return TensorValue(koszul_pointwise_solve(g, dg, t, q), "ull")


def koszul_connection(metric: TensorField, torsion: TensorField | None = None,
                      nonmetricity: TensorField | None = None,
                      check_points: Sequence[Sequence[float]] | None = None,
                      tol: float | None = None) -> ConnectionField:
    """The unique connection with the given torsion and non-metricity relative to ``metric``.

    When ``check_points`` are given the result is round-tripped through
    :func:`torsion_of` and :func:`nonmetricity_of` there, and a mismatch
    larger than ``tol`` raises :class:`ConstructionError`.
    """
    n = metric.dim
    exact = metric.exact_partials and all(
        f is None or f.exact_partials for f in (torsion, nonmetricity))

    def coefficients(p):
        g, dg = _metric_data(metric, p)
        t = _optional(torsion, "ull", n, p)
        q = _optional(nonmetricity, "lll", n, p)
        return koszul_closed_form(g, dg, t, q)

    provenance = "levi-civita" if torsion is None and nonmetricity is None else "koszul-general"
    conn = ConnectionField(n, coefficients, provenance, exact)
    if check_points is not None:
        if tol is None:
            tol = 1e-8 if exact else 1e-4
        for p in check_points:
            p = chart_point(p, n)
            t_err = np.max(np.abs(torsion_of(conn, p).components - _optional(torsion, "ull", n, p)))
            q_err = np.max(np.abs(nonmetricity_of(conn, metric, p).components
                                  - _optional(nonmetricity, "lll", n, p)))
            if t_err > tol or q_err > tol:
                raise ConstructionError(
                    f"round trip failed at {p.tolist()}: torsion error {t_err:.3e}, "
                    f"non-metricity error {q_err:.3e}")
    return conn


# --------------------------------------------------------------------------
# covariant derivatives and extraction

def covariant_derivative(conn: ConnectionField, f: TensorField, p) -> TensorValue:
    """∇f at ``p``, derivative slot first.

    vectors ``[i, k]``: ∂_i v^k + Γ^k_{ij} v^j;
    1-forms ``[i, j]``: ∂_i τ_j - Γ^k_{ij} τ_k;
    (0,2) ``[i, j, l]``: ∂_i m_{jl} - Γ^k_{ij} m_{kl} - Γ^k_{il} m_{jk}.
    """
    p = chart_point(p, f.dim)
    gamma = conn(p)
    value = f.components(p)
    grad = f.gradient(p)
    if f.signature == "u":
        out = grad + np.einsum("kij,j->ik", gamma, value)
    elif f.signature == "l":
        out = grad - np.einsum("kij,k->ij", gamma, value)
    elif f.signature == "ll":
        out = (grad - np.einsum("kij,kl->ijl", gamma, value)
               - np.einsum("kil,jk->ijl", gamma, value))
    else:
        raise SignatureError(f"covariant derivative not supported for signature {f.signature!r}")
    return TensorValue(out, "l" + f.signature)


def torsion_of(conn: ConnectionField, p) -> TensorValue:
    gamma = conn(p)
    return TensorValue(gamma - np.swapaxes(gamma, 1, 2), "ull")


def nonmetricity_of(conn: ConnectionField, metric: TensorField, p) -> TensorValue:
    """Q_{zij} = (∇_z m)_{ij}."""
    if metric.signature != "ll":
        raise SignatureError("non-metricity needs a (0,2) field")
    return covariant_derivative(conn, metric, p)
