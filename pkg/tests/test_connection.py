import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from lightlike.connection import (ConnectionField, ConstructionError, covariant_derivative,
                                  koszul_closed_form, koszul_connection, koszul_pointwise_solve,
                                  koszul_solve_at, levi_civita, levi_civita_connection,
                                  nonmetricity_of, torsion_of)
from lightlike.degenerate import AugmentedMetric, DegeneracyError
from lightlike.sampling import VerificationConfig
from lightlike.tensor import (CallbackField, DerivedField, constant_field, coordinate_vector,
                              field_from_strings)

from helpers import PPWAVE, bundle, diag, random_polynomial, sparse3

PTS = VerificationConfig(sample_count=100, seed=1).points([(-1.0, 1.0)] * 3)


def sympy_christoffel(metric_sources, n):
    """Christoffel symbols Γ^k_ij from sympy, as a numpy-callable of the point."""
    xs = sp.symbols(f"x0:{n}")
    g = sp.Matrix(n, n, lambda i, j: sp.sympify(metric_sources[i][j].replace("^", "**"),
                                                 locals=dict(zip(map(str, xs), xs))))
    ginv = g.inv()
    gamma = [[[sum(ginv[k, l] * (sp.diff(g[j, l], xs[i]) + sp.diff(g[i, l], xs[j])
                                 - sp.diff(g[i, j], xs[l])) for l in range(n)) / 2
               for j in range(n)] for i in range(n)] for k in range(n)]
    f = sp.lambdify(xs, gamma, "numpy")
    return lambda p: np.array(f(*p), dtype=float)


# Levi-Civita ---------------------------------------------------------------

def test_flat_completion_has_zero_christoffels():
    gbar = constant_field(np.eye(3), "ll")
    assert not levi_civita(gbar, [0.1, 0.2, 0.3]).components.any()


def test_constant_rescaling_has_zero_christoffels():
    gbar = constant_field(2.5 * np.eye(3), "ll")
    assert not levi_civita(gbar, [0.1, 0.2, 0.3]).components.any()


def test_curved_hand_value():
    gbar = field_from_strings("ll", diag(1, "1 + x1^2", 1), 3)
    gamma = levi_civita(gbar, [0.0, 1.0, 0.0]).components
    assert gamma[1, 1, 1] == pytest.approx(0.5, abs=1e-15)
    assert np.count_nonzero(gamma) == 1


@pytest.mark.parametrize("sources", [
    diag(1, "1 + x1^2", 1),
    [["2 + x1^2", "x0*x2", "0"], ["x0*x2", "3 + sin(x0)", "x1"], ["0", "x1", "4 + x2^2"]],
    [["-1 - x1^2", "0.3", "x2"], ["0.3", "2", "0"], ["x2", "0", "1 + exp(x0)"]],
])
def test_levi_civita_against_sympy(sources):
    oracle = sympy_christoffel(sources, 3)
    gbar = field_from_strings("ll", sources, 3)
    for p in PTS[:30]:
        assert np.max(np.abs(levi_civita(gbar, p).components - oracle(p))) <= 1e-9


def test_levi_civita_metric_and_torsion_free():
    gbar = field_from_strings("ll", [["2 + x1^2", "x0*x2", "0"], ["x0*x2", "3", "x1"],
                                     ["0", "x1", "4"]], 3)
    conn = levi_civita_connection(gbar)
    for p in PTS:
        assert np.max(np.abs(covariant_derivative(conn, gbar, p).components)) <= 1e-9
        assert not torsion_of(conn, p).components.any()


def test_levi_civita_degenerate_metric():
    g = constant_field(np.diag([0.0, 1.0, 1.0]), "ll")
    with pytest.raises(DegeneracyError):
        levi_civita(g, [0, 0, 0])


# general construction ------------------------------------------------------

def test_reduction_to_levi_civita():
    gbar = AugmentedMetric(bundle(**PPWAVE))
    conn = koszul_connection(gbar)
    lc = levi_civita_connection(gbar)
    assert conn.provenance == "levi-civita"
    for p in PTS:
        assert np.max(np.abs(conn(p) - lc(p))) <= 1e-12


def test_constant_torsion_round_trip():
    c = 0.7
    T = field_from_strings("ull", sparse3(3, {(2, 0, 1): str(c), (2, 1, 0): str(-c)}), 3)
    gbar = constant_field(np.eye(3), "ll")
    conn = koszul_connection(gbar, T)
    assert conn.provenance == "koszul-general"
    for p in PTS:
        assert np.max(np.abs(torsion_of(conn, p).components - T.components(p))) <= 1e-10
        assert np.max(np.abs(nonmetricity_of(conn, gbar, p).components)) <= 1e-10
        assert np.max(np.abs(conn(p) - koszul_solve_at(gbar, T, None, p).components)) <= 1e-10


def test_constant_nonmetricity_round_trip():
    q = 0.4
    Q = field_from_strings("lll", sparse3(3, {(0, 0, 0): str(q)}), 3)
    gbar = constant_field(np.eye(3), "ll")
    conn = koszul_connection(gbar, None, Q)
    for p in PTS:
        assert np.max(np.abs(nonmetricity_of(conn, gbar, p).components - Q.components(p))) <= 1e-10
        assert np.max(np.abs(torsion_of(conn, p).components)) <= 1e-10


def test_pointwise_solve_flat():
    z = np.zeros((3, 3, 3))
    assert np.max(np.abs(koszul_pointwise_solve(np.eye(3), z, z, z))) == 0.0


def test_pointwise_solve_matches_hand_christoffel():
    gbar = field_from_strings("ll", diag(1, "1 + x1^2", 1), 3)
    gamma = koszul_solve_at(gbar, None, None, [0.0, 1.0, 0.0]).components
    assert abs(gamma[1, 1, 1] - 0.5) <= 1e-12
    assert np.max(np.abs(np.delete(gamma.ravel(), 13))) <= 1e-12


def _random_torsion(rng, n):
    t = rng.normal(size=(n, n, n))
    return t - np.swapaxes(t, 1, 2)


def _random_nonmetricity(rng, n):
    q = rng.normal(size=(n, n, n))
    return q + np.swapaxes(q, 1, 2)


def _random_metric(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + n * np.eye(n), rng.normal(size=(n, n, n))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.booleans())
def test_closed_form_agrees_with_linear_solve(seed, n, lorentzian):
    rng = np.random.default_rng(seed)
    g, dg = _random_metric(rng, n)
    if lorentzian:
        s = np.diag([-1.0] + [1.0] * (n - 1))
        g = s @ g @ s - 2 * n * np.outer(np.eye(n)[0], np.eye(n)[0])
    dg = dg + np.swapaxes(dg, 1, 2)
    t, q = _random_torsion(rng, n), _random_nonmetricity(rng, n)
    a = koszul_closed_form(g, dg, t, q)
    b = koszul_pointwise_solve(g, dg, t, q)
    assert np.max(np.abs(a - b)) <= 1e-9 * (1 + np.max(np.abs(b)))


def test_polynomial_round_trip():
    rng = np.random.default_rng(21)
    n = 3
    gbar = field_from_strings("ll", [["3 + x1^2", "x0*x2", "0"], ["x0*x2", "3", "0.5*x1"],
                                     ["0", "0.5*x1", "4"]], n)
    t = np.full((n, n, n), "0", dtype=object)
    q = np.full((n, n, n), "0", dtype=object)
    for k in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                src = random_polynomial(rng, n)
                t[k, i, j] = src
                t[k, j, i] = f"-({src})"
            for j in range(i, n):
                src = random_polynomial(rng, n)
                q[k, i, j] = q[k, j, i] = src
    T = field_from_strings("ull", t, n)
    Q = field_from_strings("lll", q, n)
    conn = koszul_connection(gbar, T, Q, check_points=PTS[:20], tol=1e-8)
    for p in PTS:
        assert np.max(np.abs(torsion_of(conn, p).components - T.components(p))) <= 1e-8
        assert np.max(np.abs(nonmetricity_of(conn, gbar, p).components - Q.components(p))) <= 1e-8


def test_callback_backed_round_trip():
    src = [["3 + x1^2", "x0*x2", "0"], ["x0*x2", "3", "0.5*x1"], ["0", "0.5*x1", "4"]]
    exact = field_from_strings("ll", src, 3)
    gbar = CallbackField("ll", 3, exact.components)
    T = field_from_strings("ull", sparse3(3, {(0, 1, 2): "x0", (0, 2, 1): "-x0"}), 3)
    conn = koszul_connection(gbar, T)
    assert not conn.exact_partials
    for p in PTS[:30]:
        assert np.max(np.abs(torsion_of(conn, p).components - T.components(p))) <= 1e-4
        assert np.max(np.abs(nonmetricity_of(conn, exact, p).components)) <= 1e-4


def test_construction_fault_is_raised():
    # a torsion field that is not antisymmetric cannot be reproduced
    lopsided = field_from_strings("ull", sparse3(3, {(0, 1, 2): "1"}), 3)
    gbar = constant_field(np.eye(3), "ll")
    with pytest.raises(ConstructionError):
        koszul_connection(gbar, lopsided, check_points=[[0.0, 0.0, 0.0]])


# covariant derivatives -----------------------------------------------------

def test_zero_connection_gives_partials():
    zero = ConnectionField(3, lambda p: np.zeros((3, 3, 3)))
    v = field_from_strings("u", ["x1^2", "x0", "sin(x2)"], 3)
    p = [0.3, 0.2, 0.1]
    assert np.array_equal(covariant_derivative(zero, v, p).components, v.gradient(p))


def test_covariant_derivative_of_radical_vanishes():
    gbar = AugmentedMetric(bundle(**PPWAVE))
    conn = levi_civita_connection(gbar)
    for p in PTS:
        assert np.max(np.abs(covariant_derivative(conn, coordinate_vector(0, 3), p).components)) == 0


def test_leibniz_rule_for_coframe_square():
    gbar = field_from_strings("ll", [["2 + x1^2", "x0", "0"], ["x0", "3", "x2"],
                                     ["0", "x2", "4"]], 3)
    conn = levi_civita_connection(gbar)
    tau = field_from_strings("l", ["1 + x1", "x0*x2", "cos(x0)"], 3)
    tt = DerivedField("ll", 3, lambda p: np.outer(tau.components(p), tau.components(p)),
                      lambda p, i: (np.outer(tau.partial_components(p, i), tau.components(p))
                                    + np.outer(tau.components(p), tau.partial_components(p, i))))
    for p in PTS[:30]:
        direct = covariant_derivative(conn, tt, p).components
        nt = covariant_derivative(conn, tau, p).components
        t = tau.components(p)
        split = np.einsum("ij,l->ijl", nt, t) + np.einsum("j,il->ijl", t, nt)
        assert np.max(np.abs(direct - split)) <= 1e-9


def test_metric_pairing_is_preserved():
    # ∇(τ(v)) = (∇τ)(v) + τ(∇v)
    gbar = field_from_strings("ll", [["2 + x1^2", "x0", "0"], ["x0", "3", "x2"],
                                     ["0", "x2", "4"]], 3)
    conn = levi_civita_connection(gbar)
    tau = field_from_strings("l", ["1 + x1", "x0*x2", "cos(x0)"], 3)
    v = field_from_strings("u", ["x2", "1", "x0^2"], 3)
    for p in PTS[:20]:
        lhs = np.array([tau.partial_components(p, i) @ v.components(p)
                        + tau.components(p) @ v.partial_components(p, i) for i in range(3)])
        rhs = (covariant_derivative(conn, tau, p).components @ v.components(p)
               + covariant_derivative(conn, v, p).components @ tau.components(p))
        assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_extraction_examples():
    zero = ConnectionField(3, lambda p: np.zeros((3, 3, 3)))
    p = [0.1, 0.2, 0.3]
    assert not torsion_of(zero, p).components.any()
    assert not nonmetricity_of(zero, constant_field(np.eye(3), "ll"), p).components.any()
    g = field_from_strings("ll", diag(1, "1 + x1^2", 1), 3)
    q = nonmetricity_of(zero, g, p).components
    assert q[1, 1, 1] == pytest.approx(0.4) and np.count_nonzero(q) == 1
    sym = ConnectionField(3, lambda p: np.ones((3, 3, 3)))
    assert not torsion_of(sym, p).components.any()
