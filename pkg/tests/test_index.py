import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import rand_op
from ncglab.aspanier import ASCochain, FunctionRep, antisymmetrize, coboundary
from ncglab.index import (CONSTANTS, IndexReport, cohomological_oracle, fredholm_index, heat_index,
                          ind_even, ind_even_invertible, ind_odd_relative, ind_odd_toeplitz,
                          limit_index, multicommutator, suspended_index, svd_index,
                          toeplitz_bracket_trace, winding_number)
from ncglab.models import CircleModel, SphereModel, dirac_operator, toeplitz
from ncglab.sampling import localized_winding_cochain, random_trig_poly

C = FunctionRep.circle
z, zb = C({1: 1}), C({-1: 1})


def zk(k):
    return C({k: 1})


def embedded_toeplitz(f, m):
    """P f P + (1 - P) on the Laurent model: a Toeplitz operator acting on the full space."""
    P = m.hardy_projection()
    return P @ m.multiplication(f) @ P + (np.eye(m.dim) - P)


# Fredholm case

@pytest.mark.parametrize("k, expected", [(1, -1), (0, 0), (3, -3), (-2, 2)])
def test_fredholm_monomials(k, expected):
    m = CircleModel(32, 8)
    r = fredholm_index(toeplitz(zk(k), m), toeplitz(zk(-k), m), m, symbol=zk(k))
    assert r.value == pytest.approx(expected, abs=1e-10)
    assert r.oracle == expected and r.residual <= 1e-10
    assert svd_index(toeplitz(zk(k), m), m) == expected


def test_fredholm_nonwinding_symbol():
    m = CircleModel(32, 8)
    u = C({0: 2, 1: 1})
    # truncated geometric series for 1/(2 + z)
    inv = C({n: 0.5 * (-0.5) ** n for n in range(7)})
    r = fredholm_index(toeplitz(u, m), toeplitz(inv, m), m, symbol=u)
    assert abs(r.value) <= 1e-10 and r.oracle == 0


def test_fredholm_rejects_short_padding():
    m = CircleModel(8, 2)
    with pytest.raises(ValueError, match="bandwidth"):
        fredholm_index(toeplitz(zk(3), m), toeplitz(zk(-3), m), m)


@pytest.mark.parametrize("a, b", [(a, b) for a in range(-4, 5, 2) for b in range(-3, 4, 3)])
def test_fredholm_additive(a, b):
    m = CircleModel(32, 8)
    D = toeplitz(zk(a), m) @ toeplitz(zk(b), m)
    Q = toeplitz(zk(-b), m) @ toeplitz(zk(-a), m)
    prod = fredholm_index(D, Q, m).value
    sep = (fredholm_index(toeplitz(zk(a), m), toeplitz(zk(-a), m), m).value
           + fredholm_index(toeplitz(zk(b), m), toeplitz(zk(-b), m), m).value)
    assert abs(prod - sep) <= 1e-10
    assert abs(prod + a + b) <= 1e-10


def test_winding_number():
    assert winding_number(C({2: 1, 0: 0.1})) == 2
    assert winding_number(C({0: 3, -1: 1})) == 0
    with pytest.raises(ValueError):
        winding_number(C({0: 1, 1: 1}))


# even index through a lift

@pytest.mark.parametrize("k", [1, 2, -1])
def test_ind_even_degree_zero(k):
    m = CircleModel(24, 8)
    r = ind_even(toeplitz(zk(k), m), toeplitz(zk(-k), m), ASCochain.unit(), m, symbol=zk(k))
    assert abs(r.value + k) <= 1e-10 and r.residual <= 1e-10
    assert abs(r.extras["fredholm"] + k) <= 1e-10


def test_ind_even_rejects_odd_degree():
    m = CircleModel(8, 2)
    with pytest.raises(ValueError, match="even"):
        ind_even(np.eye(8), np.eye(8), antisymmetrize([(1, (z, zb))]), m)


def test_ind_even_of_coboundary_vanishes():
    rng = np.random.default_rng(0)
    m = CircleModel(24, 8, space="laurent")
    D, Q = embedded_toeplitz(z, m), embedded_toeplitz(zb, m)
    psi = antisymmetrize([(1, tuple(random_trig_poly(rng, 1) for _ in range(2)))])
    assert abs(ind_even(D, Q, coboundary(psi), m).value) <= 1e-8


@settings(max_examples=3, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ind_even_class_invariance(seed):
    rng = np.random.default_rng(seed)
    m = CircleModel(12, 4, space="laurent")
    D, Q = embedded_toeplitz(z, m), embedded_toeplitz(zb, m)
    phi = antisymmetrize([(1, tuple(random_trig_poly(rng, 1) for _ in range(3)))])
    psi = antisymmetrize([(1, tuple(random_trig_poly(rng, 1) for _ in range(2)))])
    a = ind_even(D, Q, phi, m).value
    b = ind_even(D, Q, phi + coboundary(psi), m).value
    assert abs(a - b) <= 1e-8


def test_ind_even_invertible_examples():
    m = CircleModel(16, 4)
    rng = np.random.default_rng(1)
    D = rand_op(rng, 16) + 6 * np.eye(16)
    # q = 0: S_1 = 0
    assert abs(ind_even_invertible(D, ASCochain.unit(), m).value) <= 1e-12
    # a function commuting with D gives S_f = 0
    Ddiag = np.diag(np.arange(1.0, 17.0))
    f = C({0: 2.0})
    phi = antisymmetrize([(1, (f, z, zb))])
    r = ind_even_invertible(Ddiag, phi, m)
    assert r.oracle == 0.0 and abs(r.value) <= 1e-8
    with pytest.raises(ValueError, match="even"):
        ind_even_invertible(D, antisymmetrize([(1, (z, zb))]), m)


# odd index

def test_ind_odd_toeplitz_circle():
    m = CircleModel(16, 4)
    phi = antisymmetrize([(1, (zb, z))])
    r = ind_odd_toeplitz(m.hardy_projection(), phi, m)
    # [T_zb, T_z] is the rank-one projection onto the constants, so the value is -1
    assert abs(r.value + 1) <= 1e-12 and r.residual <= 1e-12


def test_ind_odd_toeplitz_degenerate_cases():
    m = CircleModel(16, 4)
    f = C({1: 1, -2: 0.5})
    assert ind_odd_toeplitz(m.hardy_projection(), antisymmetrize([(1, (f, f))]), m).value == 0
    phi = antisymmetrize([(1, (zb, z))])
    # on the Laurent space P = 1 compresses nothing, so the commutators vanish inside the window
    ml = CircleModel(16, 4, space="laurent")
    assert abs(ind_odd_toeplitz(np.eye(ml.dim), phi, ml).value) <= 1e-12
    with pytest.raises(ValueError, match="projection"):
        ind_odd_toeplitz(2 * np.eye(16), phi, m)
    with pytest.raises(ValueError, match="odd"):
        ind_odd_toeplitz(np.eye(16), ASCochain.unit(), m)


def test_ind_odd_toeplitz_class_invariance():
    rng = np.random.default_rng(2)
    m = CircleModel(24, 8)
    P = m.hardy_projection()
    phi = antisymmetrize([(1, (zb, z))])
    psi = ASCochain.build([(1, (random_trig_poly(rng, 2),))])
    assert abs(ind_odd_toeplitz(P, phi + coboundary(psi), m).value
               - ind_odd_toeplitz(P, phi, m).value) <= 1e-8
    psi2 = antisymmetrize([(1, tuple(random_trig_poly(rng, 1) for _ in range(3)))])
    assert abs(ind_odd_toeplitz(P, coboundary(psi2), m).value) <= 1e-8


def test_ind_odd_relative_matches_toeplitz():
    # the relative form needs genuine multiplication operators, i.e. the Laurent space
    m = CircleModel(16, 4, space="laurent")
    phi = antisymmetrize([(1, (zb, z))])
    r = ind_odd_relative(m.hardy_projection(), phi, m)
    assert r.residual <= 1e-7 and abs(r.value + 1) <= 1e-7
    assert abs(ind_odd_relative(np.zeros((m.dim, m.dim)), phi, m).value) <= 1e-12
    assert abs(ind_odd_relative(np.eye(m.dim), phi, m).value) <= 1e-12


# suspended index

def test_suspended_index_dirac():
    m = CircleModel(64, 16, space="laurent")
    r = suspended_index(dirac_operator(m), localized_winding_cochain(4), m)
    assert abs(r.value + 1) <= 1e-6
    assert abs(r.oracle + 1) <= 1e-6


def test_suspended_index_positive_operator():
    m = CircleModel(32, 8, space="laurent")
    rng = np.random.default_rng(3)
    X = rand_op(rng, m.dim)
    width = 0.6 * m.N
    # spectrum above the smoothing width: the smoothed phase is exactly 1
    D = X @ X.conj().T + (width + 1) * np.eye(m.dim)
    r = suspended_index(D, localized_winding_cochain(4), m, width=width)
    assert abs(r.value) <= 1e-12 and abs(r.oracle) <= 1e-12


def test_suspended_index_exact_phase_vanishes():
    # the loop built from an exact phase F with F^2 = 1 is constant, so nothing is detected
    m = CircleModel(32, 8, space="laurent")
    r = suspended_index(dirac_operator(m), localized_winding_cochain(4), m, width=0)
    assert abs(r.value) <= 1e-10


# brackets

def test_multicommutator_small_cases():
    rng = np.random.default_rng(4)
    A, B, Cc = (rand_op(rng, 4) for _ in range(3))
    assert np.allclose(multicommutator([A, B]), (A @ B - B @ A) / 2)
    six = (A @ B @ Cc - A @ Cc @ B - B @ A @ Cc + B @ Cc @ A + Cc @ A @ B - Cc @ B @ A)
    assert np.allclose(multicommutator([A, B, Cc]), six / 6)
    assert np.allclose(multicommutator([A, A, B]), 0)
    with pytest.raises(ValueError, match="size cap"):
        multicommutator([A] * 9)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.permutations(range(3)))
def test_multicommutator_alternating(seed, perm):
    rng = np.random.default_rng(seed)
    ops = [rand_op(rng, 3) for _ in range(3)]
    sign = round(np.linalg.det(np.eye(3)[list(perm)]))
    assert np.allclose(multicommutator([ops[i] for i in perm]), sign * multicommutator(ops))


def test_commutator_trace_matches_oracle():
    m = CircleModel(32, 8)
    rng = np.random.default_rng(5)
    f0, f1 = random_trig_poly(rng, 2), random_trig_poly(rng, 2)
    phi = antisymmetrize([(1, (f0, f1))])
    plain = CONSTANTS["bracket"](2) * toeplitz_bracket_trace([f0, f1], m)
    assert abs(plain - cohomological_oracle("odd", phi, m)) <= 1e-9
    # the per-cochain normalization is smaller by 2!
    cochain = ind_odd_toeplitz(m.hardy_projection(), phi, m).value / CONSTANTS["hiidem2"](1)
    assert abs(cochain - cohomological_oracle("odd", phi, m, normalization="cochain")) <= 1e-9


def test_oracle_argument_checks():
    m = CircleModel(8, 2)
    with pytest.raises(ValueError, match="top degree"):
        cohomological_oracle("odd", ASCochain.unit(), m)
    phi = antisymmetrize([(1, (zb, z))])
    with pytest.raises(ValueError, match="even"):
        cohomological_oracle("even", phi, m)
    with pytest.raises(ValueError, match="normalization"):
        cohomological_oracle("odd", phi, m, normalization="other")


def test_sphere_oracle():
    m = SphereModel(6, 2)
    S = FunctionRep.sphere
    fs = (S({(0, 0, 1, 0): 1}), S({(1, 0, 0, 0): 1}), S({(0, 1, 0, 0): 1}), S({(0, 0, 0, 1): 1}))
    phi = antisymmetrize([(1, fs)])
    value = ind_odd_toeplitz(m.hardy_projection(), phi, m).value / CONSTANTS["hiidem2"](2)
    assert abs(value - cohomological_oracle("odd", phi, m, normalization="cochain")) <= 1e-2


def test_constants_table():
    assert CONSTANTS["ch_even"](1) == -2 and CONSTANTS["ch_even"](2) == 12
    assert CONSTANTS["ch_odd"](1) == -1 and CONSTANTS["ch_odd"](2) == 2
    assert CONSTANTS["hii2"](1) == -1
    assert CONSTANTS["hiidem2"](1) == -2
    assert CONSTANTS["odd_index_form"](1) == pytest.approx(-1 / (2j * math.pi))
    assert CONSTANTS["odd_top_trace"](1) == pytest.approx(1 / (2 * 2j * math.pi))
    assert CONSTANTS["even_top_trace"](1) == pytest.approx(1 / (2j * math.pi))
    assert CONSTANTS["bracket"](4) == 24


# heat lift

def test_heat_index_is_constant_in_t():
    m = CircleModel(24, 8)
    D = toeplitz(z, m) @ np.diag(np.arange(24) + 1.0)
    values = [heat_index(D, t, m, symbol=z).value for t in (0.5, 1.0, 4.0)]
    assert max(abs(v + 1) for v in values) <= 1e-8
    assert abs(limit_index(D, m) + 1) <= 1e-6
    assert abs(heat_index(D, 50.0, m).value - limit_index(D, m)) <= 1e-6


def test_index_report_dict():
    r = IndexReport(1 + 2j, "x", oracle=1.0)
    d = r.to_dict()
    assert d["value"] == [1.0, 2.0] and d["oracle"] == [1.0, 0.0]
    assert r.residual == pytest.approx(2.0)
    assert IndexReport(0, "y").to_dict()["residual"] is None
