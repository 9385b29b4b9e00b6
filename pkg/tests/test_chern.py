import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from helpers import chain_distance, parametrix_pair, rand_op, random_idempotent
from ncglab.chern import (PathSpec, beta_factor, beta_factor_quadrature, ch_idempotent,
                          ch_invertible, chr_even, chr_odd, circle_unitary,
                          circle_winding_pairing, exponential_path, idempotent_path,
                          invertible_lift, lift_symbol, slant_idempotent, slant_invertible,
                          suspended_chern, transgress)
from ncglab.cyclic import Chain, boundary, tr_tensor, tr_tensor_mixed
from ncglab.models import localized_phase

seeds = st.integers(0, 2**32 - 1)


def block(*rows):
    return np.block([list(r) for r in rows])


# Chern characters

def test_ch_idempotent_degree_two_coefficient():
    E = np.diag([1.0, 0.0]).astype(complex)
    ch = ch_idempotent(E, 2)
    assert np.allclose(ch[0].terms[0][1][0], E)
    coeff, fs = ch[2].terms[0]
    assert coeff == -2
    assert np.allclose(fs[0], E - 0.5 * np.eye(2))
    assert all(np.allclose(f, E) for f in fs[1:])


def test_ch_zero_idempotent():
    ch = ch_idempotent(np.zeros((2, 2)), 4)
    assert ch.norm() == 0


def test_ch_rejects_non_idempotent():
    with pytest.raises(ValueError, match="not an idempotent"):
        ch_idempotent(np.array([[1.0, 1.0], [0.0, 0.5]]), 2)
    with pytest.raises(ValueError):
        ch_idempotent(np.eye(2), 1)


@settings(max_examples=15, deadline=None)
@given(seeds, st.integers(1, 3))
def test_ch_idempotent_cocycle(seed, n):
    rng = np.random.default_rng(seed)
    E = random_idempotent(rng, n, int(rng.integers(0, n + 1)))
    assert boundary(ch_idempotent(E, 4)).norm() <= 1e-10


def test_ch_invertible_identity_and_leading_term():
    assert ch_invertible(np.eye(2), 3).norm() == 0
    rng = np.random.default_rng(0)
    U = rand_op(rng, 2) + 2 * np.eye(2)
    coeff, (a, b) = ch_invertible(U, 1)[1].terms[0]
    assert coeff == 1 and np.allclose(a, np.linalg.inv(U)) and np.allclose(b, U)


def test_ch_invertible_singular():
    with pytest.raises(ValueError, match="singular"):
        ch_invertible(np.array([[1.0, 1.0], [1.0, 1.0]]), 1)


@settings(max_examples=15, deadline=None)
@given(seeds, st.integers(1, 3))
def test_ch_invertible_cocycle(seed, n):
    rng = np.random.default_rng(seed)
    U = rand_op(rng, n) + 2 * np.eye(n)
    assert boundary(ch_invertible(U, 3)).norm() <= 1e-10


# slant chains against finite differences of ch along a path

def _fd_check(path, ch, slant, cutoff, t, h=1e-5):
    P, Pdot = path.evaluator(t)
    plus, minus = path.evaluator(t + h)[0], path.evaluator(t - h)[0]
    deriv = (ch(plus, cutoff) - ch(minus, cutoff)) * (1 / (2 * h))
    rhs = boundary(slant(P, Pdot, cutoff + 1))
    return (deriv - rhs).norm()


def test_slant_zero_velocity():
    rng = np.random.default_rng(1)
    E = random_idempotent(rng, 2, 1)
    assert slant_idempotent(E, np.zeros((2, 2)), 3).norm() == 0
    U = rand_op(rng, 2) + 2 * np.eye(2)
    assert slant_invertible(U, np.zeros((2, 2)), 2).norm() == 0


def test_slant_idempotent_is_derivative_of_ch():
    rng = np.random.default_rng(2)
    lift = lift_symbol(*parametrix_pair(rng, 1))
    path = idempotent_path(lift.V, lift.Vinv)
    for t in (0.3, 1.1):
        assert _fd_check(path, ch_idempotent, slant_idempotent, 2, t) <= 1e-6


def test_slant_idempotent_degree_zero_derivative():
    rng = np.random.default_rng(3)
    lift = lift_symbol(rand_op(rng, 2) + 2 * np.eye(2), rand_op(rng, 2))
    path = idempotent_path(lift.V, lift.Vinv)
    t, h = 0.7, 1e-5
    E, Edot = path.evaluator(t)
    fd = (path.evaluator(t + h)[0] - path.evaluator(t - h)[0]) / (2 * h)
    assert np.linalg.norm(fd - Edot) <= 1e-7 * max(1, np.linalg.norm(Edot))
    # degree 0 of (b + B) slant is b of the degree-1 slant; its trace is tr Ė
    b0 = boundary(slant_idempotent(E, Edot, 1))[0]
    assert abs(sum(c * np.trace(f[0]) for c, f in b0.terms)) <= 1e-10
    assert abs(np.trace(Edot) - np.trace(fd)) <= 1e-7


def test_slant_invertible_exponential_degree_zero():
    rng = np.random.default_rng(4)
    P = random_idempotent(rng, 3, 1)
    U, Udot = exponential_path(P).evaluator(0.37)
    s = slant_invertible(U, Udot, 0)
    assert abs(sum(c * np.trace(f[0]) for c, f in s[0].terms) - 2j * math.pi) <= 1e-10


@settings(max_examples=8, deadline=None)
@given(seeds)
def test_slant_invertible_is_derivative_of_ch(seed):
    rng = np.random.default_rng(seed)
    A, B = rand_op(rng, 2), rand_op(rng, 2)

    def evaluate(t):
        U = scipy.linalg.expm(t * A) @ (B + 3 * np.eye(2))
        return U, A @ U

    path = PathSpec.gauss(0.0, 0.5, evaluate, "invertible")
    assert _fd_check(path, ch_invertible, slant_invertible, 3, 0.25) <= 1e-5


# paths and transgression

def test_gauss_weights_sum():
    p = PathSpec.gauss(0.2, 1.7, lambda t: (np.eye(1), np.zeros((1, 1))))
    assert abs(p.weights.sum() - 1.5) <= 1e-14


def test_constant_path_transgression():
    E = np.diag([1.0, 0.0]).astype(complex)
    p = PathSpec.gauss(0.0, 1.0, lambda t: (E, np.zeros((2, 2))))
    assert transgress(p, cutoff=3).norm() == 0


def test_rotation_path_of_unit_scalar():
    v, vi = invertible_lift(np.eye(1))
    T = transgress(idempotent_path(v, vi), cutoff=3)
    assert tr_tensor_mixed(T, 4).norm() <= 1e-12


def test_beta_factors():
    assert abs(beta_factor_quadrature(0) - 0.5) <= 1e-12
    assert abs(beta_factor_quadrature(1) - 1 / 12) <= 1e-12
    for q in range(5):
        assert abs(beta_factor_quadrature(q) - beta_factor(q)) <= 1e-12


def test_idempotent_path_endpoints_and_idempotency():
    rng = np.random.default_rng(5)
    lift = lift_symbol(rand_op(rng, 2), rand_op(rng, 2))
    p = idempotent_path(lift.V, lift.Vinv)
    z = np.zeros((4, 4))
    assert np.allclose(p.start(), block([lift.EV, z], [z, z]))
    assert np.allclose(p.end(), block([z, z], [z, lift.e]))
    E = p.evaluator(math.pi / 4)[0]
    assert np.linalg.norm(E @ E - E) <= 1e-10 * np.linalg.norm(E) ** 2
    for t in p.nodes:
        E = p.evaluator(t)[0]
        assert np.linalg.norm(E @ E - E) <= 1e-10 * max(1, np.linalg.norm(E)) ** 2


def test_idempotent_path_velocity_combination_is_constant():
    rng = np.random.default_rng(6)
    lift = lift_symbol(rand_op(rng, 1), rand_op(rng, 1))
    p = idempotent_path(lift.V, lift.Vinv)
    e, V, Vi = lift.e, lift.V, lift.Vinv
    z = np.zeros_like(e)
    target = block([z, V @ e], [-e @ Vi, z])
    for t in (0.1, 0.8, 1.4):
        E, _ = p.evaluator(t)
        h = 1e-6
        fd = (p.evaluator(t + h)[0] - p.evaluator(t - h)[0]) / (2 * h)
        assert np.linalg.norm((2 * E - np.eye(len(E))) @ fd - target) <= 1e-6 * np.linalg.norm(target)


def test_non_inverse_pair_rejected():
    with pytest.raises(ValueError):
        idempotent_path(np.eye(2), 2 * np.eye(2))


@settings(max_examples=6, deadline=None)
@given(seeds)
def test_transgression_identity_lift_path(seed):
    rng = np.random.default_rng(seed)
    lift = lift_symbol(*parametrix_pair(rng, 2))
    p = idempotent_path(lift.V, lift.Vinv)
    T = transgress(p, cutoff=3)
    r = ch_idempotent(p.end(), 2) - ch_idempotent(p.start(), 2) - boundary(T)
    assert r.norm() <= 1e-7


@settings(max_examples=6, deadline=None)
@given(seeds, st.integers(1, 3))
def test_rotation_lemma(seed, n):
    rng = np.random.default_rng(seed)
    u = rand_op(rng, n) + 2 * np.eye(n)
    v, vi = invertible_lift(u)
    T = transgress(idempotent_path(v, vi), cutoff=3)
    rhs = (ch_invertible(u, 3) - ch_invertible(np.linalg.inv(u), 3)) * 0.5
    assert (tr_tensor_mixed(T, 4) - rhs).norm() <= 1e-8


@settings(max_examples=6, deadline=None)
@given(seeds)
def test_exponential_transgression_is_chern_of_projection(seed):
    rng = np.random.default_rng(seed)
    P = random_idempotent(rng, 2, 1)
    T = transgress(exponential_path(P), cutoff=2)
    assert (T - ch_idempotent(P, 2) * (2j * math.pi)).norm() <= 1e-8


# lifts

def test_lift_exact_inverse():
    rng = np.random.default_rng(7)
    D = rand_op(rng, 3) + 3 * np.eye(3)
    lift = lift_symbol(D, np.linalg.inv(D))
    assert np.linalg.norm(lift.S0) < 1e-12 and np.linalg.norm(lift.S1) < 1e-12
    assert np.allclose(lift.EV, np.diag([0, 0, 0, 1, 1, 1]))


def test_lift_of_truncated_shift():
    N = 8
    D = np.eye(N, k=-1)
    lift = lift_symbol(D, D.T)
    P0 = np.zeros((N, N))
    P0[0, 0] = 1
    Ptop = np.zeros((N, N))
    Ptop[-1, -1] = 1
    # truncation: D*D misses the top mode, DD* misses mode 0
    assert np.allclose(lift.S0, Ptop) and np.allclose(lift.S1, P0)
    assert np.linalg.norm(lift.EV @ lift.EV - lift.EV) < 1e-12


def test_tautological_lift_has_no_relative_class():
    u = np.diag(np.exp(2j * math.pi * np.arange(4) / 4))
    lift = lift_symbol(u, u.conj().T)
    etilde = np.eye(8) - lift.e
    assert (ch_idempotent(lift.EV, 2) - ch_idempotent(etilde, 2)).norm() <= 1e-12


def test_lift_dimension_mismatch():
    with pytest.raises(ValueError):
        lift_symbol(np.eye(2), np.eye(3))


# relative Chern characters

def test_chr_odd_trivial_and_exact_inverse():
    # diag(E(V), 0) and diag(0, e) are conjugate block placements, equal after the generalized trace
    c = chr_odd(np.eye(1), np.eye(1), 2)
    assert tr_tensor_mixed(c.relative, 4).norm() <= 1e-12
    assert tr_tensor_mixed(c.absolute, 4).norm() <= 1e-12
    rng = np.random.default_rng(8)
    D = rand_op(rng, 2) + 2 * np.eye(2)
    c = chr_odd(D, np.linalg.inv(D), 2)
    # the lift is then the rotation lift of D
    rhs = (ch_invertible(D, 3) - ch_invertible(np.linalg.inv(D), 3)) * 0.5
    assert (tr_tensor_mixed(c.absolute, 4) - rhs).norm() <= 1e-8
    assert c.residual() <= 1e-8


def test_chr_odd_cone_residual():
    rng = np.random.default_rng(9)
    assert chr_odd(*parametrix_pair(rng, 2), 2).residual() <= 1e-8


def test_winding_cocycle_on_rotation_transgression():
    z = circle_unitary(32)
    v, vi = invertible_lift(z)
    T = transgress(idempotent_path(v, vi), cutoff=1)
    assert abs(circle_winding_pairing(tr_tensor(T[1], 4)) - 1) <= 1e-12


def test_chr_even():
    rng = np.random.default_rng(10)
    P = random_idempotent(rng, 2, 1)
    c = chr_even(P, 1)
    assert c.relative.norm() <= 1e-10
    assert (c.absolute - ch_idempotent(P, 2)).norm() <= 1e-8
    assert chr_even(np.zeros((2, 2)), 1).absolute.norm() == 0
    Pp = P + 1e-3 * rand_op(rng, 2)
    c = chr_even(Pp, 3)
    assert c.relative.norm() > 1e-6
    assert c.residual() <= 1e-8


# suspension loop

def test_suspended_chern_trivial_for_unitary_phase():
    assert suspended_chern(np.eye(2), cutoff=3).norm() == 0
    # F^2 = 1 makes Φ unitary, so the loop is constant
    assert suspended_chern(np.diag([1.0, -1.0]), cutoff=3).norm() <= 1e-14


def test_suspended_chern_is_cycle():
    rng = np.random.default_rng(11)
    A = rand_op(rng, 3)
    F = localized_phase(0.5 * (A + A.conj().T), width=2.0)
    sch = suspended_chern(F, cutoff=3)
    assert sch.norm() > 1e-3
    assert boundary(sch).norm() <= 1e-8


def test_suspended_chern_rejects_non_selfadjoint():
    with pytest.raises(ValueError, match="selfadjoint"):
        suspended_chern(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_chain_distance_helper_agrees_with_norm():
    rng = np.random.default_rng(12)
    a, b = rand_op(rng, 2), rand_op(rng, 2)
    c = Chain.elementary([a, b])
    assert chain_distance(c, c, rng) == 0
