"""Chern characters, slant chains and transgressions for idempotents and invertibles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .cyclic import Chain, ConeCocycle, MixedChain, as_op, insert

IDEMPOTENT_TOL = 1e-10
DEFAULT_NODES = 32


def _eye(n):
    return np.eye(n, dtype=complex)


def _check_idempotent(E: np.ndarray):
    err = np.linalg.norm(E @ E - E)
    if err > IDEMPOTENT_TOL * max(1.0, np.linalg.norm(E)):
        raise ValueError(f"not an idempotent: |E^2 - E| = {err:.3e}")


def _inverse(U: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(U)
    if not np.isfinite(cond) or cond > 1e13:
        raise ValueError(f"singular operator (condition number {cond:.3e})")
    return np.linalg.inv(U)


def ch_idempotent(E, cutoff: int) -> MixedChain:
    """Even Chern character: E in degree 0, (-1)^q (2q)!/q! (E - 1/2) ⊗ E^{⊗2q} in degree 2q."""
    if cutoff % 2:
        raise ValueError(f"cutoff must be even, got {cutoff}")
    E = as_op(E)
    _check_idempotent(E)
    n = E.shape[0]
    comps = {0: Chain.build(0, n, [(1.0, [E])])}
    shifted = E - 0.5 * _eye(n)
    for q in range(1, cutoff // 2 + 1):
        coeff = (-1) ** q * math.factorial(2 * q) / math.factorial(q)
        comps[2 * q] = Chain.build(2 * q, n, [(coeff, [shifted] + [E] * (2 * q))])
    return MixedChain("even", cutoff, n, {k: c for k, c in comps.items() if not c.is_zero()})


def ch_invertible(U, cutoff: int) -> MixedChain:
    """Odd Chern character: (-1)^q q! (U^{-1} ⊗ U)^{⊗(q+1)} in degree 2q+1."""
    if cutoff % 2 == 0:
        raise ValueError(f"cutoff must be odd, got {cutoff}")
    U = as_op(U)
    Ui = _inverse(U)
    n = U.shape[0]
    comps = {}
    for q in range((cutoff - 1) // 2 + 1):
        c = Chain.build(2 * q + 1, n, [((-1) ** q * math.factorial(q), [Ui, U] * (q + 1))])
        if not c.is_zero():
            comps[2 * q + 1] = c
    return MixedChain("odd", cutoff, n, comps)


def slant_idempotent(E, Edot, cutoff: int) -> MixedChain:
    """Insertion of (2E - 1)Ė into ch E; odd chain up to ``cutoff``."""
    if cutoff % 2 == 0:
        raise ValueError(f"slant of an idempotent path is odd, cutoff {cutoff}")
    E, Edot = as_op(E), as_op(Edot)
    if E.shape != Edot.shape:
        raise ValueError("E and Edot differ in shape")
    X = (2 * E - _eye(E.shape[0])) @ Edot
    ch = ch_idempotent(E, cutoff - 1)
    comps = {}
    for k, c in ch.components.items():
        s = insert(X, c)
        if not s.is_zero():
            comps[k + 1] = s
    return MixedChain("odd", cutoff, E.shape[0], comps)


def slant_invertible(U, Udot, cutoff: int) -> MixedChain:
    """Even slant chain of an invertible path up to ``cutoff``."""
    if cutoff % 2:
        raise ValueError(f"slant of an invertible path is even, cutoff {cutoff}")
    U, Udot = as_op(U), as_op(Udot)
    if U.shape != Udot.shape:
        raise ValueError("U and Udot differ in shape")
    Ui = _inverse(U)
    n = U.shape[0]
    Y = Ui @ Udot
    comps = {0: Chain.build(0, n, [(1.0, [Y])])}
    for q in range((cutoff - 2) // 2 + 1):
        coeff = (-1) ** (q + 1) * math.factorial(q)
        terms = [(coeff, [Ui, U] * (j + 1) + [Y] + [Ui, U] * (q - j)) for j in range(q + 1)]
        comps[2 * q + 2] = Chain.build(2 * q + 2, n, terms)
    return MixedChain("even", cutoff, n, {k: c for k, c in comps.items() if not c.is_zero()})


@dataclass(frozen=True)
class PathSpec:
    t0: float
    t1: float
    nodes: np.ndarray
    weights: np.ndarray
    evaluator: Callable
    kind: str = "idempotent"

    @classmethod
    def gauss(cls, t0, t1, evaluator, kind="idempotent", n=DEFAULT_NODES) -> "PathSpec":
        x, w = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (t1 - t0)
        return cls(t0, t1, t0 + half * (x + 1), half * w, evaluator, kind)

    def refined(self) -> "PathSpec":
        return PathSpec.gauss(self.t0, self.t1, self.evaluator, self.kind, 2 * len(self.nodes))

    def start(self):
        return self.evaluator(self.t0)[0]

    def end(self):
        return self.evaluator(self.t1)[0]


def transgress(path: PathSpec, kind: str | None = None, cutoff: int = 1,
               tol: float | None = None, max_doublings: int = 4) -> MixedChain:
    """Gauss–Legendre integral of the slant chain along ``path``.

    With ``tol`` set the node count is doubled until two successive rules
    differ by at most ``tol``.
    """
    kind = kind or path.kind
    slant = {"idempotent": slant_idempotent, "invertible": slant_invertible}[kind]
    result = _integrate(path, slant, cutoff)
    if tol is None:
        return result
    for _ in range(max_doublings):
        path = path.refined()
        finer = _integrate(path, slant, cutoff)
        if (finer - result).norm() <= tol:
            return finer
        result = finer
    return result


def _integrate(path, slant, cutoff):
    total = None
    for t, w in zip(path.nodes, path.weights):
        point, velocity = path.evaluator(t)
        s = slant(point, velocity, cutoff) * w
        total = s if total is None else total + s
    return total


@dataclass(frozen=True, eq=False)
class LiftData:
    D: np.ndarray
    Q: np.ndarray
    S0: np.ndarray
    S1: np.ndarray
    V: np.ndarray
    Vinv: np.ndarray
    EV: np.ndarray

    @property
    def e(self) -> np.ndarray:
        return _e_block(self.D.shape[0])

    def check(self, tol: float = 1e-10) -> dict:
        n = self.D.shape[0]
        I2 = _eye(2 * n)
        S0, S1, Q, D = self.S0, self.S1, self.Q, self.D
        block = np.block([[S0 @ S0, S0 @ (_eye(n) + S0) @ Q], [S1 @ D, _eye(n) - S1 @ S1]])
        errs = {
            "V Vinv": np.linalg.norm(self.V @ self.Vinv - I2),
            "Vinv V": np.linalg.norm(self.Vinv @ self.V - I2),
            "EV^2 - EV": np.linalg.norm(self.EV @ self.EV - self.EV),
            "EV block": np.linalg.norm(self.EV - block),
        }
        scale = max(1.0, np.linalg.norm(self.V), np.linalg.norm(self.Vinv)) ** 2
        bad = {k: v for k, v in errs.items() if v > tol * scale}
        if bad:
            raise ValueError(f"lift invariants violated: {bad}")
        return errs


def _e_block(n: int) -> np.ndarray:
    e = np.zeros((2 * n, 2 * n), dtype=complex)
    e[:n, :n] = _eye(n)
    return e


def lift_symbol(D, Q, S0=None, S1=None) -> LiftData:
    """Invertible lift V of the symbol of D with parametrix Q, and E(V) = V e V^{-1}.

    ``S0``/``S1`` may be supplied when they are known more accurately than
    I - QD and I - DQ (the heat construction).
    """
    D, Q = as_op(D), as_op(Q)
    if D.shape != Q.shape:
        raise ValueError(f"D and Q differ in shape: {D.shape} vs {Q.shape}")
    n = D.shape[0]
    I = _eye(n)
    S0 = I - Q @ D if S0 is None else as_op(S0)
    S1 = I - D @ Q if S1 is None else as_op(S1)
    V = np.block([[S0, -(I + S0) @ Q], [D, S1]])
    Vinv = np.block([[S0, (I + S0) @ Q], [-D, S1]])
    EV = V @ _e_block(n) @ Vinv
    lift = LiftData(D, Q, S0, S1, V, Vinv, EV)
    lift.check()
    return lift


def idempotent_path(V, Vinv) -> PathSpec:
    """Rotation path from diag(V e V^{-1}, 0) at t = 0 to diag(0, e) at t = π/2."""
    V, Vinv = as_op(V), as_op(Vinv)
    m = V.shape[0]
    err = np.linalg.norm(V @ Vinv - _eye(m))
    if err > 1e-10 * max(1.0, np.linalg.norm(V) * np.linalg.norm(Vinv)):
        raise ValueError(f"V and Vinv are not inverse: |V Vinv - I| = {err:.3e}")
    e = _e_block(m // 2)
    a = V @ e @ Vinv
    b = V @ e
    c = e @ Vinv

    def evaluate(t):
        s, co = math.sin(t), math.cos(t)
        E = np.block([[a * co * co, b * s * co], [c * s * co, e * s * s]])
        dE = np.block([[-a * 2 * s * co, b * (co * co - s * s)],
                       [c * (co * co - s * s), e * 2 * s * co]])
        return E, dE

    return PathSpec.gauss(0.0, math.pi / 2, evaluate, "idempotent")


def invertible_lift(u):
    """The rotation lift v = [[0, -u^{-1}], [u, 0]] of an invertible u and its inverse."""
    u = as_op(u)
    ui = _inverse(u)
    z = np.zeros_like(u)
    return np.block([[z, -ui], [u, z]]), np.block([[z, ui], [-u, z]])


def exponential_path(P) -> PathSpec:
    """U(t) = exp(2πi t P) on [0, 1]."""
    P = as_op(P)
    A = 2j * math.pi * P

    def evaluate(t):
        U = scipy.linalg.expm(t * A)
        return U, A @ U

    return PathSpec.gauss(0.0, 1.0, evaluate, "invertible")


def beta_factor(q: int) -> float:
    return 0.5 * math.factorial(q) ** 2 / math.factorial(2 * q + 1)


def beta_factor_quadrature(q: int, n: int = DEFAULT_NODES) -> float:
    """Gauss–Legendre value of the integral of sin^{2q+1} cos^{2q+1} over [0, π/2]."""
    x, w = np.polynomial.legendre.leggauss(n)
    t = math.pi / 4 * (x + 1)
    return float(math.pi / 4 * np.sum(w * (np.sin(t) * np.cos(t)) ** (2 * q + 1)))


def chr_odd(D, Q, cutoff: int = 2) -> ConeCocycle:
    """Relative Chern character (ch E(V) - ch e, Tch(E, Ė)) of a symbol with parametrix.

    Both parts live in the 4×4 block amplification where the rotation path runs;
    the relative part is ch diag(E(V), 0) - ch diag(0, e).
    """
    lift = lift_symbol(D, Q)
    return chr_odd_from_lift(lift, cutoff)


def chr_odd_from_lift(lift: LiftData, cutoff: int = 2) -> ConeCocycle:
    path = idempotent_path(lift.V, lift.Vinv)
    relative = ch_idempotent(path.start(), cutoff) - ch_idempotent(path.end(), cutoff)
    absolute = transgress(path, "idempotent", cutoff + 1)
    return ConeCocycle(relative, absolute)


def chr_even(P, cutoff: int = 1) -> ConeCocycle:
    """(1/2πi)(-ch U(1), Tch(U, U̇)) for U(t) = exp(2πi t P)."""
    path = exponential_path(P)
    scale = 1 / (2j * math.pi)
    relative = ch_invertible(path.end(), cutoff) * (-scale)
    absolute = transgress(path, "invertible", cutoff + 1) * scale
    return ConeCocycle(relative, absolute)


def suspension_loop(F):
    """Evaluator of the idempotent loop E_θ, θ in [0, 2π], built from a selfadjoint F.

    Φ = cos θ + i sin θ F on [0, π] and e^{iθ} on [π, 2π], Ψ = Φ*, S = 1 - ΦΨ.
    E_θ = 1 - V_θ e V_θ^{-1} equals diag(1, 0) wherever S = 0.
    """
    F = as_op(F)
    n = F.shape[0]
    I = _eye(n)

    def pieces(theta):
        if theta <= math.pi:
            phi = math.cos(theta) * I + 1j * math.sin(theta) * F
            dphi = -math.sin(theta) * I + 1j * math.cos(theta) * F
        else:
            phi = np.exp(1j * theta) * I
            dphi = 1j * phi
        return phi, dphi

    def evaluate(theta):
        phi, dphi = pieces(theta)
        psi, dpsi = phi.conj().T, dphi.conj().T
        S = I - phi @ psi
        dS = -(dphi @ psi + phi @ dpsi)
        EV = np.block([[S @ S, S @ (I + S) @ psi], [S @ phi, I - S @ S]])
        dSS = dS @ S + S @ dS
        dEV = np.block([[dSS, dS @ (I + S) @ psi + S @ dS @ psi + S @ (I + S) @ dpsi],
                        [dS @ phi + S @ dphi, -dSS]])
        # complement of V e V^{-1}, so that the loop starts and ends at diag(1, 0)
        return np.eye(2 * n) - EV, -dEV

    return evaluate


def suspended_chern(F, cutoff: int = 1, nodes: int = DEFAULT_NODES) -> MixedChain:
    """Integral of the slant chain around the θ-loop, each smooth piece quadratured separately."""
    F = as_op(F)
    err = np.linalg.norm(F - F.conj().T)
    if err > 1e-10 * max(1.0, np.linalg.norm(F)):
        raise ValueError(f"F is not selfadjoint: |F - F*| = {err:.3e}")
    evaluate = suspension_loop(F)
    first = PathSpec.gauss(0.0, math.pi, evaluate, "idempotent", nodes)
    second = PathSpec.gauss(math.pi, 2 * math.pi, evaluate, "idempotent", nodes)
    return transgress(first, cutoff=cutoff) + transgress(second, cutoff=cutoff)


def circle_winding_pairing(c: Chain) -> complex:
    """The cyclic 1-cocycle (1/2πi)∫ a0 da1 on a degree-1 chain of diagonal factors.

    The factors are read as functions sampled at the equally spaced points of the
    circle; da1 is the spectral derivative, exact for band-limited samples.
    """
    if c.degree != 1:
        raise ValueError(f"the winding cocycle has degree 1, chain has degree {c.degree}")
    n = c.dim
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0
    total = 0j
    for coeff, (a0, a1) in c.terms:
        off = np.linalg.norm(a0 - np.diag(np.diag(a0))) + np.linalg.norm(a1 - np.diag(np.diag(a1)))
        if off > 1e-12:
            raise ValueError("winding pairing needs diagonal (multiplication) factors")
        f0, f1 = np.diag(a0), np.diag(a1)
        df1 = np.fft.ifft(1j * k * np.fft.fft(f1))
        total += coeff * (2 * math.pi / n) * np.sum(f0 * df1) / (2j * math.pi)
    return total


def circle_unitary(samples: int = 64) -> np.ndarray:
    """The coordinate function z as a diagonal matrix of equally spaced samples."""
    theta = 2 * math.pi * np.arange(samples) / samples
    return np.diag(np.exp(1j * theta))
