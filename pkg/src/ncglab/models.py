"""Truncated Hardy-space models on S^1 and S^3 and the interior-trace policy.

The circle model comes in two realizations.  ``hardy`` keeps the modes
0..N-1 and represents a function by its Toeplitz compression.  ``laurent``
keeps the modes -N..N-1 of L^2(S^1); functions act by (commuting) Laurent
matrices and the Hardy projection is the diagonal projection onto modes >= 0.
In both, the trace is taken over an interior window that stays ``pad`` modes
away from every truncation edge.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.linalg

from .aspanier import FunctionRep
from .chern import LiftData, lift_symbol

log = logging.getLogger(__name__)

KERNEL_TOL = 1e-10
GAP_TOL = 1e-8


def _as_fraction(kappa) -> Fraction:
    if isinstance(kappa, (list, tuple)):
        return Fraction(int(kappa[0]), int(kappa[1]))
    return Fraction(kappa)


@dataclass(frozen=True)
class CircleModel:
    N: int
    pad: int
    kappa: Fraction = Fraction(1)
    space: str = "hardy"
    manifold: str = "S1"

    def __post_init__(self):
        object.__setattr__(self, "kappa", _as_fraction(self.kappa))
        if self.space not in ("hardy", "laurent"):
            raise ValueError(f"unknown circle realization {self.space!r}")
        if self.N - self.pad < 1 or self.pad < 0:
            raise ValueError(f"need 0 <= pad < N, got N={self.N}, pad={self.pad}")

    @property
    def dim(self) -> int:
        return self.N if self.space == "hardy" else 2 * self.N

    @property
    def modes(self) -> np.ndarray:
        return np.arange(self.N) if self.space == "hardy" else np.arange(-self.N, self.N)

    @property
    def window(self) -> np.ndarray:
        """Boolean mask of the modes counted by the interior trace."""
        m = self.modes
        if self.space == "hardy":
            return m < self.N - self.pad
        return (m >= -self.N + self.pad) & (m < self.N - self.pad)

    def hardy_projection(self) -> np.ndarray:
        return np.diag((self.modes >= 0).astype(complex))

    def _check_function(self, f: FunctionRep):
        if f.model_id != "S1":
            raise ValueError(f"function on {f.model_id} used with the circle model")
        if f.bandwidth > self.N:
            raise ValueError(f"bandwidth {f.bandwidth} exceeds truncation N={self.N}")

    def multiplication(self, f: FunctionRep) -> np.ndarray:
        """Truncated matrix (f̂(m - n)) of multiplication by f on the kept modes."""
        self._check_function(f)
        d = self.dim
        M = np.zeros((d, d), dtype=complex)
        for k, c in f.coeffs:
            M += c * np.eye(d, k=-k)
        return M

    def mul_right(self, A: np.ndarray, f: FunctionRep, k: int = 1) -> np.ndarray:
        """A @ kron(I_k, M_f) via column shifts."""
        self._check_function(f)
        d = self.dim
        B = A.reshape(A.shape[0], k, d)
        out = np.zeros(B.shape, dtype=complex)
        for s, c in f.coeffs:
            # (A M)[:, n] += f̂(s) A[:, n + s]
            if s >= 0:
                out[:, :, :d - s] += c * B[:, :, s:]
            else:
                out[:, :, -s:] += c * B[:, :, :d + s]
        return out.reshape(A.shape)

    def _diagonal_pairs(self, f: FunctionRep, k: int):
        # (rows, cols, coefficient) with (A M_f)_{rr} = Σ f̂(s) A[r, r + s] over window rows
        d = self.dim
        idx = np.arange(d)
        offsets = np.arange(k) * d
        for s, c in f.coeffs:
            ok = self.window & (idx + s >= 0) & (idx + s < d)
            rows = (offsets[:, None] + idx[ok][None, :]).ravel()
            yield rows, rows + s, c

    def trace_mul(self, A: np.ndarray, f: FunctionRep, k: int = 1) -> complex:
        """Tr_int(A kron(I_k, M_f)) from the diagonals of A alone."""
        self._check_function(f)
        return complex(sum(c * np.sum(A[rows, cols]) for rows, cols, c in self._diagonal_pairs(f, k)))

    def trace_prod_mul(self, X: np.ndarray, A: np.ndarray, f: FunctionRep, k: int = 1) -> complex:
        """Tr_int(X A kron(I_k, M_f)) without forming X A."""
        self._check_function(f)
        return complex(sum(c * np.sum(X[rows, :] * A[:, cols].T)
                           for rows, cols, c in self._diagonal_pairs(f, k)))

    def interior_trace(self, A: np.ndarray) -> complex:
        """Sum of window diagonal entries over every diagonal block of a block amplification."""
        A = np.asarray(A)
        if A.shape[0] % self.dim:
            raise ValueError(f"operator dim {A.shape[0]} is not a multiple of model dim {self.dim}")
        mask = np.tile(self.window, A.shape[0] // self.dim)
        return complex(np.sum(np.diagonal(A)[mask]))

    def check_bandwidth(self, phi):
        if phi.model_id != "S1":
            raise ValueError(f"cochain on {phi.model_id} paired with the circle model")
        if self.pad < 2 * phi.bandwidth:
            raise ValueError(f"pad {self.pad} is below twice the cochain bandwidth {phi.bandwidth}")

    def descriptor(self) -> dict:
        return {"manifold": "S1", "N": self.N, "pad": self.pad,
                "kappa": [self.kappa.numerator, self.kappa.denominator], "space": self.space}


@lru_cache(maxsize=None)
def _s3_basis(N: int):
    alphas = [(a1, d - a1) for d in range(N) for a1 in range(d, -1, -1)]
    return alphas, {a: i for i, a in enumerate(alphas)}


def s3_moment(alpha, beta) -> float:
    """Normalized surface integral over S^3 of z^alpha z̄^beta."""
    if tuple(alpha) != tuple(beta):
        return 0.0
    a1, a2 = alpha
    return math.factorial(a1) * math.factorial(a2) / math.factorial(a1 + a2 + 1)


def s3_monomial_gram(d: int):
    """Holomorphic monomials of degree <= d and their Gram matrix on H^2(S^3).

    Returns (basis, gram) where gram[i, j] = <z^{a_i}, z^{a_j}>, normalized so that <1, 1> = 1.
    """
    if d > 12:
        raise ValueError(f"degree cutoff {d} above the size guard 12")
    basis, _ = _s3_basis(d + 1)
    gram = np.array([[s3_moment(a, b) for b in basis] for a in basis])
    return basis, gram


@dataclass(frozen=True)
class SphereModel:
    N: int
    pad: int
    kappa: Fraction = Fraction(1)
    manifold: str = "S3"

    def __post_init__(self):
        object.__setattr__(self, "kappa", _as_fraction(self.kappa))
        if self.N - self.pad < 1 or self.pad < 0:
            raise ValueError(f"need 0 <= pad < N, got N={self.N}, pad={self.pad}")

    @property
    def basis(self):
        return _s3_basis(self.N)[0]

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def window(self) -> np.ndarray:
        return np.array([sum(a) < self.N - self.pad for a in self.basis])

    def hardy_projection(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def multiplication(self, f: FunctionRep) -> np.ndarray:
        """Toeplitz matrix of f in the orthonormal monomial basis of H^2(S^3)."""
        if f.model_id != "S3":
            raise ValueError(f"function on {f.model_id} used with the sphere model")
        if f.bandwidth > self.N:
            raise ValueError(f"bandwidth {f.bandwidth} exceeds truncation N={self.N}")
        alphas, index = _s3_basis(self.N)
        M = np.zeros((self.dim, self.dim), dtype=complex)
        for (g1, g2, d1, d2), c in f.coeffs:
            for j, (a1, a2) in enumerate(alphas):
                mu = (a1 + g1, a2 + g2)
                b = (mu[0] - d1, mu[1] - d2)
                if min(b) < 0 or b not in index:
                    continue
                # <z^mu z̄^delta, z^b> = |z^mu|^2
                M[index[b], j] += c * s3_moment(mu, mu) / math.sqrt(
                    s3_moment((a1, a2), (a1, a2)) * s3_moment(b, b))
        return M

    def mul_right(self, A, f, k: int = 1):
        M = self.multiplication(f)
        return A @ (np.kron(np.eye(k), M) if k > 1 else M)

    def trace_mul(self, A, f, k: int = 1) -> complex:
        return self.interior_trace(self.mul_right(A, f, k))

    def trace_prod_mul(self, X, A, f, k: int = 1) -> complex:
        return self.trace_mul(X @ A, f, k)

    def interior_trace(self, A) -> complex:
        A = np.asarray(A)
        if A.shape[0] % self.dim:
            raise ValueError(f"operator dim {A.shape[0]} is not a multiple of model dim {self.dim}")
        mask = np.tile(self.window, A.shape[0] // self.dim)
        return complex(np.sum(np.diagonal(A)[mask]))

    def check_bandwidth(self, phi):
        if phi.model_id != "S3":
            raise ValueError(f"cochain on {phi.model_id} paired with the sphere model")
        if self.pad < 2 * phi.bandwidth:
            raise ValueError(f"pad {self.pad} is below twice the cochain bandwidth {phi.bandwidth}")

    def descriptor(self) -> dict:
        return {"manifold": "S3", "N": self.N, "pad": self.pad,
                "kappa": [self.kappa.numerator, self.kappa.denominator]}


def make_model(desc: dict):
    manifold = desc.get("manifold")
    kappa = desc.get("kappa", [1, 1])
    if manifold == "S1":
        return CircleModel(int(desc["N"]), int(desc["pad"]), kappa, desc.get("space", "hardy"))
    if manifold == "S3":
        return SphereModel(int(desc["N"]), int(desc["pad"]), kappa)
    raise ValueError(f"unknown manifold {manifold!r}")


def toeplitz(f: FunctionRep, model) -> np.ndarray:
    """Compression P M_f P to the Hardy space."""
    M = model.multiplication(f)
    if getattr(model, "space", "hardy") == "hardy":
        return M
    P = model.hardy_projection()
    return P @ M @ P


def interior_trace(A, model) -> complex:
    return model.interior_trace(A)


def spectral_gap(D: np.ndarray) -> float:
    return float(np.min(np.abs(np.linalg.eigvalsh(D))))


def _check_selfadjoint(D, tol=1e-10):
    err = np.linalg.norm(D - D.conj().T)
    if err > tol * max(1.0, np.linalg.norm(D)):
        raise ValueError(f"operator is not selfadjoint: |D - D*| = {err:.3e}")


def selfadjoint_toeplitz(f: FunctionRep, model, shift: float = 0.0) -> np.ndarray:
    if not f.is_real():
        raise ValueError("symbol is not real-valued")
    D = toeplitz(f, model) + shift * np.eye(model.dim)
    D = 0.5 * (D + D.conj().T)
    gap = spectral_gap(D)
    if gap < GAP_TOL:
        raise ValueError(f"spectrally degenerate; adjust shift (gap {gap:.3e})")
    log.info("selfadjoint Toeplitz operator with spectral gap %.3e at 0", gap)
    return D


def dirac_operator(model: CircleModel, mass: float = 0.5) -> np.ndarray:
    """-i d/dθ + mass on the kept modes; its positive spectrum is the Hardy space for 0 < mass < 1."""
    return np.diag(model.modes + mass).astype(complex)


def positive_spectral_projection(D) -> np.ndarray:
    D = np.asarray(D, dtype=complex)
    _check_selfadjoint(D)
    w, v = np.linalg.eigh(D)
    if np.min(np.abs(w)) < GAP_TOL:
        raise ValueError(f"spectral gap at 0 below {GAP_TOL}: {np.min(np.abs(w)):.3e}")
    vp = v[:, w > 0]
    return vp @ vp.conj().T


def phase_operator(D) -> np.ndarray:
    """D|D|^{-1} from the polar decomposition D = F|D|."""
    D = np.asarray(D, dtype=complex)
    s = np.linalg.svd(D, compute_uv=False)
    if s[-1] < GAP_TOL * max(1.0, s[0]):
        raise ValueError(f"singular operator (smallest singular value {s[-1]:.3e})")
    F, _ = scipy.linalg.polar(D, side="right")
    return F


def smooth_sign(x, order: int = 2) -> np.ndarray:
    """Odd C^order step: -1 below -1, +1 above 1, a polynomial in between."""
    x = np.asarray(x, dtype=float)
    p = np.polynomial.Polynomial([1, 0, -1]) ** (order + 1)
    P = p.integ()
    scale = P(1.0)
    inner = P(np.clip(x, -1, 1)) / scale
    return np.where(np.abs(x) >= 1, np.sign(x), inner)


def localized_phase(D, width: float, order: int = 2) -> np.ndarray:
    """Smoothed phase χ(D/width) of a selfadjoint D; width 0 gives the exact phase."""
    D = np.asarray(D, dtype=complex)
    _check_selfadjoint(D)
    w, v = np.linalg.eigh(D)
    vals = np.sign(w) if width == 0 else smooth_sign(w / width, order)
    F = (v * vals) @ v.conj().T
    return 0.5 * (F + F.conj().T)


def heat_parametrix(D, t: float) -> LiftData:
    """Lift data of tD with the heat parametrix, from spectral calculus of D*D and DD*."""
    D = np.asarray(D, dtype=complex)
    if t <= 0:
        raise ValueError("t must be positive")
    n = D.shape[0]
    tD = t * D
    w0, v0 = np.linalg.eigh(tD.conj().T @ tD)
    w1, v1 = np.linalg.eigh(tD @ tD.conj().T)
    w0, w1 = np.clip(w0, 0, None), np.clip(w1, 0, None)
    y = w0 / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(y > 1e-12, -np.expm1(-y) / (2 * np.where(y > 1e-12, y, 1)), 0.5 - y / 4)
    Q = (v0 * g) @ v0.conj().T @ tD.conj().T
    S0 = (v0 * np.exp(-w0 / 2)) @ v0.conj().T
    S1 = (v1 * np.exp(-w1 / 2)) @ v1.conj().T
    I = np.eye(n)
    # the closed forms satisfy QD = I - S0 and DQ = I - S1 up to roundoff
    err = max(np.linalg.norm(Q @ tD - (I - S0)), np.linalg.norm(tD @ Q - (I - S1)))
    if err > 1e-8 * max(1.0, np.linalg.norm(tD)):
        raise ArithmeticError(f"heat parametrix identities fail by {err:.3e}")
    return lift_symbol(tD, Q, S0=S0, S1=S1)


def kernel_projection(D, tol: float = KERNEL_TOL) -> np.ndarray:
    D = np.asarray(D, dtype=complex)
    _, s, vh = np.linalg.svd(D)
    scale = max(1.0, s[0]) if s.size else 1.0
    null = vh[np.sum(s > tol * scale):].conj().T
    return null @ null.conj().T


def limit_idempotent(D) -> np.ndarray:
    """diag(I - H1, H0) with H0, H1 the projections on ker D and ker D*."""
    D = np.asarray(D, dtype=complex)
    n = D.shape[0]
    H0 = kernel_projection(D)
    H1 = kernel_projection(D.conj().T)
    E = np.zeros((2 * n, 2 * n), dtype=complex)
    E[:n, :n] = np.eye(n) - H1
    E[n:, n:] = H0
    return E
