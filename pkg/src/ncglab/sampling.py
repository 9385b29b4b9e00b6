"""Seeded random objects for property checks and experiment suites."""

from __future__ import annotations

import numpy as np

from .aspanier import ASCochain, FunctionRep, antisymmetrize
from .cyclic import Chain


def complex_normal(rng, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_invertible(rng, n: int) -> np.ndarray:
    # shifted away from singularity so the condition number stays moderate
    return complex_normal(rng, (n, n)) + 2 * np.eye(n)


def random_idempotent(rng, n: int, rank: int | None = None) -> np.ndarray:
    """Oblique idempotent S diag(1..1, 0..0) S^{-1} with a well-conditioned S."""
    if rank is None:
        rank = int(rng.integers(0, n + 1))
    S = random_invertible(rng, n)
    d = np.diag([1.0] * rank + [0.0] * (n - rank)).astype(complex)
    return S @ d @ np.linalg.inv(S)


def random_chain(rng, dim: int, degree: int, terms: int = 3) -> Chain:
    return Chain.build(degree, dim, [(complex_normal(rng, ()), [complex_normal(rng, (dim, dim))
                                                                for _ in range(degree + 1)])
                                     for _ in range(terms)])


def random_trig_poly(rng, bandwidth: int, real: bool = False) -> FunctionRep:
    ks = range(-bandwidth, bandwidth + 1)
    if not real:
        return FunctionRep.circle({k: complex_normal(rng, ()) for k in ks})
    coeffs = {0: rng.standard_normal()}
    for k in range(1, bandwidth + 1):
        c = complex_normal(rng, ())
        coeffs[k] = c
        coeffs[-k] = np.conj(c)
    return FunctionRep.circle(coeffs)


def localized_winding_cochain(order: int = 4) -> ASCochain:
    """Antisymmetrized Σ_k c_k z̄^k ⊗ z^k with ∫λ = 2πi and the moments Σ c_k k^{2j+1}, 1 <= j < order, zero.

    As a kernel c(θ1 - θ0) = Σ c_k i sin(k(θ1 - θ0)) it agrees with i(θ1 - θ0) to
    order 2·order at the diagonal, which suppresses the contribution of the
    smoothed phase far from the diagonal.
    """
    k = np.arange(1, order + 1)
    A = np.array([k.astype(float) ** (2 * j + 1) for j in range(order)])
    b = np.zeros(order)
    b[0] = 1.0
    c = np.linalg.solve(A, b)
    raw = [(ck, (FunctionRep.circle({-int(kk): 1}), FunctionRep.circle({int(kk): 1})))
           for kk, ck in zip(k, c)]
    return antisymmetrize(raw)
