"""Independent oracles shared by the tests."""

import numpy as np


def rand_op(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def traceless(rng, n):
    X = rand_op(rng, n)
    return X - np.trace(X) / n * np.eye(n)


def probes(rng, n, degree):
    # head slot arbitrary, tail slots traceless: such functionals see the normalized quotient
    return [rand_op(rng, n)] + [traceless(rng, n) for _ in range(degree)]


def evaluate_terms(terms, X):
    """Σ coeff Π_j tr(a_j X_j) for raw (coeff, factors) lists."""
    total = 0j
    for coeff, fs in terms:
        p = coeff
        for a, x in zip(fs, X):
            p *= np.trace(a @ x)
        total += p
    return total


def evaluate_chain(c, X):
    return evaluate_terms(c.terms, X)


def chain_distance(c1, c2, rng, samples=4):
    """Max over random probes of |<c1 - c2, X>|, relative to the probe sizes."""
    worst = 0.0
    for _ in range(samples):
        X = probes(rng, c1.dim, c1.degree)
        worst = max(worst, abs(evaluate_chain(c1, X) - evaluate_chain(c2, X)))
    return worst


def random_idempotent(rng, n, rank):
    S = rand_op(rng, n) + 2 * np.eye(n)
    return S @ np.diag([1.0] * rank + [0.0] * (n - rank)) @ np.linalg.inv(S)


def parametrix_pair(rng, n, noise=0.3):
    """An invertible D with a perturbed inverse Q, so that QD - 1 is small but nonzero."""
    D = rand_op(rng, n) + 2 * np.eye(n)
    return D, np.linalg.inv(D) + noise * rand_op(rng, n)
