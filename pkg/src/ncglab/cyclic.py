"""Normalized cyclic (b, B)-bicomplex over finite matrix algebras.

A chain of degree q is a finite sum of elementary tensors a0 ⊗ a1 ⊗ ... ⊗ aq
of square complex matrices.  The tail slots live in A/C, so a term whose
factor at position >= 1 is a multiple of the identity is dropped.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

SCALAR_TOL = 1e-13
DENSE_LIMIT = 1 << 22


def as_op(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"operator must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("operator has non-finite entries")
    return a


def scalar_part(a: np.ndarray) -> complex:
    return complex(np.trace(a)) / a.shape[0]


def is_scalar(a: np.ndarray, tol: float = SCALAR_TOL) -> bool:
    """True when ``a`` is a multiple of the identity up to ``tol`` (relative to max(1, |a|))."""
    r = a.copy()
    r[np.diag_indices_from(r)] -= scalar_part(a)
    return np.linalg.norm(r) <= tol * max(1.0, np.linalg.norm(a))


def _identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


@dataclass(frozen=True, eq=False)
class Chain:
    degree: int
    dim: int
    terms: tuple = ()

    @classmethod
    def build(cls, degree: int, dim: int, terms, normalize: bool = True) -> "Chain":
        out = []
        for coeff, factors in terms:
            coeff = complex(coeff)
            if coeff == 0:
                continue
            factors = tuple(f if isinstance(f, np.ndarray) and f.dtype == complex else as_op(f)
                            for f in factors)
            if len(factors) != degree + 1:
                raise ValueError(f"term has {len(factors)} factors, degree {degree} needs {degree + 1}")
            for f in factors:
                if f.shape != (dim, dim):
                    raise ValueError(f"factor of shape {f.shape} in a chain of dim {dim}")
            out.append((coeff, factors))
        c = cls(degree, dim, tuple(out))
        return c.normalized() if normalize else c

    @classmethod
    def elementary(cls, factors, coeff: complex = 1.0) -> "Chain":
        factors = [as_op(f) for f in factors]
        return cls.build(len(factors) - 1, factors[0].shape[0], [(coeff, factors)])

    @classmethod
    def zero(cls, degree: int, dim: int) -> "Chain":
        return cls(degree, dim, ())

    def normalized(self) -> "Chain":
        """Drop terms carrying a scalar in a tail slot."""
        seen: dict[int, bool] = {}
        keep = []
        for coeff, factors in self.terms:
            scalar_tail = False
            for f in factors[1:]:
                key = id(f)
                if key not in seen:
                    seen[key] = is_scalar(f)
                if seen[key]:
                    scalar_tail = True
                    break
            if not scalar_tail:
                keep.append((coeff, factors))
        return Chain(self.degree, self.dim, tuple(keep))

    def is_zero(self) -> bool:
        return len(self.terms) == 0

    def _check(self, other: "Chain"):
        if self.degree != other.degree or self.dim != other.dim:
            raise ValueError(
                f"chains differ in degree/dim: ({self.degree}, {self.dim}) vs ({other.degree}, {other.dim})"
            )

    def __add__(self, other: "Chain") -> "Chain":
        self._check(other)
        return Chain(self.degree, self.dim, self.terms + other.terms)

    def __neg__(self) -> "Chain":
        return self * -1.0

    def __sub__(self, other: "Chain") -> "Chain":
        return self + (-other)

    def __mul__(self, s) -> "Chain":
        s = complex(s)
        if s == 0:
            return Chain.zero(self.degree, self.dim)
        return Chain(self.degree, self.dim, tuple((s * c, f) for c, f in self.terms))

    __rmul__ = __mul__

    def dense(self) -> np.ndarray:
        """Canonical dense tensor, tail slots projected to their traceless part."""
        d, q = self.dim, self.degree
        size = d ** (2 * (q + 1))
        if size > DENSE_LIMIT:
            raise MemoryError(f"dense tensor of {size} entries exceeds limit")
        if not self.terms:
            return np.zeros(size, dtype=complex).reshape((d, d) * (q + 1))
        slots = []
        for j in range(q + 1):
            mats = np.stack([f[j] for _, f in self.terms])
            if j > 0:
                tr = np.trace(mats, axis1=1, axis2=2) / d
                mats = mats - tr[:, None, None] * np.eye(d)
            slots.append(mats.reshape(len(self.terms), d * d))
        coeffs = np.array([c for c, _ in self.terms])
        total = np.zeros(size, dtype=complex)
        chunk = max(1, DENSE_LIMIT // max(1, size // (d * d)) // 4)
        for start in range(0, len(self.terms), chunk):
            sl = slice(start, start + chunk)
            kr = coeffs[sl, None] * slots[0][sl]
            for s in slots[1:]:
                kr = (kr[:, :, None] * s[sl][:, None, :]).reshape(kr.shape[0], -1)
            total += kr.sum(axis=0)
        return total.reshape((d, d) * (q + 1))

    def norm(self, probes: int = 24, seed: int = 0) -> float:
        """Frobenius norm in A ⊗ (A/C)^q; exact when small, otherwise a seeded sketch."""
        if not self.terms:
            return 0.0
        d, q = self.dim, self.degree
        if d ** (2 * (q + 1)) <= DENSE_LIMIT:
            return float(np.linalg.norm(self.dense()))
        rng = np.random.default_rng(seed)
        coeffs = np.array([c for c, _ in self.terms])
        acc = 0.0
        for _ in range(probes):
            val = coeffs.copy()
            for j in range(q + 1):
                r = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
                if j > 0:
                    r -= np.trace(r) / d * np.eye(d)
                val = val * np.array([np.vdot(r, f[j]) for _, f in self.terms])
            acc += abs(val.sum()) ** 2
        return math.sqrt(acc / probes)


def _parity(degree: int) -> str:
    return "even" if degree % 2 == 0 else "odd"


@dataclass(frozen=True, eq=False)
class MixedChain:
    parity: str
    cutoff: int
    dim: int
    components: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise ValueError(f"parity must be even or odd, got {self.parity!r}")
        for k, c in self.components.items():
            if c.degree != k:
                raise ValueError(f"component keyed {k} has degree {c.degree}")
            if _parity(k) != self.parity:
                raise ValueError(f"degree {k} does not have parity {self.parity}")
            if k > self.cutoff:
                raise ValueError(f"degree {k} exceeds cutoff {self.cutoff}")

    @classmethod
    def from_chains(cls, chains, cutoff: int | None = None, dim: int | None = None,
                    parity: str | None = None) -> "MixedChain":
        chains = [c for c in chains]
        if not chains and (dim is None or parity is None or cutoff is None):
            raise ValueError("empty mixed chain needs parity, cutoff and dim")
        comps: dict[int, Chain] = {}
        for c in chains:
            comps[c.degree] = comps[c.degree] + c if c.degree in comps else c
        if parity is None:
            parity = _parity(chains[0].degree)
        if dim is None:
            dim = chains[0].dim
        if cutoff is None:
            cutoff = max(comps)
        return cls(parity, cutoff, dim, dict(sorted(comps.items())))

    def degrees(self) -> list[int]:
        start = 0 if self.parity == "even" else 1
        return list(range(start, self.cutoff + 1, 2))

    def __getitem__(self, k: int) -> Chain:
        return self.components.get(k, Chain.zero(k, self.dim))

    def _combine(self, other: "MixedChain", sign: float) -> "MixedChain":
        if self.parity != other.parity or self.dim != other.dim:
            raise ValueError("mixed chains differ in parity or dim")
        cutoff = min(self.cutoff, other.cutoff)
        comps = {}
        for k in range(0 if self.parity == "even" else 1, cutoff + 1, 2):
            c = self[k] + other[k] * sign
            if not c.is_zero():
                comps[k] = c
        return MixedChain(self.parity, cutoff, self.dim, comps)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, s):
        return MixedChain(self.parity, self.cutoff, self.dim,
                          {k: c * s for k, c in self.components.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def truncate(self, cutoff: int) -> "MixedChain":
        return MixedChain(self.parity, cutoff, self.dim,
                          {k: c for k, c in self.components.items() if k <= cutoff})

    def norms(self) -> dict[int, float]:
        return {k: self[k].norm() for k in self.degrees()}

    def norm(self) -> float:
        return max(self.norms().values(), default=0.0)


def chain_b(c: Chain) -> Chain:
    """Hochschild boundary, degree q+1 -> q."""
    if c.degree == 0:
        raise ValueError("no boundary in degree 0")
    n = c.degree
    out = []
    for coeff, a in c.terms:
        for j in range(n):
            out.append(((-1) ** j * coeff, a[:j] + (a[j] @ a[j + 1],) + a[j + 2:]))
        out.append(((-1) ** n * coeff, (a[n] @ a[0],) + a[1:n]))
    return Chain.build(n - 1, c.dim, out)


def chain_B(c: Chain) -> Chain:
    """Connes boundary, degree n -> n+1, with the unit in the head slot."""
    n = c.degree
    one = _identity(c.dim)
    out = []
    for coeff, a in c.terms:
        for j in range(n + 1):
            out.append(((-1) ** (n * j) * coeff, (one,) + a[j:] + a[:j]))
    return Chain.build(n + 1, c.dim, out)


def boundary(m: MixedChain) -> MixedChain:
    """(b + B) on a truncated mixed chain; exact in degrees below the old cutoff."""
    parity = "odd" if m.parity == "even" else "even"
    cutoff = m.cutoff - 1
    comps = {}
    start = 0 if parity == "even" else 1
    for k in range(start, cutoff + 1, 2):
        c = Chain.zero(k, m.dim)
        if k + 1 in m.components:
            c = c + chain_b(m.components[k + 1])
        if k - 1 in m.components:
            c = c + chain_B(m.components[k - 1])
        if not c.is_zero():
            comps[k] = c
    return MixedChain(parity, max(cutoff, start), m.dim, comps)


def insert(x: np.ndarray, c: Chain) -> Chain:
    """Insertion of ``x`` after each slot with alternating sign, degree q -> q+1."""
    out = []
    for coeff, a in c.terms:
        for j in range(c.degree + 1):
            out.append(((-1) ** j * coeff, a[:j + 1] + (x,) + a[j + 1:]))
    return Chain.build(c.degree + 1, c.dim, out)


def embed_block(c: Chain, k: int, i: int) -> Chain:
    """Place every factor in diagonal block ``i`` of a k×k block matrix."""
    d = c.dim
    terms = []
    for coeff, a in c.terms:
        fs = []
        for f in a:
            big = np.zeros((k * d, k * d), dtype=complex)
            big[i * d:(i + 1) * d, i * d:(i + 1) * d] = f
            fs.append(big)
        terms.append((coeff, fs))
    return Chain.build(c.degree, k * d, terms)


def tr_tensor(c: Chain, k: int) -> Chain:
    """Generalized trace M_k(A)^{⊗(q+1)} -> A^{⊗(q+1)} summing block entries around a cycle."""
    if c.dim % k:
        raise ValueError(f"dim {c.dim} is not a multiple of {k}")
    n = c.dim // k
    q = c.degree
    out = []
    for coeff, a in c.terms:
        blocks = [f.reshape(k, n, k, n).transpose(0, 2, 1, 3) for f in a]
        nonzero = [np.abs(b).reshape(k, k, -1).max(axis=2) > 0 for b in blocks]
        for idx in itertools.product(range(k), repeat=q + 1):
            if all(nonzero[j][idx[j], idx[(j + 1) % (q + 1)]] for j in range(q + 1)):
                out.append((coeff, [blocks[j][idx[j], idx[(j + 1) % (q + 1)]].copy()
                                    for j in range(q + 1)]))
    return Chain.build(q, n, out)


def tr_tensor_mixed(m: MixedChain, k: int) -> MixedChain:
    return MixedChain(m.parity, m.cutoff, m.dim // k,
                      {d: tr_tensor(c, k) for d, c in m.components.items()})


@dataclass(frozen=True, eq=False)
class ConeCocycle:
    relative: MixedChain
    absolute: MixedChain

    def residual(self) -> float:
        """max of |(b+B) relative| and |relative + (b+B) absolute| over exact degrees."""
        r1 = boundary(self.relative)
        r1 = r1.truncate(min(r1.cutoff, self.absolute.cutoff - 1))
        r2 = (self.relative + boundary(self.absolute))
        return max(r1.norm(), r2.norm())


def _cochain_trie(phi) -> dict:
    # slot functions nested by position, so shared prefixes are multiplied once
    root: dict = {}
    for coeff, fs in phi.terms:
        node = root
        for f in fs[:-1]:
            node = node.setdefault(f, {})
        node[fs[-1]] = node.get(fs[-1], 0) + coeff
    return root


def _walk(node, X, factors, j, model, k):
    # X is A0 f0 ... A_{j-1} f_{j-1}, or None at the start
    total = 0j
    A = factors[j]
    if j == len(factors) - 1:
        for f, coeff in node.items():
            total += coeff * (model.trace_mul(A, f, k) if X is None
                              else model.trace_prod_mul(X, A, f, k))
        return total
    Y = A if X is None else X @ A
    for f, child in node.items():
        total += _walk(child, Y if f.is_unit() else model.mul_right(Y, f, k), factors, j + 1, model, k)
    return total


def trace_pair(phi, c: Chain, model) -> complex:
    """Σ over chain and cochain terms of Tr_int(A0 f0 A1 f1 ... Ak fk)."""
    if phi.degree != c.degree:
        raise ValueError(f"degree mismatch: cochain {phi.degree}, chain {c.degree}")
    if c.dim % model.dim:
        raise ValueError(f"chain dim {c.dim} is not a multiple of model dim {model.dim}")
    k = c.dim // model.dim
    model.check_bandwidth(phi)
    trie = _cochain_trie(phi)
    total = 0j
    for coeff, a in c.terms:
        total += coeff * _walk(trie, None, a, 0, model, k)
    return total


def pair_mixed(phi_family, m: MixedChain, model) -> complex:
    total = 0j
    for phi in phi_family:
        if _parity(phi.degree) != m.parity:
            raise ValueError(f"cochain degree {phi.degree} does not match {m.parity} chain")
        if phi.degree in m.components:
            total += trace_pair(phi, m.components[phi.degree], model)
    return total
