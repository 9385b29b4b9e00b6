"""Decomposable antisymmetric Alexander–Spanier cochains on S^1 and S^3."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

MAX_SLOTS = 8


def _perm_sign(p) -> int:
    sign = 1
    p = list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


@dataclass(frozen=True)
class FunctionRep:
    """Trigonometric polynomial on S^1 (keys k: z^k) or polynomial in z, z̄ on S^3.

    S^3 keys are (a1, a2, b1, b2) for z1^a1 z2^a2 z̄1^b1 z̄2^b2.
    """

    model_id: str
    coeffs: tuple

    @classmethod
    def make(cls, model_id: str, coeffs: dict) -> "FunctionRep":
        if model_id not in ("S1", "S3"):
            raise ValueError(f"unknown model {model_id!r}")
        items = []
        for key, c in coeffs.items():
            c = complex(c)
            if c == 0:
                continue
            key = int(key) if model_id == "S1" else tuple(int(x) for x in key)
            if model_id == "S3" and (len(key) != 4 or min(key) < 0):
                raise ValueError(f"bad S3 monomial key {key}")
            items.append((key, c))
        return cls(model_id, tuple(sorted(items)))

    @classmethod
    def circle(cls, coeffs: dict) -> "FunctionRep":
        return cls.make("S1", coeffs)

    @classmethod
    def sphere(cls, coeffs: dict) -> "FunctionRep":
        return cls.make("S3", coeffs)

    @classmethod
    def unit(cls, model_id: str = "S1") -> "FunctionRep":
        return cls.make(model_id, {0: 1.0} if model_id == "S1" else {(0, 0, 0, 0): 1.0})

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    @property
    def bandwidth(self) -> int:
        if not self.coeffs:
            return 0
        if self.model_id == "S1":
            return max(abs(k) for k, _ in self.coeffs)
        return max(sum(k) for k, _ in self.coeffs)

    def is_real(self, tol: float = 1e-14) -> bool:
        if self.model_id != "S1":
            d = self.as_dict()
            return all(abs(c - np.conj(d.get((k[2], k[3], k[0], k[1]), 0))) <= tol for k, c in d.items())
        d = self.as_dict()
        return all(abs(c - np.conj(d.get(-k, 0))) <= tol for k, c in d.items())

    def is_unit(self) -> bool:
        one = 0 if self.model_id == "S1" else (0, 0, 0, 0)
        return self.coeffs == ((one, 1 + 0j),)

    def is_constant(self) -> bool:
        return all((k == 0 if self.model_id == "S1" else sum(k) == 0) for k, _ in self.coeffs)

    def __call__(self, x) -> np.ndarray:
        """Evaluate at angles (S^1) or at points of shape (..., 2) in C^2 (S^3)."""
        if self.model_id == "S1":
            x = np.asarray(x, dtype=float)
            out = np.zeros(x.shape, dtype=complex)
            for k, c in self.coeffs:
                out += c * np.exp(1j * k * x)
            return out
        x = np.asarray(x, dtype=complex)
        z1, z2 = x[..., 0], x[..., 1]
        out = np.zeros(z1.shape, dtype=complex)
        for (a1, a2, b1, b2), c in self.coeffs:
            out += c * z1 ** a1 * z2 ** a2 * np.conj(z1) ** b1 * np.conj(z2) ** b2
        return out

    def __mul__(self, other: "FunctionRep") -> "FunctionRep":
        if self.model_id != other.model_id:
            raise ValueError("functions on different models")
        out: dict = {}
        for k, a in self.coeffs:
            for l, b in other.coeffs:
                key = k + l if self.model_id == "S1" else tuple(x + y for x, y in zip(k, l))
                out[key] = out.get(key, 0) + a * b
        return FunctionRep.make(self.model_id, out)

    def to_json(self) -> dict:
        key = (lambda k: str(k)) if self.model_id == "S1" else (lambda k: ",".join(map(str, k)))
        return {"modes": {key(k): [c.real, c.imag] for k, c in self.coeffs}}

    @classmethod
    def from_json(cls, model_id: str, data: dict) -> "FunctionRep":
        out = {}
        for k, (re, im) in data["modes"].items():
            key = int(k) if model_id == "S1" else tuple(int(x) for x in k.split(","))
            out[key] = complex(re, im)
        return cls.make(model_id, out)


def _merge(terms):
    acc: dict = {}
    for c, fs in terms:
        acc[fs] = acc.get(fs, 0) + c
    return tuple((c, fs) for fs, c in acc.items() if abs(c) > 1e-15)


@dataclass(frozen=True)
class ASCochain:
    degree: int
    model_id: str
    terms: tuple

    @classmethod
    def build(cls, terms) -> "ASCochain":
        """Collect raw (coeff, tuple) terms without antisymmetrizing."""
        terms = [(complex(c), tuple(fs)) for c, fs in terms]
        if not terms:
            raise ValueError("empty term list; use ASCochain.zero")
        degree = len(terms[0][1]) - 1
        model_id = terms[0][1][0].model_id
        for _, fs in terms:
            if len(fs) != degree + 1:
                raise ValueError("tuples of different degrees")
            if any(f.model_id != model_id for f in fs):
                raise ValueError("tuples on different models")
        return cls(degree, model_id, _merge(terms))

    @classmethod
    def zero(cls, degree: int, model_id: str = "S1") -> "ASCochain":
        return cls(degree, model_id, ())

    @classmethod
    def unit(cls, model_id: str = "S1") -> "ASCochain":
        return cls(0, model_id, ((1.0 + 0j, (FunctionRep.unit(model_id),)),))

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def bandwidth(self) -> int:
        return max((f.bandwidth for _, fs in self.terms for f in fs), default=0)

    def _check(self, other):
        if self.degree != other.degree or self.model_id != other.model_id:
            raise ValueError("cochains differ in degree or model")

    def __add__(self, other: "ASCochain") -> "ASCochain":
        self._check(other)
        return ASCochain(self.degree, self.model_id, _merge(self.terms + other.terms))

    def __mul__(self, s) -> "ASCochain":
        return ASCochain(self.degree, self.model_id, _merge((s * c, fs) for c, fs in self.terms))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __call__(self, *points) -> np.ndarray:
        """Evaluate at q+1 points (or arrays of points broadcast together)."""
        if len(points) != self.degree + 1:
            raise ValueError(f"degree-{self.degree} cochain takes {self.degree + 1} points")
        total = 0
        for c, fs in self.terms:
            val = c
            for f, x in zip(fs, points):
                val = val * f(x)
            total = total + val
        return np.asarray(total, dtype=complex)

    def to_json(self) -> dict:
        return {
            "model": self.model_id,
            "degree": self.degree,
            "terms": [{"coeff": [c.real, c.imag], "tuple": [f.to_json() for f in fs]}
                      for c, fs in self.terms],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data) -> "ASCochain":
        if isinstance(data, str):
            data = json.loads(data)
        model_id = data["model"]
        terms = [(complex(*t["coeff"]), tuple(FunctionRep.from_json(model_id, f) for f in t["tuple"]))
                 for t in data["terms"]]
        if not terms:
            return cls.zero(int(data["degree"]), model_id)
        out = cls.build(terms)
        if out.degree != int(data["degree"]):
            raise ValueError("degree field does not match tuples")
        return out


def antisymmetrize(raw) -> ASCochain:
    """(1/(q+1)!) Σ_ν sgn(ν) of each tuple with its slots permuted by ν."""
    if isinstance(raw, ASCochain):
        raw = raw.terms
    raw = [(complex(c), tuple(fs)) for c, fs in raw]
    if not raw:
        raise ValueError("nothing to antisymmetrize")
    n = len(raw[0][1])
    if n > MAX_SLOTS:
        raise ValueError(f"antisymmetrization size cap: {n} slots > {MAX_SLOTS}")
    scale = 1 / math.factorial(n)
    out = []
    for p in itertools.permutations(range(n)):
        s = _perm_sign(p) * scale
        for c, fs in raw:
            out.append((s * c, tuple(fs[i] for i in p)))
    return ASCochain.build(out)


def coboundary(phi: ASCochain) -> ASCochain:
    """Insert the unit function at each slot with alternating sign."""
    one = FunctionRep.unit(phi.model_id)
    out = []
    for c, fs in phi.terms:
        for i in range(phi.degree + 2):
            out.append(((-1) ** i * c, fs[:i] + (one,) + fs[i:]))
    if not out:
        return ASCochain.zero(phi.degree + 1, phi.model_id)
    return ASCochain.build(out)


def manifold_dim(model_id: str) -> int:
    return {"S1": 1, "S3": 3}[model_id]


def _circle_integral(f0: FunctionRep, f1: FunctionRep) -> complex:
    # trapezoidal rule; exact for trigonometric polynomials with enough points
    n = 2 * (f0.bandwidth + f1.bandwidth) + 1
    theta = 2 * math.pi * np.arange(n) / n
    df1 = FunctionRep.circle({k: 1j * k * c for k, c in f1.coeffs})
    # d(f1) = f1'(θ) dθ
    return complex(np.sum(f0(theta) * df1(theta)) * 2 * math.pi / n)


def _ball_moment(alpha) -> float:
    """∫ over the unit ball of C^2 of |z1|^{2a1}|z2|^{2a2} dV."""
    a1, a2 = alpha
    return math.pi ** 2 * math.factorial(a1) * math.factorial(a2) / math.factorial(a1 + a2 + 2)


def _jacobian_row(f: FunctionRep):
    # derivatives along z1, z2, z̄1, z̄2 as coefficient dicts
    rows = [dict() for _ in range(4)]
    for (a1, a2, b1, b2), c in f.coeffs:
        exps = [a1, a2, b1, b2]
        for j in range(4):
            if exps[j]:
                key = list(exps)
                key[j] -= 1
                key = tuple(key)
                rows[j][key] = rows[j].get(key, 0) + c * exps[j]
    return rows


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for k, a in p.items():
        for l, b in q.items():
            key = tuple(x + y for x, y in zip(k, l))
            out[key] = out.get(key, 0) + a * b
    return out


def _sphere_integral(fs) -> complex:
    """∫_{S^3} f0 df1 ∧ df2 ∧ df3 = ∫_{B^4} df0 ∧ df1 ∧ df2 ∧ df3 (Stokes).

    dz1 ∧ dz2 ∧ dz̄1 ∧ dz̄2 = 4 dV for the standard orientation of C^2.
    """
    rows = [_jacobian_row(f) for f in fs]
    form: dict = {}
    for p in itertools.permutations(range(4)):
        s = _perm_sign(p)
        prod = {(0, 0, 0, 0): complex(s)}
        for i in range(4):
            prod = _poly_mul(prod, rows[i][p[i]])
            if not prod:
                break
        for k, c in prod.items():
            form[k] = form.get(k, 0) + c
    total = 0j
    for (a1, a2, b1, b2), c in form.items():
        if a1 == b1 and a2 == b2:
            total += c * _ball_moment((a1, a2))
    return 4 * total


def lambda_integral(phi: ASCochain, model) -> complex:
    """∫_M Σ f0 df1 ∧ ... ∧ dfq; zero unless the degree is the manifold dimension."""
    model_id = getattr(model, "manifold", model)
    if phi.model_id != model_id:
        raise ValueError(f"cochain on {phi.model_id} paired with model {model_id}")
    if phi.degree != manifold_dim(model_id):
        return 0j
    total = 0j
    for c, fs in phi.terms:
        if model_id == "S1":
            total += c * _circle_integral(*fs)
        else:
            total += c * _sphere_integral(fs)
    return total


def random_points(model_id: str, size, rng) -> np.ndarray:
    if model_id == "S1":
        return rng.uniform(0, 2 * math.pi, size)
    g = rng.standard_normal(tuple(np.atleast_1d(size)) + (4,))
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    return g[..., 0::2] + 1j * g[..., 1::2]


def is_top_cocycle(phi: ASCochain, model, samples: int = 200, seed: int = 0,
                   tol: float = 1e-10) -> bool:
    model_id = getattr(model, "manifold", model)
    if phi.degree >= manifold_dim(model_id):
        return True
    rng = np.random.default_rng(seed)
    d = coboundary(phi)
    pts = [random_points(model_id, samples, rng) for _ in range(d.degree + 1)]
    return bool(np.max(np.abs(d(*pts)), initial=0.0) <= tol)
