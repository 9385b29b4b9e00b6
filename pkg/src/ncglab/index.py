"""Higher index evaluators, multicommutator traces and cohomological oracles."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .aspanier import ASCochain, FunctionRep, coboundary, lambda_integral, manifold_dim
from .chern import (LiftData, ch_idempotent, chr_even, idempotent_path, lift_symbol,
                    suspended_chern, transgress)
from .cyclic import trace_pair
from .models import (heat_parametrix, limit_idempotent, localized_phase, phase_operator,
                     positive_spectral_projection)

log = logging.getLogger(__name__)

MAX_BRACKET = 8
# spectral half-width of the smoothed sign, as a fraction of the truncation size
SUSPENSION_WIDTH = 0.6


def _sign(q):
    return -1 if q % 2 else 1


# Every normalization used by the evaluators and oracles, keyed by name.
CONSTANTS = {
    # degree-2q coefficient of the even Chern character
    "ch_even": lambda q: _sign(q) * math.factorial(2 * q) / math.factorial(q),
    # degree-(2q+1) coefficient of the odd Chern character
    "ch_odd": lambda q: _sign(q) * math.factorial(q),
    # even index of an invertible operator through S_f = f - D^{-1} f D
    "hii2": lambda q: _sign(q) * math.factorial(q),
    # odd index through Toeplitz compressions T_f = P f P
    "hiidem2": lambda q: _sign(q) * math.factorial(2 * q) / math.factorial(q),
    # odd cohomological index: (-1)^q κ / (2πi)^q ∫ f0 df1 ... df_{2q-1}
    "odd_index_form": lambda q: _sign(q) / (2j * math.pi) ** q,
    # Tr Σ T...T for an odd top-degree cochain
    "odd_top_trace": lambda q: math.factorial(q) / ((2j * math.pi) ** q * math.factorial(2 * q)),
    # Tr Σ S...S for an even top-degree cochain
    "even_top_trace": lambda q: 1 / ((2j * math.pi) ** q * math.factorial(q)),
    # passage from the normalized bracket (1/k!) Σ sgn to the plain signed sum
    "bracket": lambda k: math.factorial(k),
}


@dataclass
class IndexReport:
    value: complex
    method: str
    oracle: complex | None = None
    residual: float | None = None
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.value = complex(self.value)
        if self.oracle is not None:
            self.oracle = complex(self.oracle)
            self.residual = abs(self.value - self.oracle)
        else:
            self.residual = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["value"] = [self.value.real, self.value.imag]
        d["oracle"] = None if self.oracle is None else [self.oracle.real, self.oracle.imag]
        d["extras"] = {k: ([v.real, v.imag] if isinstance(v, complex) else v)
                       for k, v in self.extras.items()}
        return d


def winding_number(f: FunctionRep, samples: int = 4096) -> float:
    """Discrete argument sum of a nonvanishing function on the circle."""
    theta = 2 * math.pi * np.arange(samples + 1) / samples
    u = f(theta)
    if np.min(np.abs(u)) < 1e-12:
        raise ValueError("symbol vanishes on the circle")
    w = float(np.sum(np.angle(u[1:] / u[:-1])) / (2 * math.pi))
    # the winding number is an integer; snap off the quadrature roundoff
    return float(round(w)) + 0.0 if abs(w - round(w)) < 1e-6 else w


def _bandwidth(A, tol=1e-12) -> int:
    i, j = np.nonzero(np.abs(A) > tol * max(1.0, np.abs(A).max(initial=0)))
    return int(np.max(np.abs(i - j), initial=0))


def svd_index(D, model, tol: float = 1e-10) -> int:
    """dim ker - dim coker of D restricted to the interior window."""
    w = np.tile(model.window, D.shape[0] // model.dim)

    def nullity(A):
        s = np.linalg.svd(A[:, w], compute_uv=False)
        return int(w.sum() - np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))

    return nullity(D) - nullity(D.conj().T)


def fredholm_index(D, Q, model, symbol: FunctionRep | None = None) -> IndexReport:
    """Tr_int((I - QD) - (I - DQ)) with a winding-number or SVD oracle."""
    D, Q = np.asarray(D, dtype=complex), np.asarray(Q, dtype=complex)
    n = D.shape[0]
    bw = max(_bandwidth(D), _bandwidth(Q))
    if bw > model.pad:
        raise ValueError(f"bandwidth of D is {_bandwidth(D)}, of Q is {_bandwidth(Q)}; "
                         f"the truncation edge reaches the window unless pad >= {bw} (pad is {model.pad})")
    C = D @ Q - Q @ D
    w = np.tile(model.window, n // model.dim)
    leak = max(np.linalg.norm(C[np.ix_(w, ~w)]), np.linalg.norm(C[np.ix_(~w, w)]))
    if leak > 1e-10 * max(1.0, np.linalg.norm(C)):
        raise ValueError(
            f"DQ - QD leaks across the interior window edge ({leak:.3e}); "
            f"bandwidth of D is {_bandwidth(D)}, of Q is {_bandwidth(Q)}, pad is {model.pad}")
    I = np.eye(n)
    value = model.interior_trace((I - Q @ D) - (I - D @ Q))
    if symbol is not None:
        oracle = 0.0 - winding_number(symbol)
    else:
        oracle = svd_index(D, model)
    return IndexReport(value, "chi1", oracle, params=model.descriptor())


def _is_unit(phi: ASCochain) -> bool:
    return phi.degree == 0 and len(phi.terms) == 1 and phi.terms[0][1][0].is_constant()


def _degenerate(phi: ASCochain, method: str, model) -> IndexReport | None:
    if phi.is_zero():
        log.warning("cochain is zero after antisymmetrization; index is 0")
        return IndexReport(0.0, method, 0.0, params=model.descriptor())
    return None


def ind_even(D, Q, phi: ASCochain, model, lift: LiftData | None = None,
             symbol: FunctionRep | None = None, nodes: int = 32) -> IndexReport:
    """Tr_φ(ch E(V) - ch e) + Tr_δφ(Tch(E, Ė)) for an even cochain φ."""
    if phi.degree % 2:
        raise ValueError(f"even index needs an even-degree cochain, got {phi.degree}")
    if (r := _degenerate(phi, "hii", model)) is not None:
        return r
    lift = lift if lift is not None else lift_symbol(D, Q)
    deg = phi.degree
    rel = ch_idempotent(lift.EV, deg)[deg] - ch_idempotent(lift.e, deg)[deg]
    value = trace_pair(phi, rel, model)
    dphi = coboundary(phi)
    trans = 0j
    if not dphi.is_zero():
        path = idempotent_path(lift.V, lift.Vinv)
        if nodes != len(path.nodes):
            path = type(path).gauss(path.t0, path.t1, path.evaluator, path.kind, nodes)
        T = transgress(path, cutoff=deg + 1)
        trans = trace_pair(dphi, T[deg + 1], model)
    oracle = None
    extras = {"relative": value, "transgression": trans}
    if _is_unit(phi):
        const = phi(np.zeros(1) if model.manifold == "S1" else np.array([[1.0, 0.0]]))[0]
        direct = model.interior_trace(lift.S0) - model.interior_trace(lift.S1)
        extras["fredholm"] = complex(direct)
        oracle = const * (-winding_number(symbol) if symbol is not None else direct)
    return IndexReport(value + trans, "hii", oracle, params=model.descriptor(), extras=extras)


def _compressed(model, f, P=None):
    M = model.multiplication(f)
    return M if P is None else P @ M @ P


def _pair_products(phi, model, ops_of):
    total = 0j
    for c, fs in phi.terms:
        prod = ops_of(fs[0])
        for f in fs[1:]:
            prod = prod @ ops_of(f)
        total += c * model.interior_trace(prod)
    return total


def ind_even_invertible(D, phi: ASCochain, model) -> IndexReport:
    """(-1)^q q! Tr Σ S_{f0} ... S_{f2q}, with the phase-operator companion in extras."""
    if phi.degree % 2:
        raise ValueError(f"even index needs an even-degree cochain, got {phi.degree}")
    if (r := _degenerate(phi, "hii2", model)) is not None:
        return r
    D = np.asarray(D, dtype=complex)
    Dinv = np.linalg.inv(D)
    F = phase_operator(D)
    q = phi.degree // 2
    model.check_bandwidth(phi)
    cache: dict = {}

    def S(f):
        if ("S", f) not in cache:
            M = model.multiplication(f)
            cache[("S", f)] = M - Dinv @ M @ D
        return cache[("S", f)]

    def C(f):
        if ("C", f) not in cache:
            M = model.multiplication(f)
            cache[("C", f)] = F @ M - M @ F
        return cache[("C", f)]

    k = CONSTANTS["hii2"](q)
    value = k * _pair_products(phi, model, S)
    phase = k * _pair_products_left(phi, model, C, F)
    oracle = 0.0 if phi.degree > manifold_dim(model.manifold) else None
    return IndexReport(value, "hii2", oracle, params=model.descriptor(), extras={"phase": phase})


def _pair_products_left(phi, model, ops_of, left):
    total = 0j
    for c, fs in phi.terms:
        prod = left
        for f in fs:
            prod = prod @ ops_of(f)
        total += c * model.interior_trace(prod)
    return total


def _check_projection(P, tol=1e-10):
    err = max(np.linalg.norm(P @ P - P), np.linalg.norm(P - P.conj().T))
    if err > tol * max(1.0, np.linalg.norm(P)):
        raise ValueError(f"not an orthogonal projection (error {err:.3e})")


def ind_odd_toeplitz(P, phi: ASCochain, model, kappa=None) -> IndexReport:
    """(-1)^q (2q)!/q! Tr Σ T_{f0} ... T_{f_{2q-1}} with T_f = P f P."""
    if phi.degree % 2 == 0:
        raise ValueError(f"odd index needs an odd-degree cochain, got {phi.degree}")
    if (r := _degenerate(phi, "hiidem2", model)) is not None:
        return r
    P = np.asarray(P, dtype=complex)
    _check_projection(P)
    model.check_bandwidth(phi)
    q = (phi.degree + 1) // 2
    cache: dict = {}

    def T(f):
        if f not in cache:
            cache[f] = _compressed(model, f, P)
        return cache[f]

    value = CONSTANTS["hiidem2"](q) * _pair_products(phi, model, T)
    oracle = None
    dim = manifold_dim(model.manifold)
    if phi.degree == dim:
        kappa = model.kappa if kappa is None else kappa
        oracle = float(kappa) * CONSTANTS["odd_index_form"](q) * lambda_integral(phi, model)
    elif phi.degree > dim:
        oracle = 0.0
    return IndexReport(value, "hiidem2", oracle, params=model.descriptor())


def ind_odd_relative(P, phi: ASCochain, model, nodes: int = 32) -> IndexReport:
    """(1/2πi)(Tr_φ(ch U(0) - ch U(1)) + Tr_δφ Tch(U, U̇)) for U(t) = exp(2πi t P)."""
    if phi.degree % 2 == 0:
        raise ValueError(f"odd index needs an odd-degree cochain, got {phi.degree}")
    if (r := _degenerate(phi, "hiidem", model)) is not None:
        return r
    P = np.asarray(P, dtype=complex)
    deg = phi.degree
    cone = chr_even(P, deg)
    rel = trace_pair(phi, cone.relative[deg], model)
    dphi = coboundary(phi)
    trans = trace_pair(dphi, cone.absolute[deg + 1], model) if not dphi.is_zero() else 0j
    oracle = None
    try:
        _check_projection(P)
        oracle = ind_odd_toeplitz(P, phi, model).value
    except ValueError:
        pass
    return IndexReport(rel + trans, "hiidem", oracle, params=model.descriptor(),
                       extras={"relative": rel, "transgression": trans})


def suspended_index(D, phi: ASCochain, model, width: float | None = None,
                    nodes: int = 32) -> IndexReport:
    """(1/2πi) Tr_φ Sch(E) for the loop built from a smoothed phase of D.

    ``width`` sets the spectral window of the smoothed sign; 0 uses the exact phase.
    The oracle is the Toeplitz index of the positive spectral projection of D.
    """
    if phi.degree % 2 == 0:
        raise ValueError(f"odd index needs an odd-degree cochain, got {phi.degree}")
    if (r := _degenerate(phi, "sind", model)) is not None:
        return r
    D = np.asarray(D, dtype=complex)
    if width is None:
        width = SUSPENSION_WIDTH * model.N
    F = localized_phase(D, width)
    sch = suspended_chern(F, phi.degree, nodes)
    value = trace_pair(phi, sch[phi.degree], model) / (2j * math.pi)
    P = positive_spectral_projection(D)
    oracle = ind_odd_toeplitz(P, phi, model).value
    return IndexReport(value, "sind", oracle, params={**model.descriptor(), "width": width})


def multicommutator(ops) -> np.ndarray:
    """(1/k!) Σ_τ sgn(τ) A_τ(1) ... A_τ(k)."""
    ops = [np.asarray(a, dtype=complex) for a in ops]
    k = len(ops)
    if k == 0:
        raise ValueError("empty bracket")
    if k > MAX_BRACKET:
        raise ValueError(f"bracket of {k} operators above the size cap {MAX_BRACKET}")
    if any(a.shape != ops[0].shape for a in ops):
        raise ValueError("operators of different shapes")
    total = np.zeros_like(ops[0])
    for p in itertools.permutations(range(k)):
        sign = 1
        for i in range(k):
            for j in range(i + 1, k):
                if p[i] > p[j]:
                    sign = -sign
        prod = ops[p[0]]
        for i in p[1:]:
            prod = prod @ ops[i]
        total += sign * prod
    return total / math.factorial(k)


def cohomological_oracle(kind: str, phi: ASCochain, model, kappa=None,
                         normalization: str = "bracket") -> complex:
    """Right-hand side of the top-degree trace formulas.

    With ``normalization="bracket"`` the value is κ q!/(2πi)^q ∫λ (odd) or
    κ (2q+1)!/((2πi)^q q!) ∫λ (even), which equals the trace of the plain
    signed sum Σ_τ sgn τ A_τ(1)...A_τ(k) when φ is the antisymmetrization of
    f0 ⊗ ... ⊗ f_{k-1}.  With ``normalization="cochain"`` it is the value of
    Tr Σ_i (T or S products) over the terms of φ itself, smaller by k!.
    """
    m = manifold_dim(model.manifold)
    if phi.degree != m:
        raise ValueError("oracle defined at top degree only")
    if normalization not in ("bracket", "cochain"):
        raise ValueError(f"normalization must be bracket or cochain, got {normalization!r}")
    kappa = float(model.kappa if kappa is None else kappa)
    if kind == "odd":
        if m % 2 == 0:
            raise ValueError("odd formula needs an odd-dimensional manifold")
        q = (m + 1) // 2
        const = CONSTANTS["odd_top_trace"](q)
    elif kind == "even":
        if m % 2:
            raise ValueError("even formula needs an even-dimensional manifold")
        q = m // 2
        const = CONSTANTS["even_top_trace"](q)
    else:
        raise ValueError(f"kind must be even or odd, got {kind!r}")
    if normalization == "bracket":
        const *= CONSTANTS["bracket"](m + 1)
    return kappa * const * lambda_integral(phi, model)


def toeplitz_bracket_trace(fs, model, P=None) -> complex:
    """Tr_int of the normalized multicommutator of the compressions P f P."""
    if P is None:
        P = model.hardy_projection()
    return model.interior_trace(multicommutator([_compressed(model, f, P) for f in fs]))


def s_bracket_trace(fs, D, model) -> complex:
    """Tr_int of the normalized multicommutator of S_f = f - D^{-1} f D."""
    D = np.asarray(D, dtype=complex)
    Dinv = np.linalg.inv(D)
    ops = []
    for f in fs:
        M = model.multiplication(f)
        ops.append(M - Dinv @ M @ D)
    return model.interior_trace(multicommutator(ops))


def heat_index(D, t: float, model, symbol: FunctionRep | None = None) -> IndexReport:
    """Index of D read off the heat lift of tD, paired with the unit cochain."""
    lift = heat_parametrix(D, t)
    r = ind_even(None, None, ASCochain.unit(model.manifold), model, lift=lift, symbol=symbol)
    r.method = "heat"
    r.params = {**r.params, "t": t}
    return r


def limit_index(D, model) -> complex:
    """Tr_int(E_∞ - e) for E_∞ = diag(I - H1, H0), the large-t limit of the heat lift."""
    D = np.asarray(D, dtype=complex)
    n = D.shape[0]
    E = limit_idempotent(D)
    return complex(model.interior_trace(E[:n, :n] - np.eye(n)) + model.interior_trace(E[n:, n:]))
