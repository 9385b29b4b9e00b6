"""Experiment suites: each turns (model, params, rng) into a list of named checks.

A check is a zero-argument callable returning an IndexReport whose residual is
compared against the tolerance for its tolerance key.  All randomness is drawn
while the checks are built, so their execution order does not matter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .aspanier import FunctionRep, antisymmetrize, lambda_integral
from .chern import (beta_factor, beta_factor_quadrature, ch_idempotent, ch_invertible,
                    exponential_path, idempotent_path, invertible_lift, lift_symbol,
                    suspended_chern, transgress)
from .cyclic import boundary, chain_B, chain_b, tr_tensor_mixed
from .index import (IndexReport, cohomological_oracle, fredholm_index, heat_index,
                    limit_index, s_bracket_trace, suspended_index, toeplitz_bracket_trace)
from .models import CircleModel, dirac_operator, make_model, toeplitz
from .sampling import (complex_normal, localized_winding_cochain, random_chain,
                       random_idempotent, random_invertible, random_trig_poly)


class ConfigError(ValueError):
    pass


@dataclass
class Check:
    name: str
    run: Callable[[], IndexReport]
    tolerance_key: str


def _residual_report(value: float, method: str, **params) -> IndexReport:
    return IndexReport(value, method, 0.0, params=params)


def _z(k: int) -> FunctionRep:
    return FunctionRep.circle({k: 1})


def _require_circle(model, space=None):
    if not isinstance(model, CircleModel):
        raise ConfigError("suite needs a circle model (manifold S1)")
    if space is not None and model.space != space:
        raise ConfigError(f"suite needs the {space!r} circle realization, got {model.space!r}")


# identities

def _bicomplex_check(c):
    def run():
        b, B = chain_b, chain_B
        res = [b(b(c)).norm() if c.degree >= 2 else 0.0, B(B(c)).norm()]
        if c.degree >= 1:
            res.append((b(B(c)) + B(b(c))).norm())
        else:
            res.append(b(B(c)).norm())
        return _residual_report(max(res), "bicomplex", degree=c.degree, dim=c.dim)
    return run


def _identities(model, params, rng):
    n_chains = int(params.get("chains", 40))
    n_idem = int(params.get("idempotents", 10))
    n_inv = int(params.get("invertibles", 10))
    cutoff = int(params.get("cutoff", 4))
    dims = params.get("dims", [1, 3])
    degrees = params.get("degrees", [0, 4])
    checks = []
    for i in range(n_chains):
        dim = int(rng.integers(dims[0], dims[1] + 1))
        deg = int(rng.integers(degrees[0], degrees[1] + 1))
        c = random_chain(rng, dim, deg)
        checks.append(Check(f"bicomplex-{i:03d}", _bicomplex_check(c), "bicomplex"))
    for i in range(n_idem):
        E = random_idempotent(rng, int(rng.integers(1, 4)))
        ev = cutoff - cutoff % 2
        checks.append(Check(f"ch-idempotent-{i:03d}",
                            lambda E=E: _residual_report(boundary(ch_idempotent(E, ev)).norm(),
                                                         "ch_idempotent", cutoff=ev),
                            "cocycle"))
    for i in range(n_inv):
        U = random_invertible(rng, int(rng.integers(1, 4)))
        od = cutoff - 1 + cutoff % 2
        checks.append(Check(f"ch-invertible-{i:03d}",
                            lambda U=U: _residual_report(boundary(ch_invertible(U, od)).norm(),
                                                         "ch_invertible", cutoff=od),
                            "cocycle"))
    for i in range(int(params.get("paths", 3))):
        n = int(rng.integers(1, 3))
        # a perturbed inverse plays the parametrix, as for an elliptic symbol
        D = random_invertible(rng, n)
        Q = np.linalg.inv(D) + 0.3 * complex_normal(rng, (n, n))
        u = random_invertible(rng, n)
        P = random_idempotent(rng, n)
        checks.append(Check(f"transgression-lift-{i:03d}", lambda D=D, Q=Q: _lift_path(D, Q), "transgression"))
        checks.append(Check(f"transgression-rotation-{i:03d}", lambda u=u: _rotation_path(u), "transgression"))
        checks.append(Check(f"transgression-exponential-{i:03d}", lambda P=P: _exp_path(P), "transgression"))
        checks.append(Check(f"lemma-{i:03d}", lambda u=u: _lemma(u), "lemma"))
    for i in range(int(params.get("loops", 2))):
        A = complex_normal(rng, (2, 2))
        F = np.tanh(0.5 * (A + A.conj().T))
        checks.append(Check(f"transgression-loop-{i:03d}", lambda F=F: _loop(F), "transgression"))
    for q in range(3):
        checks.append(Check(f"beta-{q}", lambda q=q: IndexReport(
            beta_factor_quadrature(q), "beta", beta_factor(q)), "beta"))
    return checks


def _path_residual(path, cutoff, method):
    T = transgress(path, cutoff=cutoff + 1)
    kind = path.kind
    ch = ch_idempotent if kind == "idempotent" else ch_invertible
    r = ch(path.end(), cutoff) - ch(path.start(), cutoff) - boundary(T)
    return _residual_report(r.norm(), method, cutoff=cutoff)


def _lift_path(D, Q):
    lift = lift_symbol(D, Q)
    return _path_residual(idempotent_path(lift.V, lift.Vinv), 2, "transgression_lift")


def _rotation_path(u):
    v, vi = invertible_lift(u)
    return _path_residual(idempotent_path(v, vi), 2, "transgression_rotation")


def _exp_path(P):
    T = transgress(exponential_path(P), cutoff=2)
    r = T - ch_idempotent(P, 2) * (2j * math.pi)
    return _residual_report(r.norm(), "transgression_exponential", cutoff=2)


def _lemma(u):
    v, vi = invertible_lift(u)
    T = transgress(idempotent_path(v, vi), cutoff=3)
    # the rotation path runs in 4×4 blocks of the size of u
    lhs = tr_tensor_mixed(T, 4)
    rhs = (ch_invertible(u, 3) - ch_invertible(np.linalg.inv(u), 3)) * 0.5
    return _residual_report((lhs - rhs).norm(), "rotation_lemma", cutoff=3)


def _loop(F):
    sch = suspended_chern(F, cutoff=3)
    return _residual_report(boundary(sch).norm(), "transgression_loop", cutoff=3)


# fredholm

def _fredholm(model, params, rng):
    _require_circle(model, "hardy")
    powers = params.get("powers", list(range(-3, 4)))
    pairs = params.get("additive", [])
    checks = []
    for k in powers:
        k = int(k)
        def run(k=k):
            D, Q = toeplitz(_z(k), model), toeplitz(_z(-k), model)
            return fredholm_index(D, Q, model, symbol=_z(k))
        checks.append(Check(f"index z^{k:+d}", run, "index"))
    for j, k in pairs:
        j, k = int(j), int(k)
        def run(j=j, k=k):
            D = toeplitz(_z(j), model) @ toeplitz(_z(k), model)
            Q = toeplitz(_z(-k), model) @ toeplitz(_z(-j), model)
            return fredholm_index(D, Q, model, symbol=_z(j + k))
        checks.append(Check(f"additive z^{j:+d} z^{k:+d}", run, "index"))
    return checks


# helton-howe

def _hh_pair(f0, f1, model):
    def run():
        value = 2 * toeplitz_bracket_trace([f0, f1], model)
        phi = antisymmetrize([(1.0, (f0, f1))])
        oracle = float(model.kappa) / (2j * math.pi) * lambda_integral(phi, model)
        return IndexReport(value, "commutator_trace", oracle, params=model.descriptor())
    return run


def _vanish(fs, model, kind):
    def run():
        if kind == "T":
            value = toeplitz_bracket_trace(fs, model)
        else:
            value = s_bracket_trace(fs, dirac_operator(model), model)
        return IndexReport(value, f"{kind}_bracket", 0.0, params={**model.descriptor(), "k": len(fs) - 1})
    return run


def _sphere_family(fs, model):
    def run():
        value = toeplitz_bracket_trace(fs, model)
        phi = antisymmetrize([(1.0, tuple(fs))])
        oracle = cohomological_oracle("odd", phi, model, normalization="cochain")
        return IndexReport(value, "toeplitz_bracket", oracle,
                           params=model.descriptor())
    return run


def _helton_howe(model, params, rng):
    checks = []
    if model.manifold == "S3":
        default = [[{"modes": {"0,0,1,0": [1, 0]}}, {"modes": {"1,0,0,0": [1, 0]}},
                    {"modes": {"0,0,0,1": [1, 0]}}, {"modes": {"0,1,0,0": [1, 0]}}]]
        for i, fam in enumerate(params.get("families", default)):
            fs = [FunctionRep.from_json("S3", f) for f in fam]
            checks.append(Check(f"sphere-{i:03d}", _sphere_family(fs, model), "sphere"))
        return checks
    _require_circle(model)
    bw = int(params.get("bandwidth", 4))
    for i in range(int(params.get("pairs", 25))):
        f0, f1 = random_trig_poly(rng, bw), random_trig_poly(rng, bw)
        checks.append(Check(f"pair-{i:03d}", _hh_pair(f0, f1, model), "commutator"))
    for size in params.get("vanish_sizes", [4, 5]):
        for i in range(int(params.get("families", 5))):
            for kind in ("T", "S"):
                fs = [random_trig_poly(rng, 2) for _ in range(int(size))]
                checks.append(Check(f"vanish-{kind}{int(size) - 1}-{i:03d}",
                                    _vanish(fs, model, kind), "vanishing"))
    return checks


# suspension

def _suspension_case(model, g, phi, width_fraction):
    def run():
        D = dirac_operator(model) + model.multiplication(g)
        return suspended_index(D, phi, model, width=width_fraction * model.N)
    return run


def _suspension_checks(model, params, rng, prefix="case"):
    _require_circle(model, "laurent")
    order = int(params.get("cochain_order", 4))
    phi = localized_winding_cochain(order)
    amp = float(params.get("amplitude", 0.3))
    bw = int(params.get("potential_bandwidth", 2))
    frac = float(params.get("width_fraction", 0.6))
    checks = []
    for i in range(int(params.get("cases", 10))):
        g = random_trig_poly(rng, bw, real=True)
        scale = amp / max(1e-12, sum(abs(c) for _, c in g.coeffs))
        g = FunctionRep.circle({k: c * scale for k, c in g.coeffs})
        checks.append(Check(f"{prefix}-{i:03d}", _suspension_case(model, g, phi, frac), "suspension"))
    return checks


def _suspension(model, params, rng):
    return _suspension_checks(model, params, rng)


# heat

def _heat(model, params, rng):
    _require_circle(model, "hardy")
    t_grid = [float(t) for t in params.get("t_grid", [0.5, 1, 2, 4])]
    t_limit = float(params.get("t_limit", 50))
    checks = []
    for k in params.get("powers", [1, 2, -1]):
        k = int(k)
        f = _z(k)
        D = toeplitz(f, model) @ np.diag(np.arange(model.dim) + 1.0).astype(complex)
        for t in t_grid:
            checks.append(Check(f"z^{k:+d} t={t:g}", lambda D=D, t=t, f=f: heat_index(D, t, model, f), "index"))

        def spread(D=D, f=f):
            vals = [heat_index(D, t, model, f).value for t in t_grid]
            return IndexReport(max(abs(a - b) for a in vals for b in vals), "heat_spread", 0.0,
                               params={**model.descriptor(), "t_grid": t_grid})

        def limit(D=D):
            r = heat_index(D, t_limit, model)
            return IndexReport(r.value, "heat_limit", limit_index(D, model),
                               params={**model.descriptor(), "t": t_limit})

        checks.append(Check(f"z^{k:+d} spread", spread, "spread"))
        checks.append(Check(f"z^{k:+d} limit", limit, "limit"))
    return checks


# sweep

def _sweep(model, params, rng):
    grid = [int(n) for n in params.get("N_grid", [16, 32, 64])]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"N_grid must be strictly increasing, got {grid}")
    if params.get("check", "suspension") != "suspension":
        raise ConfigError("sweep supports check = 'suspension' only")
    _require_circle(model, "laurent")
    sub = {**params, "cases": int(params.get("cases", 1))}
    seed = int(rng.integers(2 ** 31))
    checks = []
    for N in grid:
        m = CircleModel(N, max(8, N // 4), model.kappa, "laurent")
        for c in _suspension_checks(m, sub, np.random.default_rng(seed), prefix=f"N={N:04d}"):
            key = "suspension" if N == grid[-1] else "coarse"
            checks.append(Check(c.name, c.run, key))
    return checks


@dataclass(frozen=True)
class Suite:
    name: str
    build: Callable
    params: dict
    certifies: str
    tolerances: dict
    model: dict


SUITES = {
    "identities": Suite(
        "identities", _identities,
        {"chains": 40, "idempotents": 10, "invertibles": 10, "cutoff": 4, "dims": [1, 3],
         "degrees": [0, 4], "paths": 3, "loops": 2},
        "b^2 = B^2 = bB + Bb = 0; (b+B) ch = 0 for idempotents and invertibles; "
        "ch(end) - ch(start) = (b+B) Tch along lift, rotation, exponential and suspension paths; "
        "Tr Tch(e, ė) = (ch u - ch u^-1)/2; Gauss-Legendre Beta factors",
        {"bicomplex": 1e-12, "cocycle": 1e-10, "transgression": 1e-7, "lemma": 1e-8, "beta": 1e-12},
        {"manifold": "S1", "N": 8, "pad": 2}),
    "fredholm": Suite(
        "fredholm", _fredholm, {"powers": list(range(-3, 4)), "additive": []},
        "Tr_int((1 - QD) - (1 - DQ)) = -winding for D = T_{z^k}, Q = T_{z^-k}, and for products",
        {"index": 1e-10},
        {"manifold": "S1", "N": 32, "pad": 8, "space": "hardy"}),
    "helton-howe": Suite(
        "helton-howe", _helton_howe,
        {"pairs": 25, "bandwidth": 4, "vanish_sizes": [4, 5], "families": 5},
        "Tr[T_f0, T_f1] = κ/(2πi) ∫ f0 df1 on the circle; brackets of four or more Toeplitz "
        "operators and of two or more S_f = f - D^-1 f D have zero trace; on S^3 the trace of the "
        "normalized four-fold bracket equals κ q!/((2πi)^q (2q)!) ∫ f0 df1 df2 df3 with q = 2",
        {"commutator": 1e-9, "vanishing": 1e-8, "sphere": 1e-2},
        {"manifold": "S1", "N": 64, "pad": 16, "space": "hardy"}),
    "suspension": Suite(
        "suspension", _suspension,
        {"cases": 10, "cochain_order": 4, "amplitude": 0.3, "potential_bandwidth": 2,
         "width_fraction": 0.6},
        "(1/2πi) Tr_φ Sch of the suspension loop of a smoothed phase of D equals the Toeplitz "
        "index (-1)^q (2q)!/q! Tr_φ(P f0 P ... P f_{2q-1} P) of the positive spectral projection",
        {"suspension": 1e-6},
        {"manifold": "S1", "N": 64, "pad": 16, "space": "laurent"}),
    "heat": Suite(
        "heat", _heat, {"powers": [1, 2, -1], "t_grid": [0.5, 1, 2, 4], "t_limit": 50},
        "the index read off the heat lift of tD is independent of t and its large-t value equals "
        "Tr_int(E_∞ - e) with E_∞ = diag(1 - H1, H0)",
        {"index": 1e-8, "spread": 1e-8, "limit": 1e-6},
        {"manifold": "S1", "N": 32, "pad": 8, "space": "hardy"}),
    "sweep": Suite(
        "sweep", _sweep, {"N_grid": [16, 32, 64], "check": "suspension", "cases": 1},
        "convergence in N of the suspension check; the residual at the largest N is gated",
        {"suspension": 1e-6, "coarse": 1e-2},
        {"manifold": "S1", "N": 64, "pad": 16, "space": "laurent"}),
}


def build_checks(suite: str, model_desc: dict, params: dict, seed: int) -> list[Check]:
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    try:
        model = make_model(model_desc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model descriptor: {exc}") from exc
    rng = np.random.default_rng(seed)
    return SUITES[suite].build(model, params, rng)
