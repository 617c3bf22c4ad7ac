"""Randomized property suites doubling as the regression gate.

Every suite is a deterministic function of a :class:`CaseSpec`; the JSON
summary of a run is byte-identical for identical seeds.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import linalg as la
from .errors import UnknownSuite
from .ncalg import MatrixPoint, NcPoly, NcPolyMap, direct_sum, eval_poly, scalar_center, similarity
from .serialize import matrix_to_json


@dataclass(frozen=True)
class CaseSpec:
    seed: int = 0
    d_max: int = 3
    deg_max: int = 5
    n_max: int = 4
    kernel: str = "exact"
    count: int = 20

    def __post_init__(self):
        if self.kernel not in ("exact", "float"):
            raise ValueError(f"kernel must be 'exact' or 'float', not {self.kernel!r}")

    @property
    def exact(self) -> bool:
        return self.kernel == "exact"


# ---------------------------------------------------------------- generators

def rand_rational(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(-9, 9), rng.randint(1, 9))


def rand_scalar(rng: random.Random, exact: bool):
    q = rand_rational(rng)
    return q if exact else float(q)


def rand_matrix(rng: random.Random, rows: int, cols: int, exact: bool) -> np.ndarray:
    return la.as_kernel([[rand_scalar(rng, exact) for _ in range(cols)] for _ in range(rows)], exact)


def rand_poly(rng: random.Random, d: int, deg: int, terms: int = 6, exact: bool = True) -> NcPoly:
    out = {}
    for _ in range(rng.randint(1, terms)):
        w = tuple(rng.randrange(d) for _ in range(rng.randint(0, deg)))
        out[w] = rand_scalar(rng, exact)
    return NcPoly(d, out)


def rand_point(rng: random.Random, d: int, n: int, exact: bool) -> MatrixPoint:
    return MatrixPoint([rand_matrix(rng, n, n, exact) for _ in range(d)], exact=exact)


def rand_unimodular(rng: random.Random, n: int, exact: bool) -> np.ndarray:
    """Product of unit lower and unit upper triangular matrices with small entries."""
    lo, up = la.eye(n, exact), la.eye(n, exact)
    for i in range(n):
        for j in range(n):
            if i > j:
                lo[i, j] = rand_scalar(rng, exact)
            elif i < j:
                up[i, j] = rand_scalar(rng, exact)
    return lo @ up


def rand_nilpotent(rng: random.Random, n: int, exact: bool = True, conjugate: bool = True) -> np.ndarray:
    """Strictly upper triangular (so nilpotent of order <= n), optionally conjugated."""
    N = la.zeros((n, n), exact)
    for i in range(n):
        for j in range(i + 1, n):
            N[i, j] = rand_scalar(rng, exact)
    if conjugate:
        S = rand_unimodular(rng, n, exact)
        N = S @ N @ la.inv(S)
    return N


# ---------------------------------------------------------------- axiom checks

class EntrywiseSquare:
    """``X -> X * X`` entrywise: respects direct sums but not similarities or intertwinings."""

    num_letters = 1

    def __call__(self, X: MatrixPoint) -> np.ndarray:
        return X[0] * X[0]


def _evaluator(f) -> Callable:
    if isinstance(f, NcPoly):
        return lambda X: eval_poly(f, X)
    return f


def _mag(*mats) -> float:
    """Product of max-abs entries times the size: roundoff scale of a float product."""
    out = 1.0
    for m in mats:
        out *= max(1.0, float(np.max(np.abs(la.float_array(m)))) if m.size else 1.0) * max(m.shape)
    return out


def _equal(a, b, exact: bool, scale: float = 1.0) -> bool:
    if a.shape != b.shape:
        return False
    if exact:
        return all(x == y for x, y in zip(a.ravel(), b.ravel()))
    if a.size == 0:
        return True
    a, b = la.float_array(a), la.float_array(b)
    scale = max(scale, float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    return float(np.max(np.abs(a - b))) <= 1e-10 * scale


def check_nc_axioms(f, spec: CaseSpec) -> dict:
    """Direct-sum, similarity and intertwining checks on ``spec.count`` random cases.

    ``f`` is an :class:`NcPoly` or any callable on points with a
    ``num_letters`` attribute.  The intertwiner is ``T = S [I; 0]`` with
    ``X = S (Y (+) W) S^{-1}``, so ``X T = T Y`` holds by construction.
    """
    rng = random.Random(spec.seed)
    ev = _evaluator(f)
    d = f.num_letters
    exact = spec.exact
    counts = {k: {"passed": 0, "failed": 0} for k in ("direct_sum", "similarity", "intertwining")}
    witnesses = []

    def record(name, ok, witness):
        counts[name]["passed" if ok else "failed"] += 1
        if not ok and len(witnesses) < 5:
            witnesses.append({"check": name, **witness})

    for _ in range(spec.count):
        n1, n2 = rng.randint(1, spec.n_max), rng.randint(1, spec.n_max)
        P, Q = rand_point(rng, d, n1, exact), rand_point(rng, d, n2, exact)
        lhs = ev(direct_sum(P, Q))
        rhs = la.block_diag(ev(P), ev(Q))
        record("direct_sum", _equal(lhs, rhs, exact),
               {"P": [matrix_to_json(a) for a in P.mats], "Q": [matrix_to_json(a) for a in Q.mats]})

        S = rand_unimodular(rng, n1, exact)
        Sinv = la.inv(S)
        lhs = ev(similarity(P, S))
        rhs = S @ ev(P) @ Sinv
        record("similarity", _equal(lhs, rhs, exact, _mag(S, ev(P), Sinv)),
               {"X": [matrix_to_json(a) for a in P.mats], "S": matrix_to_json(S)})

        # intertwining: Y of size n2, X = S (Y (+) W) S^{-1} of size n2 + n1
        W = P
        Y = Q
        size = n1 + n2
        S = rand_unimodular(rng, size, exact)
        X = similarity(direct_sum(Y, W), S)
        incl = la.zeros((size, n2), exact)
        for i in range(n2):
            incl[i, i] = 1 if not exact else Fraction(1)
        T = S @ incl
        fX = ev(X)
        ok = _equal(fX @ T, T @ ev(Y), exact, _mag(fX, T))
        record("intertwining", ok, {"X": [matrix_to_json(a) for a in X.mats],
                                    "Y": [matrix_to_json(a) for a in Y.mats], "T": matrix_to_json(T)})
    passed = sum(c["passed"] for c in counts.values())
    failed = sum(c["failed"] for c in counts.values())
    return {"passed": passed, "failed": failed, "checks": counts, "witnesses": witnesses,
            "ok": failed == 0}


def entrywise_square_counterexample(spec: CaseSpec | None = None) -> dict:
    return check_nc_axioms(EntrywiseSquare(), spec or CaseSpec(count=5))


# ---------------------------------------------------------------- suites

def _tally(results: list[tuple[bool, dict]]) -> dict:
    witnesses = [w for ok, w in results if not ok][:5]
    passed = sum(1 for ok, _ in results if ok)
    return {"passed": passed, "failed": len(results) - passed, "witnesses": witnesses}


def suite_ncalg(spec: CaseSpec) -> dict:
    rng = random.Random(spec.seed)
    out = {"passed": 0, "failed": 0, "witnesses": []}
    for _ in range(max(spec.count // 4, 1) if spec.count else 0):
        d = rng.randint(1, spec.d_max)
        p = rand_poly(rng, d, spec.deg_max, exact=spec.exact)
        r = check_nc_axioms(p, CaseSpec(rng.randrange(2 ** 31), spec.d_max, spec.deg_max,
                                        min(spec.n_max, 3), spec.kernel, 4))
        out["passed"] += r["passed"]
        out["failed"] += r["failed"]
        out["witnesses"] += r["witnesses"][: 5 - len(out["witnesses"])]
    return out


def suite_ncdiff(spec: CaseSpec) -> dict:
    from .ncdiff import delta_r_block, delta_r_sym, first_order_identity_residual
    rng = random.Random(spec.seed)
    res = []
    for _ in range(spec.count):
        d = rng.randint(1, spec.d_max)
        p = rand_poly(rng, d, spec.deg_max, exact=spec.exact)
        n, m = rng.randint(1, spec.n_max), rng.randint(1, spec.n_max)
        X, Y = rand_point(rng, d, n, spec.exact), rand_point(rng, d, m, spec.exact)
        Z = [rand_matrix(rng, n, m, spec.exact) for _ in range(d)]
        ok = _equal(delta_r_block(p, X, Y, Z), delta_r_sym(p, X, Y, Z), spec.exact)
        S = rand_matrix(rng, n, m, spec.exact)
        ok &= la.is_zero(first_order_identity_residual(p, X, Y, S), 0.0 if spec.exact else 1e-8)
        res.append((ok, {"poly": p.format(), "n": n, "m": m}))
    return _tally(res)


def suite_tt(spec: CaseSpec) -> dict:
    from .ncdiff import tt_coefficients, tt_evaluate, tt_remainder
    rng = random.Random(spec.seed)
    res = []
    for _ in range(spec.count):
        d = rng.randint(1, spec.d_max)
        p = rand_poly(rng, d, spec.deg_max)
        c = scalar_center([rand_rational(rng) for _ in range(d)], exact=True)
        n = rng.randint(1, spec.n_max)
        X = rand_point(rng, d, n, True)
        tt = tt_coefficients(p, c)
        ok = _equal(tt_evaluate(tt, X), eval_poly(p, X), True)
        N = rng.randint(0, 3)
        partial = tt_evaluate(tt, X, up_to=N)
        ok &= _equal(eval_poly(p, X) - partial, tt_remainder(p, c, X, N), True)
        res.append((ok, {"poly": p.format(), "N": N}))
    return _tally(res)


def suite_nilp(spec: CaseSpec) -> dict:
    from .nilp import inverse_solve_nilp
    rng = random.Random(spec.seed)
    g = NcPolyMap.parse(["y0 + y0^2"], [], ["y0"])
    Y0 = scalar_center([0])
    res = []
    for _ in range(spec.count):
        n = rng.randint(1, min(spec.n_max, 5))
        X = MatrixPoint([rand_nilpotent(rng, n)])
        Y, _ = inverse_solve_nilp(g, Y0, X, track_joint=False)
        ok = _equal(np.stack(g.evaluate(None, Y))[0], X[0], True)
        res.append((ok, {"X": matrix_to_json(X[0])}))
    return _tally(res)


def suite_opspace(spec: CaseSpec) -> dict:
    from .opspace import contraction_search, implicit_solve_num
    F = NcPolyMap.parse(["y0 - 0.5*y0^2 - x0"], ["x0"], ["y0"])
    center = MatrixPoint([np.zeros((1, 1)), np.zeros((1, 1))])
    region = contraction_search(F, center, m_probe=2, samples=8, seed=spec.seed)
    rng = np.random.default_rng(spec.seed)
    res = [(region.observed_coeff <= 0.5 + 1e-9, {"observed_coeff": region.observed_coeff})]
    for _ in range(max(spec.count // 4, 1) if spec.count else 0):
        n = int(rng.integers(1, 3))
        A = rng.standard_normal((n, n))
        A *= 0.9 * region.alpha / np.linalg.norm(A, 2)
        Y, rep = implicit_solve_num(F, center, MatrixPoint([A]), 1e-12, 200, region)
        ok = all(r <= region.observed_coeff + 1e-6 for r in rep.ratios[:-1])
        res.append((ok, {"X": matrix_to_json(A), "ratios": rep.ratios}))
    return _tally(res)


def suite_ncode(spec: CaseSpec) -> dict:
    from .ncode import TimePoly, integrate_ivp
    g = TimePoly.parse(["y0^2"], ["y0"])
    X = MatrixPoint([np.array([[1.0, 1.0], [0.0, 1.0]])])
    exact = X[0] @ np.linalg.inv(np.eye(2) - 0.5 * X[0])
    errs = []
    for steps in (32, 64):
        tr = integrate_ivp(g, 0.0, X, 0.5, steps)
        errs.append(float(np.max(np.abs(tr.endpoint[0] - exact))))
    ok = errs[0] / max(errs[1], 1e-300) >= 8
    return _tally([(ok, {"errors": errs})])


def suite_ncopt(spec: CaseSpec) -> dict:
    from .ncopt import KktPoint, TraceFunctional, ampliation_consistency, solve_kkt
    G = NcPolyMap.parse(["x0*y0"], ["x0"], ["y0"])
    F = NcPolyMap.parse(["x0 + y0 - 1"], ["x0"], ["y0"])
    tau = TraceFunctional([1])
    one = lambda v: MatrixPoint([np.array([[v]])])
    p = solve_kkt(G, tau, F, 1, KktPoint(1, one(0.4), one(0.6), [np.zeros((1, 1))]))
    res = [(ampliation_consistency(G, tau, F, p, m) <= 1e-7, {"m": m}) for m in (2, 3)]
    return _tally(res)


def suite_counterexample(spec: CaseSpec) -> dict:
    """Passes when the entrywise square is caught failing intertwining."""
    r = entrywise_square_counterexample(CaseSpec(seed=spec.seed, n_max=3, count=5))
    caught = r["checks"]["intertwining"]["failed"] > 0 and r["checks"]["direct_sum"]["failed"] == 0
    wit = next((w for w in r["witnesses"] if w["check"] == "intertwining"), None)
    return _tally([(caught and wit is not None, {"report": r["checks"]})]) | {"witness": wit}


SUITES: dict[str, Callable[[CaseSpec], dict]] = {
    "ncalg": suite_ncalg,
    "ncdiff": suite_ncdiff,
    "tt": suite_tt,
    "nilp": suite_nilp,
    "opspace": suite_opspace,
    "ncode": suite_ncode,
    "ncopt": suite_ncopt,
    "counterexample": suite_counterexample,
}


def run_suites(names, spec: CaseSpec) -> tuple[int, list]:
    """Run the named suites (all when ``names`` is empty); returns ``(exit code, summaries)``."""
    names = list(names) or list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise UnknownSuite(f"unknown suite(s) {unknown}; known: {sorted(SUITES)}")
    summary = []
    for name in names:
        r = SUITES[name](spec)
        summary.append({"suite": name, **r})
    code = 0 if all(s["failed"] == 0 for s in summary) else 1
    return code, summary


def run_suite(names, spec: CaseSpec | None = None) -> int:
    code, _ = run_suites(names, spec or CaseSpec())
    return code


def summary_json(summary: list) -> str:
    return json.dumps(summary, sort_keys=True, indent=2, default=str)
