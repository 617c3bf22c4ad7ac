"""Acceptance criteria; each test prints one PASS/FAIL line regardless of capture."""
import io
import json
import random
import sys
import time

import numpy as np
import pytest

from ncfun import linalg as la
from ncfun.cli import main
from ncfun.harness import CaseSpec, rand_matrix, rand_nilpotent, rand_point, rand_poly, rand_rational, run_suites
from ncfun.ncalg import Direction, MatrixPoint, NcPolyMap, ampliate, eval_poly, scalar_center
from ncfun.ncdiff import delta_r_block, delta_r_sym, first_order_identity_residual, tt_coefficients, tt_evaluate, tt_remainder
from ncfun.ncode import TimePoly, flow_sensitivity, integrate_ivp
from ncfun.ncopt import KktPoint, TraceFunctional, ampliation_consistency, solve_kkt
from ncfun.nilp import implicit_derivative, implicit_solve_nilp, inverse_as_implicit, inverse_solve_nilp
from ncfun.opspace import cb_norm_estimate, contraction_search, implicit_solve_num
from ncfun.blockmap import LinearBlockMap


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        assert ok, detail
    return emit


def jordan(n):
    J = la.zeros((n, n), True)
    for i in range(n - 1):
        J[i, i + 1] = 1
    return J


def power_sum(X, kappa):
    out = la.zeros(X.shape, True)
    P = la.eye(X.shape[0], True)
    for _ in range(1, kappa):
        P = P @ X
        out = out + P
    return out


def test_c1_exact_nilpotent_implicit_solve(report):
    F = NcPolyMap.parse(["y0 - x0 - x0*y0"], ["x0"], ["y0"])
    center = scalar_center([0, 0])
    cases = {"J2": (jordan(2), 2), "J3": (jordan(3), 3), "J4": (jordan(4), 4),
             "J3+J2": (la.block_diag(jordan(3), jordan(2)), 3)}
    t0 = time.perf_counter()
    bad = []
    for name, (J, kappa) in cases.items():
        X = MatrixPoint([J])
        Y, rep = implicit_solve_nilp(F, center, X)
        ok = (Y[0] == power_sum(J, kappa)).all() and la.is_zero(np.stack(F.evaluate(X, Y)))
        ok &= rep.iterations <= kappa and Y.exact
        if not ok:
            bad.append(name)
    dt = time.perf_counter() - t0
    report(1, not bad and dt < 1.0, f"exact solves J2,J3,J4,J3+J2 failures={bad} time={dt:.3f}s")


def test_c2_exact_inverse_round_trip(report):
    g = NcPolyMap.parse(["y0 + y0^2"], [], ["y0"])
    Y0 = scalar_center([0])
    F, center = inverse_as_implicit(g, Y0)
    rng = random.Random(2024)
    t0 = time.perf_counter()
    fails = 0
    for k in range(50):
        n = rng.randint(1, 5)
        N = rand_nilpotent(rng, n)
        # g(f(X)) = X
        X = MatrixPoint([N])
        Y, _ = inverse_solve_nilp(g, Y0, X, track_joint=False)
        fails += not (g.evaluate(None, Y)[0] == N).all()
        # f(g(Y)) = Y, with the nilpotent on the Y side
        Yn = MatrixPoint([rand_nilpotent(rng, n)])
        back, _ = inverse_solve_nilp(g, Y0, MatrixPoint(g.evaluate(None, Yn)), track_joint=False)
        fails += not (back[0] == Yn[0]).all()
        if k < 20:
            Z = Direction([rand_matrix(rng, n, n, True)])
            W = Direction([delta_r_block(g.components[0], Y, Y, Z)])
            fails += not (implicit_derivative(F, X, Y, W)[0] == Z[0]).all()
    dt = time.perf_counter() - t0
    report(2, fails == 0 and dt < 5.0, f"50 inverse round trips, 20 derivative checks, failures={fails} time={dt:.3f}s")


def test_c3_dual_path_difference(report):
    rng = random.Random(3)
    t0 = time.perf_counter()
    fails = 0
    for _ in range(200):
        d = rng.randint(1, 3)
        p = rand_poly(rng, d, 5)
        n, m = rng.randint(1, 4), rng.randint(1, 4)
        X, Y = rand_point(rng, d, n, True), rand_point(rng, d, m, True)
        Z = [rand_matrix(rng, n, m, True) for _ in range(d)]
        fails += not (delta_r_block(p, X, Y, Z) == delta_r_sym(p, X, Y, Z)).all()
        S = rand_matrix(rng, n, m, True)
        fails += not la.is_zero(first_order_identity_residual(p, X, Y, S))
        Y2 = rand_point(rng, d, n, True)
        diff = [a - b for a, b in zip(X.mats, Y2.mats)]
        fails += not la.is_zero(eval_poly(p, X) - eval_poly(p, Y2) - delta_r_block(p, X, Y2, diff))
    dt = time.perf_counter() - t0
    report(3, fails == 0 and dt < 10.0, f"200 dual-path and identity cases, failures={fails} time={dt:.3f}s")


def test_c4_taylor_taylor(report):
    rng = random.Random(4)
    fails = 0
    for _ in range(50):
        d = rng.randint(1, 3)
        p = rand_poly(rng, d, 5)
        c = scalar_center([rand_rational(rng) for _ in range(d)])
        tt = tt_coefficients(p, c)
        n = rng.randint(1, 4)
        X = rand_point(rng, d, n, True)
        fails += not (tt_evaluate(tt, X) == eval_poly(p, X)).all()
        N = rng.randint(0, 3)
        # X - c jointly nilpotent of rank N + 1: strictly upper triangular of size N + 1
        size = N + 1
        U = []
        for _ in range(d):
            A = rand_matrix(rng, size, size, True)
            U.append(np.triu(A, 1) + la.zeros((size, size), True))
        Xn = MatrixPoint([u + v * la.eye(size, True) for u, v in zip(U, c.scalars())])
        rem = tt_remainder(p, c, Xn, N)
        fails += not la.is_zero(rem)
        fails += not (tt_evaluate(tt, Xn, up_to=N) == eval_poly(p, Xn)).all()
    report(4, fails == 0, f"50 full-order expansions and truncated remainders, failures={fails}")


def test_c5_numeric_implicit_solver(report):
    F = NcPolyMap.parse(["y0 - 0.5*y0^2 - x0"], ["x0"], ["y0"])
    center = MatrixPoint([np.zeros((1, 1)), np.zeros((1, 1))])
    t0 = time.perf_counter()
    Y, _ = implicit_solve_num(F, center, MatrixPoint([np.array([[0.18]])]))
    e_scalar = abs(Y[0][0, 0] - 0.2)
    Yj, _ = implicit_solve_num(F, center, MatrixPoint([np.array([[0.1, 0.05], [0.0, 0.1]])]))
    f = 1 - np.sqrt(0.8)
    want = np.array([[f, 0.05 / np.sqrt(0.8)], [0.0, f]])
    e_jordan = float(np.max(np.abs(Yj[0] - want)))
    region = contraction_search(F, center, m_probe=2, samples=16)
    rng = np.random.default_rng(5)
    worst = 0.0
    for n in (1, 2, 3):
        for _ in range(3):
            A = rng.standard_normal((n, n))
            A *= 0.95 * region.alpha / np.linalg.norm(A, 2)
            _, rep = implicit_solve_num(F, center, MatrixPoint([A]), 1e-12, 200, region)
            worst = max([worst] + list(rep.ratios[:-1]))
    dt = time.perf_counter() - t0
    ok = e_scalar <= 1e-10 and e_jordan <= 1e-8 and worst <= 0.5 + 1e-6 and dt < 1.0
    report(5, ok, f"scalar err={e_scalar:.1e} jordan err={e_jordan:.1e} max ratio={worst:.3f} time={dt:.3f}s")


def test_c6_cb_separation(report):
    T = LinearBlockMap.from_function(lambda Z: [Z[0].T], 2, 1, 1, False)
    one = cb_norm_estimate(T, 1).value
    est = cb_norm_estimate(T, 2)
    ok = one <= 1.001 and est.value >= 1.999 and est.m_used == 2
    report(6, ok, f"transpose m=1 estimate={one:.6f}, m=2 estimate={est.value:.6f} (m_used={est.m_used})")


def test_c7_ode(report):
    g = TimePoly.parse(["y0^2"], ["y0"])
    Jn = np.array([[1.0, 1.0], [0.0, 1.0]])
    closed = Jn @ np.linalg.inv(np.eye(2) - 0.5 * Jn)
    e_s = abs(integrate_ivp(g, 0.0, MatrixPoint([np.array([[1.0]])]), 0.5, 256).endpoint[0][0, 0] - 2.0)
    e_j = float(np.max(np.abs(integrate_ivp(g, 0.0, MatrixPoint([Jn]), 0.5, 256).endpoint[0] - closed)))
    errs = [float(np.max(np.abs(integrate_ivp(g, 0.0, MatrixPoint([Jn]), 0.5, s).endpoint[0] - closed)))
            for s in (32, 64)]
    gain = errs[0] / errs[1]
    tr = integrate_ivp(g, 0.0, MatrixPoint([np.array([[1.0]])]), 0.5, 256)
    sens = flow_sensitivity(g, tr, MatrixPoint([np.array([[1.0]])]))[0][0, 0]
    X = np.array([[0.4, 0.2], [-0.1, 0.3]])
    H = np.array([[0.3, -1.0], [0.5, 0.7]])
    trm = integrate_ivp(g, 0.0, MatrixPoint([X]), 0.5, 256)
    Z = flow_sensitivity(g, trm, MatrixPoint([H]))[0]
    h = 1e-5
    up = integrate_ivp(g, 0.0, MatrixPoint([X + h * H]), 0.5, 256).endpoint[0]
    dn = integrate_ivp(g, 0.0, MatrixPoint([X - h * H]), 0.5, 256).endpoint[0]
    fd_rel = float(np.max(np.abs((up - dn) / (2 * h) - Z)) / np.max(np.abs(Z)))
    ok = e_s <= 1e-7 and e_j <= 1e-7 and gain >= 8 and abs(sens - 4.0) <= 1e-6 and fd_rel <= 1e-5
    report(7, ok, f"scalar err={e_s:.1e} jordan err={e_j:.1e} halving gain={gain:.1f} "
                  f"sensitivity={sens:.9f} fd rel={fd_rel:.1e}")


def test_c8_extremum(report):
    G = NcPolyMap.parse(["x0*y0"], ["x0"], ["y0"])
    F = NcPolyMap.parse(["x0 + y0 - 1"], ["x0"], ["y0"])
    tau = TraceFunctional([1.0])
    one = lambda v: MatrixPoint([np.atleast_2d(np.asarray(v, dtype=float))])
    p1 = solve_kkt(G, tau, F, 1, KktPoint(1, one(0.4), one(0.6), [np.zeros((1, 1))]))
    e1 = float(np.max(np.abs([p1.X[0][0, 0] - 0.5, p1.Y[0][0, 0] - 0.5, p1.Lambda[0][0, 0] + 0.5])))
    E12 = np.array([[0.0, 1.0], [0.0, 0.0]])
    start = KktPoint(2, one(0.4 * np.eye(2) + 0.01 * E12), one(0.6 * np.eye(2)), [np.zeros((2, 2))])
    p2 = solve_kkt(G, tau, F, 2, start)
    e2 = float(max(np.max(np.abs(p2.X[0] - 0.5 * np.eye(2))), np.max(np.abs(p2.Y[0] - 0.5 * np.eye(2)))))
    cons = max(ampliation_consistency(G, tau, F, p, m) for p in (p1, p2) for m in (2, 3))
    ok = e1 <= 1e-8 and e2 <= 1e-6 and cons <= 1e-7
    report(8, ok, f"s=1 err={e1:.1e} s=2 err={e2:.1e} max consistency={cons:.1e}")


def test_c9_axiom_harness(report, monkeypatch, capsys):
    monkeypatch.setattr(sys, "stdin", io.StringIO(""))
    code = main(["check"])
    out = json.loads(capsys.readouterr().out)
    summary = {s["suite"]: s for s in out["summary"]}
    wit = summary["counterexample"].get("witness")
    ok = code == 0 and len(summary) >= 6 and wit is not None and wit["check"] == "intertwining"
    report(9, ok, f"check exit={code}, suites={len(summary)}, intertwining witness stored={wit is not None}")
