import numpy as np
import pytest

from ncfun.errors import ShapeMismatch, SingularDifferential, SingularKktJacobian
from ncfun.ncalg import MatrixPoint, NcPolyMap, ampliate
from ncfun.ncopt import (
    KktPoint,
    TraceFunctional,
    ampliation_consistency,
    jacobian_matrix,
    kkt_residual,
    recover_multipliers,
    solve_kkt,
    trace_objective,
)

G = NcPolyMap.parse(["x0*y0"], ["x0"], ["y0"])
F = NcPolyMap.parse(["x0 + y0 - 1"], ["x0"], ["y0"])
TAU = TraceFunctional([1.0])


def pt(*mats):
    return MatrixPoint([np.atleast_2d(np.asarray(m, dtype=float)) for m in mats])


def kp(x, y, lam):
    x, y, lam = (np.atleast_2d(np.asarray(v, dtype=float)) for v in (x, y, lam))
    return KktPoint(len(x), pt(x), pt(y), [lam])


def test_trace_objective_and_ampliation():
    X, Y = pt(0.5), pt(0.5)
    assert trace_objective(G, TAU, X, Y) == 0.25
    for m in range(1, 5):
        assert trace_objective(G, TAU, ampliate(X, m), ampliate(Y, m)) == pytest.approx(0.25, abs=1e-12)
    assert TAU([np.array([[1.0, 2.0], [3.0, 5.0]])]) == 3.0


def test_trace_objective_invariance_random(rng):
    X, Y = pt(rng.standard_normal((2, 2))), pt(rng.standard_normal((2, 2)))
    v = trace_objective(G, TAU, X, Y)
    for m in (2, 3, 4):
        assert abs(trace_objective(G, TAU, ampliate(X, m), ampliate(Y, m)) - v) <= 1e-12


def test_trace_functional_row():
    tau = TraceFunctional([2.0, -1.0])
    W = [np.arange(4.0).reshape(2, 2), np.eye(2)]
    assert tau.row(2) @ np.concatenate([w.ravel() for w in W]) == pytest.approx(tau(W))
    with pytest.raises(ShapeMismatch):
        tau([np.eye(2)])


def test_residual_examples():
    r = kkt_residual(G, TAU, F, kp(0.5, 0.5, -0.5))
    assert max(r.values()) <= 1e-12
    r = kkt_residual(G, TAU, F, kp(0.5, 0.5, 0.0))
    assert r["stationarity_x"] == pytest.approx(0.5) and r["stationarity_y"] == pytest.approx(0.5)
    assert kkt_residual(G, TAU, F, kp(0, 0, 0))["constraint"] == pytest.approx(1.0)


def test_gradient_matches_finite_differences(rng):
    X, Y = pt(rng.standard_normal((2, 2))), pt(rng.standard_normal((2, 2)))
    P = G.joint(X, Y)
    grad = TAU.row(2) @ jacobian_matrix(G, P)
    h = 1e-6
    fd = []
    for which in (0, 1):
        for idx in np.ndindex(2, 2):
            E = np.zeros((2, 2))
            E[idx] = h
            up = [X[0] + E, Y[0]] if which == 0 else [X[0], Y[0] + E]
            dn = [X[0] - E, Y[0]] if which == 0 else [X[0], Y[0] - E]
            fd.append((trace_objective(G, TAU, pt(up[0]), pt(up[1]))
                       - trace_objective(G, TAU, pt(dn[0]), pt(dn[1]))) / (2 * h))
    assert np.allclose(grad, fd, rtol=1e-6, atol=1e-9)


def test_solve_scalar():
    p = solve_kkt(G, TAU, F, 1, kp(0.4, 0.6, 0.0))
    got = (p.X[0][0, 0], p.Y[0][0, 0], p.Lambda[0][0, 0])
    assert np.allclose(got, (0.5, 0.5, -0.5), atol=1e-8)
    assert p.info["dYF_invertible"]
    assert "not verified" in p.info["cb_inverse_condition"]


def test_solve_matrix_size_two():
    start = kp(0.4 * np.eye(2) + 0.01 * np.array([[0, 1], [0, 0]]), 0.6 * np.eye(2), np.zeros((2, 2)))
    p = solve_kkt(G, TAU, F, 2, start)
    assert np.max(np.abs(p.X[0] - 0.5 * np.eye(2))) <= 1e-6
    assert np.max(np.abs(p.Y[0] - 0.5 * np.eye(2))) <= 1e-6
    assert np.max(np.abs(p.Lambda[0] + 0.25 * np.eye(2))) <= 1e-6


def test_solve_substituted_constraint():
    g = NcPolyMap.parse(["y0 - x0^2"], ["x0"], ["y0"])
    f = NcPolyMap.parse(["y0 - x0"], ["x0"], ["y0"])
    p = solve_kkt(g, TAU, f, 1, kp(0.1, 0.2, 0.0))
    assert np.allclose([p.X[0][0, 0], p.Y[0][0, 0]], [0.5, 0.5], atol=1e-8)


def test_multiplier_recovery():
    p = solve_kkt(G, TAU, F, 1, kp(0.4, 0.6, 0.0))
    lam = recover_multipliers(G, TAU, F, p)
    assert abs(lam[0][0, 0] - p.Lambda[0][0, 0]) <= 1e-8


def test_ampliation_consistency():
    p = solve_kkt(G, TAU, F, 1, kp(0.4, 0.6, 0.0))
    for m in (1, 2, 3):
        assert ampliation_consistency(G, TAU, F, p, m) <= 1e-10
    # away from a critical point the m = 1 value is nonzero
    assert ampliation_consistency(G, TAU, F, kp(0.2, 0.8, 0.0), 1) > 0.1


def test_singular_cases():
    flat = NcPolyMap.parse(["x0 - 1"], ["x0"], ["y0"])
    with pytest.raises(SingularDifferential):
        ampliation_consistency(G, TAU, flat, kp(1.0, 0.5, 0.0), 2)
    with pytest.raises(SingularKktJacobian):
        solve_kkt(NcPolyMap.parse(["0"], ["x0"], ["y0"]), TAU, flat, 1, kp(0.5, 0.5, 0.0))


def test_shape_checks():
    with pytest.raises(ShapeMismatch):
        kkt_residual(G, TraceFunctional([1.0, 1.0]), F, kp(0.5, 0.5, 0.0))
    with pytest.raises(ShapeMismatch):
        solve_kkt(G, TAU, F, 2, kp(0.5, 0.5, 0.0))
    with pytest.raises(ShapeMismatch):
        KktPoint(2, pt(1.0), pt(1.0), [np.eye(2)])
