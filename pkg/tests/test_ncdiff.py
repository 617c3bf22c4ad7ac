from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given

from conftest import Q, same
from strategies import invertible, matrices, points, polys, rationals
from ncfun import linalg as la
from ncfun.errors import ShapeMismatch
from ncfun.ncalg import Direction, MatrixPoint, NcPoly, direct_sum, eval_poly, scalar_center, similarity
from ncfun.ncdiff import (
    delta_r_block,
    delta_r_higher,
    delta_r_higher_sym,
    delta_r_sym,
    first_order_identity_residual,
    gateaux,
    tt_coefficients,
    tt_evaluate,
    tt_remainder,
)


def s(v):
    return MatrixPoint([Q([[v]])])


def sd(*vals):
    return Direction([Q([[v]]) for v in vals])


x = ["x0"]
xy = ["x0", "x1"]


def test_delta_r_spec_examples():
    p = NcPoly.parse("x0^2", x)
    assert delta_r_block(p, s(2), s(3), sd(1))[0, 0] == 5
    assert delta_r_sym(p, s(2), s(3), sd(1))[0, 0] == 5
    assert delta_r_block(NcPoly.parse("4", x), s(2), s(3), sd(1))[0, 0] == 0
    assert delta_r_block(NcPoly.parse("x0", x), s(2), s(3), sd(7))[0, 0] == 7


def test_delta_r_sym_two_letters():
    p = NcPoly.parse("x0*x1", xy)
    X = MatrixPoint([Q([[1]]), Q([[2]])])
    Y = MatrixPoint([Q([[3]]), Q([[4]])])
    assert delta_r_sym(p, X, Y, sd(1, 0))[0, 0] == 4
    assert delta_r_block(p, X, Y, sd(1, 0))[0, 0] == 4
    assert delta_r_sym(p, X, Y, sd(0, 0))[0, 0] == 0


def test_rectangular_directions():
    p = NcPoly.parse("x0^3", x)
    X = MatrixPoint([Q([[1, 2], [0, 1]])])
    Y = MatrixPoint([Q([[1, 0, 0], [1, 1, 0], [0, 0, 2]])])
    Z = Direction([Q([[1, 0, 2], [0, 3, 1]])])
    assert same(delta_r_block(p, X, Y, Z), delta_r_sym(p, X, Y, Z))
    assert delta_r_block(p, X, Y, Z).shape == (2, 3)


def test_direction_shape_is_checked():
    p = NcPoly.parse("x0", x)
    with pytest.raises(ShapeMismatch):
        delta_r_block(p, s(1), s(2), Direction([Q([[1, 2]])]))


def test_higher_order_examples():
    p2, p3 = NcPoly.parse("x0^2", x), NcPoly.parse("x0^3", x)
    zeros = [s(0)] * 3
    assert delta_r_higher(p2, zeros, [sd(2), sd(3)])[0, 0] == 6
    assert delta_r_higher(p3, zeros, [sd(5), sd(7)])[0, 0] == 0
    ones = [s(1)] * 3
    assert delta_r_higher(p2, ones, [sd(5), sd(7)])[0, 0] == 35
    assert delta_r_higher_sym(p2, ones, [sd(5), sd(7)])[0, 0] == 35


def test_tt_spec_examples():
    tt = tt_coefficients(NcPoly.parse("x0^2", x), scalar_center([2]))
    assert [q.terms for q in tt.parts] == [{(): 4}, {(0,): 4}, {(0, 0): 1}]
    tt = tt_coefficients(NcPoly.parse("x0*x1 - x1*x0", xy), scalar_center([5, 5]))
    assert tt.parts[0].terms == {} and tt.parts[1].terms == {}
    assert tt.parts[2] == NcPoly.parse("x0*x1 - x1*x0", xy)
    assert [q.terms for q in tt_coefficients(NcPoly.parse("3", x), scalar_center([7])).parts] == [{(): 3}]


def test_tt_evaluate_examples():
    p = NcPoly.parse("x0^2", x)
    tt = tt_coefficients(p, scalar_center([2]))
    assert tt_evaluate(tt, s(5))[0, 0] == 25
    assert tt_evaluate(tt, s(5), up_to=1)[0, 0] == 16
    C = MatrixPoint([2 * la.eye(3, True)])
    assert same(tt_evaluate(tt, C, up_to=0), 4 * la.eye(3, True))


def test_tt_remainder_closes_the_gap():
    p = NcPoly.parse("x0^3 - 2*x0", x)
    c = scalar_center([1])
    tt = tt_coefficients(p, c)
    for N in range(4):
        assert tt_remainder(p, c, s(4), N)[0, 0] == eval_poly(p, s(4))[0, 0] - tt_evaluate(tt, s(4), up_to=N)[0, 0]


def test_tt_parts_match_higher_differences():
    p = NcPoly.parse("x0*x1*x0 + 2*x1", xy)
    c = scalar_center([1, -2])
    tt = tt_coefficients(p, c)
    X = MatrixPoint([Q([[1, 2], [3, 4]]), Q([[0, 1], [1, "1/2"]])])
    U = Direction([a - v * la.eye(2, True) for a, v in zip(X.mats, [1, -2])])
    C = MatrixPoint([v * la.eye(2, True) for v in [1, -2]])
    for ell in range(tt.order + 1):
        via_parts = eval_poly(tt.parts[ell], MatrixPoint(U.mats))
        via_delta = delta_r_higher(p, [C] * (ell + 1), [U] * ell)
        assert same(via_parts, via_delta)


def test_first_order_identity_examples():
    p = NcPoly.parse("x0^2", x)
    assert first_order_identity_residual(p, s(2), s(3), Q([[1]]))[0, 0] == 0
    X = MatrixPoint([Q([[1, 2], [3, 4]])])
    Y = MatrixPoint([Q([[1, 0, 1], [0, 2, 0], [1, 1, 1]])])
    assert la.is_zero(first_order_identity_residual(p, X, Y, la.zeros((2, 3), True)), 0.0)


def test_first_order_identity_swapped_convention_is_not_zero():
    # keeping Delta_R p(X, Y) but moving S to the other side breaks the identity
    p = NcPoly.parse("x0^3", x)
    X = MatrixPoint([Q([[1, 2], [3, 1]])])
    Y = MatrixPoint([Q([[0, 1], [5, 0]])])
    S = Q([[1, 1], [0, 2]])
    Z = Direction([S @ X[0] - Y[0] @ S])
    swapped = S @ eval_poly(p, X) - eval_poly(p, Y) @ S - delta_r_block(p, X, Y, Z)
    assert not la.is_zero(swapped, 0.0)
    assert la.is_zero(first_order_identity_residual(p, X, Y, S), 0.0)


def test_gateaux_matches_central_differences(rng):
    p = NcPoly.parse("x0*x1*x0 - 3*x1^2 + x0", xy)
    X = MatrixPoint([rng.standard_normal((3, 3)) for _ in range(2)])
    Z = [rng.standard_normal((3, 3)) for _ in range(2)]
    h = 1e-5
    plus = eval_poly(p, MatrixPoint([a + h * z for a, z in zip(X.mats, Z)]))
    minus = eval_poly(p, MatrixPoint([a - h * z for a, z in zip(X.mats, Z)]))
    fd = (plus - minus) / (2 * h)
    exact = gateaux(p, X, Z)
    assert np.max(np.abs(fd - exact)) <= 1e-7 * max(1.0, np.max(np.abs(exact)))


def test_float_paths_agree(rng):
    p = NcPoly.parse("x0*x1*x0*x1 + 2*x1*x0 - x0^3", xy)
    X = MatrixPoint([rng.uniform(-3, 3, (4, 4)) for _ in range(2)])
    Y = MatrixPoint([rng.uniform(-3, 3, (2, 2)) for _ in range(2)])
    Z = [rng.uniform(-3, 3, (4, 2)) for _ in range(2)]
    a, b = delta_r_block(p, X, Y, Z), delta_r_sym(p, X, Y, Z)
    assert np.max(np.abs(a - b)) <= 1e-10 * max(1.0, np.max(np.abs(a)))


# ---------------------------------------------------------------- properties

@given(polys(2, 5), points(2, 2), points(2, 3), matrices(2, 3), matrices(2, 3))
def test_dual_path_equality(p, X, Y, Z0, Z1):
    Z = Direction([Z0, Z1])
    assert same(delta_r_block(p, X, Y, Z), delta_r_sym(p, X, Y, Z))


@given(polys(1, 4), points(1, 2), points(1, 2), matrices(2, 2), matrices(2, 2), rationals)
def test_linearity_in_direction(p, X, Y, Z1, Z2, alpha):
    lhs = delta_r_block(p, X, Y, [alpha * Z1 + Z2])
    rhs = alpha * delta_r_block(p, X, Y, [Z1]) + delta_r_block(p, X, Y, [Z2])
    assert same(lhs, rhs)


@given(polys(2, 4), points(2, 2), points(2, 2))
def test_difference_formula(p, X, Y):
    Z = Direction([a - b for a, b in zip(X.mats, Y.mats)])
    assert same(eval_poly(p, X) - eval_poly(p, Y), delta_r_block(p, X, Y, Z))


@given(polys(2, 4), points(2, 2), points(2, 3), matrices(2, 3))
def test_first_order_identity(p, X, Y, S):
    assert la.is_zero(first_order_identity_residual(p, X, Y, S), 0.0)


@given(polys(1, 4), points(1, 1), points(1, 2), points(1, 2), points(1, 1),
       matrices(1, 2), matrices(1, 1), matrices(2, 2), matrices(2, 1))
def test_direct_sum_block_formula(p, X1, X2, Y1, Y2, Z11, Z12, Z21, Z22):
    X, Y = direct_sum(X1, X2), direct_sum(Y1, Y2)
    Z = np.block([[Z11, Z12], [Z21, Z22]])
    whole = delta_r_block(p, X, Y, [Z])
    blocks = [[delta_r_block(p, X1, Y1, [Z11]), delta_r_block(p, X1, Y2, [Z12])],
              [delta_r_block(p, X2, Y1, [Z21]), delta_r_block(p, X2, Y2, [Z22])]]
    assert same(whole, np.block(blocks))


@given(polys(2, 4), points(2, 2), points(2, 3), matrices(2, 3), matrices(2, 3), invertible(2), invertible(3))
def test_similarity_covariance(p, X, Y, Z0, Z1, T, S):
    Ti, Si = la.inv(T), la.inv(S)
    lhs = delta_r_block(p, similarity(X, T), similarity(Y, S), [T @ Z0 @ Si, T @ Z1 @ Si])
    assert same(lhs, T @ delta_r_block(p, X, Y, [Z0, Z1]) @ Si)


@given(polys(2, 5), rationals, rationals, points(2, 2))
def test_tt_full_order_reproduces_poly(p, c0, c1, X):
    tt = tt_coefficients(p, scalar_center([c0, c1]))
    assert same(tt_evaluate(tt, X), eval_poly(p, X))
    assert all(q.is_homogeneous(ell) for ell, q in enumerate(tt.parts))
