"""Implicit and inverse function solvers on points nilpotent about a center.

In exact arithmetic the chord iteration ``Y <- Y - L^{-1 (m)} F(X, Y)``
terminates: every step changes ``Y`` only by terms of strictly higher order
in the shift ``X - X0^(m)``, and those vanish past the nilpotency rank.  The
rank is certified up front and used as the iteration budget.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .blockmap import delta_ry_center, matrix_of, partial_x_matrix, partial_y_matrix, unvec, vec
from .errors import (
    CenterResidualNonzero,
    IterationBudgetExceeded,
    KernelMismatch,
    NotNilpotent,
    NotNilpotentOperator,
    ShapeMismatch,
    SingularDifferential,
    SizeMismatch,
)
from .ncalg import Direction, MatrixPoint, NcPoly, NcPolyMap, ampliate, join, split

LIFT_CAP = 512


@dataclass(frozen=True, eq=False)
class NilpCertificate:
    center: MatrixPoint
    point: MatrixPoint
    kappa: int
    s: int
    m: int


@dataclass
class SolveReport:
    """Iteration trace shared by the exact and the numeric solvers."""

    iterations: int = 0
    residuals: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    reason: str = ""
    kappa: int | None = None
    joint_kappas: list = field(default_factory=list)
    radii: dict | None = None
    contraction: float | None = None
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residuals": [float(r) for r in self.residuals],
            "steps": [float(r) for r in self.steps],
            "ratios": [float(r) for r in self.ratios],
            "reason": self.reason,
            "kappa": self.kappa,
            "max_joint_kappa": max(self.joint_kappas) if self.joint_kappas else None,
            "radii": self.radii,
            "contraction": self.contraction,
            "checks": self.checks,
        }


def _max_abs(mats) -> float:
    return max((float(np.max(np.abs(la.float_array(m)))) if m.size else 0.0) for m in mats)


def odot(M: np.ndarray, A: np.ndarray, m: int) -> np.ndarray:
    """Product over the tensor algebra: ``(M . A)_{ij} = sum_k M_ik (x) A_kj``.

    ``M`` is an ``m x m`` grid of ``p x p`` blocks and ``A`` of ``q x q``
    blocks; the result has ``pq x pq`` blocks.
    """
    p = M.shape[0] // m
    q = A.shape[0] // m
    if p == 1 and q == 1:
        return M @ A
    Mr = M.reshape(m, p, m, p)
    Ar = A.reshape(m, q, m, q)
    out = np.einsum("iakc,kbjd->iabjcd", Mr, Ar)
    return out.reshape(m * p * q, m * p * q)


def certify_nilpotent(P: MatrixPoint, c: MatrixPoint, kappa_max: int = 16,
                      atol: float = 1e-10) -> NilpCertificate:
    """Smallest ``kappa`` with every order-``kappa`` word in ``P - c^(m)`` vanishing.

    The words of each order span a subspace; it is tracked by an incremental
    basis so the work stays polynomial in the size.
    """
    if P.d != c.d:
        raise SizeMismatch(f"point has {P.d} components, center {c.d}")
    s = c.n
    if P.n % s:
        raise SizeMismatch(f"size {P.n} is not a multiple of the center size {s}")
    m = P.n // s
    exact = P.exact and c.exact
    if not exact:
        P, c = P.to_float() if P.exact else P, c.to_float() if c.exact else c
    shifts = [x - y for x, y in zip(P.mats, ampliate(c, m).mats)]
    level = [la.eye(m, exact)]
    for kappa in range(0, kappa_max + 1):
        if not level:
            return NilpCertificate(c, P, kappa, s, m)
        if kappa == kappa_max:
            break
        if s > 1 and m * s ** (kappa + 1) > LIFT_CAP:
            raise SizeMismatch(f"lifted size {m * s ** (kappa + 1)} exceeds the cap {LIFT_CAP}")
        basis = la.SpanBasis(exact, atol)
        for M in level:
            for A in shifts:
                basis.add(odot(M, A, m))
        level = basis.members
    raise NotNilpotent(f"words of order {kappa_max} in the shift do not all vanish")


def certify_joint(X: MatrixPoint, Y: MatrixPoint, center: MatrixPoint, kappa_max: int = 16) -> NilpCertificate:
    return certify_nilpotent(join(X, Y), center, kappa_max)


def _residual_zero(R, exact: bool, atol: float) -> bool:
    return all(la.is_zero(r, 0.0 if exact else atol) for r in R)


def implicit_solve_nilp(F: NcPolyMap, center: MatrixPoint, X: MatrixPoint,
                        cert: NilpCertificate | None = None, kappa_max: int = 16,
                        seed: MatrixPoint | None = None, track_joint: bool = True):
    """Solve ``F(X, Y) = 0`` for ``Y`` nilpotent about ``Y0``; returns ``(Y, SolveReport)``.

    ``center`` is the joint point ``(X0, Y0)``.  Exact inputs give an exact
    zero residual.
    """
    a, b = F.split
    if center.d != a + b:
        raise ShapeMismatch(f"center has {center.d} components, map uses {a + b} letters")
    X0, Y0 = split(center, a)
    X0 = MatrixPoint(X0.mats)
    Y0 = MatrixPoint(Y0.mats)
    exact = center.exact and X.exact
    if not F.is_exact and exact:
        raise KernelMismatch("the exact solver needs rational coefficients")
    if not la.is_zero(np.stack(F.evaluate_joint(center)), 0.0 if exact else 1e-12):
        raise CenterResidualNonzero("F does not vanish at the center")
    Linv = delta_ry_center(F, center).inverse()
    if cert is None:
        cert = certify_nilpotent(X, X0, kappa_max)
    elif cert.point != X:
        raise ShapeMismatch("certificate was issued for a different point")
    m = cert.m
    Y = ampliate(Y0, m) if seed is None else seed
    budget = cert.kappa
    report = SolveReport(kappa=cert.kappa)
    if seed is not None:
        budget = max(budget, certify_joint(X, Y, center, max(kappa_max, 2 * cert.kappa)).kappa)
    for k in range(budget + 1):
        if track_joint:
            report.joint_kappas.append(certify_joint(X, Y, center, max(kappa_max, 2 * budget + 2)).kappa)
        R = F.evaluate(X, Y)
        report.residuals.append(_max_abs(R))
        if _residual_zero(R, exact, 1e-12):
            report.iterations = k
            report.reason = "exact zero residual"
            return Y, report
        if k == budget:
            break
        step = Linv.apply(R)
        report.steps.append(_max_abs(step))
        Y = MatrixPoint([y - d for y, d in zip(Y.mats, step)], exact=Y.exact)
    raise IterationBudgetExceeded(
        f"residual still nonzero after {budget} steps; the input is not nilpotent of the certified rank")


def inverse_as_implicit(g: NcPolyMap, Y0: MatrixPoint):
    """``F(X, Y) = g(Y) - X`` together with the joint center ``(g(Y0), Y0)``."""
    if g.a != 0 or g.c != g.b:
        raise ShapeMismatch("inverse problems need g with only Y letters and as many components as letters")
    b = g.b
    comps = [p.embed(2 * b, offset=b) - NcPoly.var(k, 2 * b) for k, p in enumerate(g.components)]
    F = NcPolyMap(comps, (b, b))
    X0 = MatrixPoint(g.evaluate(None, Y0), exact=Y0.exact)
    return F, join(X0, Y0)


def inverse_solve_nilp(g: NcPolyMap, Y0: MatrixPoint, X: MatrixPoint, cert: NilpCertificate | None = None,
                       kappa_max: int = 16, track_joint: bool = True):
    """Solve ``g(Y) = X`` for ``X`` nilpotent about ``g(Y0)``; returns ``(Y, SolveReport)``."""
    F, center = inverse_as_implicit(g, Y0)
    return implicit_solve_nilp(F, center, X, cert=cert, kappa_max=kappa_max, track_joint=track_joint)


@dataclass(frozen=True, eq=False)
class ChordOperator:
    N: np.ndarray
    gamma: int
    inverse: np.ndarray
    bound: int


def chord_operator_nilpotency(F: NcPolyMap, center: MatrixPoint, P1: MatrixPoint, P2: MatrixPoint,
                              kappa_max: int = 16) -> ChordOperator:
    """Write ``Delta_R^Y F(P1, P2) = L^(m) (id + N)`` and certify ``N`` nilpotent.

    ``P1``, ``P2`` are joint points nilpotent about ``center``.  With ranks
    ``k1``, ``k2`` every term of ``N^g`` carries ``g`` shift factors split
    between the two sides, so ``g = k1 + k2 - 1`` is a valid bound.
    """
    exact = center.exact and P1.exact and P2.exact
    k1 = certify_nilpotent(P1, center, kappa_max).kappa
    k2 = certify_nilpotent(P2, center, kappa_max).kappa
    bound = k1 + k2 - 1
    L = delta_ry_center(F, center)
    K = partial_y_matrix(F, P1, P2)
    A = matrix_of(L.apply, L.b, (P1.n, P2.n), L.exact)
    dim = K.shape[0]
    N = la.inv(A, exc=SingularDifferential) @ K - la.eye(dim, exact)
    power = N
    gamma = 1
    while not la.is_zero(power, 0.0 if exact else 1e-10):
        if gamma >= bound:
            raise NotNilpotentOperator(f"N^{gamma} != 0 beyond the bound {bound}")
        power = power @ N
        gamma += 1
    inverse = la.eye(dim, exact)
    term = la.eye(dim, exact)
    for _ in range(1, gamma):
        term = -(term @ N)
        inverse = inverse + term
    return ChordOperator(N=N, gamma=gamma, inverse=inverse, bound=bound)


def implicit_derivative(F: NcPolyMap, X: MatrixPoint, Y: MatrixPoint, Z) -> Direction:
    """``Delta_R f(X, X)(Z) = -(Delta_R^Y F)^{-1} Delta_R^X F (Z)`` at ``((X, Y), (X, Y))``.

    Works in either kernel; ``Y`` must solve ``F(X, Y) = 0``.
    """
    P = F.joint(X, Y)
    Z = Z if isinstance(Z, Direction) else Direction(Z.mats if hasattr(Z, "mats") else Z)
    if Z.d != F.a or Z.shape != (X.n, X.n):
        raise ShapeMismatch(f"direction must be {F.a} matrices of size {X.n}")
    DY = partial_y_matrix(F, P, P)
    DX = partial_x_matrix(F, P, P)
    out = -(la.inv(DY, exc=SingularDifferential) @ (DX @ vec(Z.mats)))
    return Direction(unvec(out, F.b, (X.n, X.n)), exact=P.exact)


def implicit_derivative_nilp(F: NcPolyMap, center: MatrixPoint, X: MatrixPoint, Y: MatrixPoint, Z) -> Direction:
    """Derivative of the solution map at a nilpotent point (``center`` kept for symmetry with the solver)."""
    return implicit_derivative(F, X, Y, Z)


def implicit_derivative_block(F: NcPolyMap, center: MatrixPoint, X: MatrixPoint, Z, kappa_max: int = 16) -> Direction:
    """Same derivative read off the solution at ``[[X, Z], [0, X]]``."""
    Z = Z if isinstance(Z, Direction) else Direction(Z.mats if hasattr(Z, "mats") else Z)
    n = X.n
    big = MatrixPoint([la.block_diag(x, x) for x in X.mats], exact=X.exact)
    mats = []
    for x, z in zip(big.mats, Z.mats):
        x = np.array(x)
        x[:n, n:] = z
        mats.append(x)
    Yb, _ = implicit_solve_nilp(F, center, MatrixPoint(mats, exact=X.exact), kappa_max=kappa_max,
                                track_joint=False)
    return Direction([y[:n, n:] for y in Yb.mats], exact=X.exact)
