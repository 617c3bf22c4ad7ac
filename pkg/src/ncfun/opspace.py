"""Binary64 operator-space tools and the chord-iteration solvers.

The operator-space structure on tuples is the max of spectral norms of the
components.  Completely bounded norms are estimated from below by probing
ampliations ``L^(m)`` for small ``m``; every radius derived from them uses
the estimate inflated by a safety factor.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .blockmap import LinearBlockMap, delta_ry_center, partial_y_matrix, unvec, vec
from .errors import (
    CenterResidualNonzero,
    DomainError,
    DomainEscape,
    MaxIterationsExceeded,
    NoContractionFound,
    ShapeMismatch,
    SizeMismatch,
)
from .ncalg import MatrixPoint, NcPolyMap, ampliate, split
from .ncdiff import delta_r_map
from .nilp import SolveReport, inverse_as_implicit

DEFAULT_SEED = 0x9E3779B9
SAFETY = 1.25


def _mats(P):
    return list(P.mats) if hasattr(P, "mats") else list(P)


def ns_norm(P) -> float:
    """``max_i ||P_i||_2``; zero for an empty tuple."""
    mats = [la.float_array(a) for a in _mats(P)]
    return max((float(np.linalg.norm(a, 2)) if a.size else 0.0 for a in mats), default=0.0)


def _polar(G: np.ndarray) -> np.ndarray:
    U, _, Vh = np.linalg.svd(G, full_matrices=False)
    return U @ Vh


def mixed_norm(A: np.ndarray, in_count: int, in_shape: tuple, out_count: int, out_shape: tuple,
               rng: np.random.Generator, trials: int = 4, iters: int = 60):
    """Lower estimate of ``sup ||A Z|| / ||Z||`` for the max-of-spectral-norms norm.

    Alternates between the active output component's top singular pair and
    the polar factors of the pulled-back functional; the attained ratio never
    decreases along a run.  Returns ``(value, witness)``.
    """
    best, witness = 0.0, None
    if not np.any(A):
        return 0.0, [np.zeros(in_shape) for _ in range(in_count)]
    cplx = np.iscomplexobj(A)
    for _ in range(trials):
        Z = []
        for _ in range(in_count):
            R = rng.standard_normal(in_shape)
            if cplx:
                R = R + 1j * rng.standard_normal(in_shape)
            Z.append(_polar(R))
        prev = -1.0
        for _ in range(iters):
            W = unvec(A @ vec(Z), out_count, out_shape)
            norms = [np.linalg.norm(w, 2) for w in W]
            k = int(np.argmax(norms))
            val = norms[k] / max(ns_norm(Z), 1e-300)
            if val > best:
                best, witness = val, [z.copy() for z in Z]
            if val <= prev * (1 + 1e-13):
                break
            prev = val
            U, _, Vh = np.linalg.svd(W[k])
            D = [np.zeros(out_shape, dtype=W[k].dtype) for _ in range(out_count)]
            D[k] = np.outer(U[:, 0], Vh[0, :])
            G = unvec(A.conj().T @ vec(D), in_count, in_shape)
            Z = [_polar(g) for g in G]
    return float(best), witness


@dataclass
class CbEstimate:
    value: float
    m_used: int
    witnesses: list = field(default_factory=list)
    levels: list = field(default_factory=list)


def cb_norm_estimate(L: LinearBlockMap, m_max: int = 3, trials: int = 8,
                     seed: int = DEFAULT_SEED) -> CbEstimate:
    """Running max of sampled ``||L^(m)||`` for ``m = 1..m_max`` (a lower bound on the cb-norm)."""
    if m_max < 1:
        raise DomainError("m_max must be at least 1")
    if L.exact:
        L = L.to_float()
    rng = np.random.default_rng(seed)
    value, out = 0.0, CbEstimate(0.0, 0)
    for m in range(1, m_max + 1):
        size = L.s * m
        A = L.ampliated_matrix(m)
        v, Z = mixed_norm(A, L.b, (size, size), L.c, (size, size), rng, trials)
        value = max(value, v)
        out.witnesses.append((m, Z, v))
        out.levels.append(value)
    out.value, out.m_used = value, m_max
    return out


@dataclass
class ContractionReport:
    """Sampled radii ``alpha < beta < gamma`` and the worst contraction ratio seen.

    Only levels ``m <= m_probe`` were probed; nothing is claimed beyond them.
    """

    gamma: float
    alpha: float
    beta: float
    observed_coeff: float
    M: float = 1.0
    m_probe: int = 1

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "alpha": self.alpha, "beta": self.beta,
                "observed_coeff": self.observed_coeff, "M": self.M, "m_probe": self.m_probe,
                "scope": f"levels m <= {self.m_probe} sampled"}


def _float_center(F: NcPolyMap, center: MatrixPoint):
    F = F.to_float() if F.is_exact else F
    center = center.to_float() if center.exact else center
    if not la.is_zero(np.stack(F.evaluate_joint(center)), 1e-10):
        raise CenterResidualNonzero("F does not vanish at the center")
    return F, center


def _ball_sample(C: MatrixPoint, radius: float, rng) -> MatrixPoint:
    """Random point with ``||P - C|| < radius``."""
    U = [rng.standard_normal(c.shape) for c in C.mats]
    scale = radius * rng.uniform(0.05, 0.999) / max(ns_norm(U), 1e-300)
    return MatrixPoint([c + scale * u for c, u in zip(C.mats, U)], exact=False)


def contraction_search(F: NcPolyMap, center: MatrixPoint, m_probe: int = 2, samples: int = 32,
                       seed: int = DEFAULT_SEED, beta_frac: float = 0.9,
                       refine: int = 10) -> ContractionReport:
    """Sample radii on which the frozen-differential chord map contracts by at most one half."""
    F, center = _float_center(F, center)
    a = F.a
    X0, Y0 = (MatrixPoint(h.mats) if h.d else None for h in split(center, a))
    L = delta_ry_center(F, center)
    Linv = L.inverse()
    M = SAFETY * cb_norm_estimate(Linv, m_probe, seed=seed).value
    tol = 1.0 / (2.0 * M)

    def draws(radius: float, tag: int):
        rng = np.random.default_rng([seed, tag])
        for k in range(samples):
            m = 1 + k % m_probe
            Xc = ampliate(X0, m) if a else None
            Yc = ampliate(Y0, m)
            X = _ball_sample(Xc, radius, rng) if a else None
            yield m, X, Yc, rng

    def worst(radius: float, tag: int) -> tuple[float, float]:
        """Largest sampled ``||L^(m) - dF_Y||`` and largest Lipschitz ratio of the chord map."""
        dev = ratio = 0.0
        for m, X, Yc, rng in draws(radius, tag):
            size = Yc.n
            Y = _ball_sample(Yc, radius, rng)
            P = F.joint(X, Y)
            D = L.ampliated_matrix(m) - partial_y_matrix(F, P, P)
            shape = (size, size)
            v, _ = _mixed(D, F.b, shape, rng)
            dev = max(dev, v)
            Y2 = _ball_sample(Yc, radius, rng)
            g1 = [y - s for y, s in zip(Y.mats, Linv.apply(F.evaluate(X, Y)))]
            g2 = [y - s for y, s in zip(Y2.mats, Linv.apply(F.evaluate(X, Y2)))]
            dy = ns_norm([p - q for p, q in zip(Y.mats, Y2.mats)])
            if dy > 0:
                ratio = max(ratio, ns_norm([p - q for p, q in zip(g1, g2)]) / dy)
        return dev, ratio

    def good(radius: float, tag: int) -> bool:
        dev, ratio = worst(radius, tag)
        return dev <= tol and ratio <= 0.5

    gamma, tag = 1.0, 0
    while not good(gamma, tag):
        gamma /= 2
        tag += 1
        if gamma < 1e-8:
            raise NoContractionFound("no radius above 1e-8 passed the sampled contraction test")
    if gamma < 1.0:
        lo, hi = gamma, 2 * gamma
        for _ in range(refine):
            mid = 0.5 * (lo + hi)
            tag += 1
            if good(mid, tag):
                lo = mid
            else:
                hi = mid
        gamma = lo
    beta = beta_frac * gamma

    def alpha_ok(alpha: float, tag: int) -> bool:
        if not a:
            return True
        for m, X, Yc, _ in draws(alpha, tag):
            if ns_norm(F.evaluate(X, Yc)) >= beta / (2 * M):
                return False
        return True

    alpha = beta
    tag += 1
    while not alpha_ok(alpha, tag):
        alpha /= 2
        tag += 1
        if alpha < 1e-12:
            raise NoContractionFound("no alpha-ball keeps the initial residual small")
    lo, hi = alpha, min(2 * alpha, beta)
    if hi > lo:
        for _ in range(refine):
            mid = 0.5 * (lo + hi)
            tag += 1
            if alpha_ok(mid, tag):
                lo = mid
            else:
                hi = mid
    alpha = lo
    _, observed = worst(gamma, tag + 1)
    return ContractionReport(gamma=gamma, alpha=alpha, beta=beta, observed_coeff=observed,
                             M=M, m_probe=m_probe)


def _mixed(D: np.ndarray, b: int, shape: tuple, rng):
    return mixed_norm(D, b, shape, b, shape, rng, trials=2, iters=30)


def implicit_solve_num(F: NcPolyMap, center: MatrixPoint, X: MatrixPoint | None, tol: float = 1e-12,
                       max_iter: int = 200, region: ContractionReport | None = None):
    """Chord iteration ``Y <- Y - L^{-1 (m)} F(X, Y)`` from ``Y0^(m)``; returns ``(Y, SolveReport)``.

    With ``region`` the input must lie in the certified alpha-ball and the
    iterates are required to stay in the beta-ball.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    F, center = _float_center(F, center)
    a, b = F.split
    X0, Y0 = split(center, a)
    s = center.n
    if X is not None and X.exact:
        X = X.to_float()
    if a:
        check_shape(X, a)
    n = X.n if a else s
    if n % s:
        raise SizeMismatch(f"size {n} is not a multiple of the center size {s}")
    m = n // s
    Yc = ampliate(MatrixPoint(Y0.mats), m)
    Linv = delta_ry_center(F, center).inverse()
    report = SolveReport()
    if region is not None:
        report.radii = region.to_dict()
        if a and ns_norm([x - c for x, c in zip(X.mats, ampliate(MatrixPoint(X0.mats), m).mats)]) >= region.alpha:
            raise DomainEscape("X lies outside the certified alpha-ball")
    Y = Yc
    prev_step = None
    for k in range(max_iter + 1):
        R = F.evaluate(X, Y)
        res = ns_norm(R)
        report.residuals.append(res)
        if not np.isfinite(res) or res > 1e100:
            raise DomainEscape("iteration diverged")
        if res <= tol:
            report.iterations = k
            report.reason = "residual below tol"
            report.contraction = max(report.ratios) if report.ratios else 0.0
            return Y, report
        if k == max_iter:
            break
        step = Linv.apply(R)
        size = ns_norm(step)
        report.steps.append(size)
        if prev_step:
            report.ratios.append(size / prev_step)
        prev_step = size
        Y = MatrixPoint([y - d for y, d in zip(Y.mats, step)], exact=False)
        if region is not None and ns_norm([y - c for y, c in zip(Y.mats, Yc.mats)]) > region.beta:
            raise DomainEscape(f"iterate {k + 1} left the beta-ball")
    raise MaxIterationsExceeded(f"residual {report.residuals[-1]:.3e} after {max_iter} steps")


def inverse_solve_num(g: NcPolyMap, Y0: MatrixPoint, X: MatrixPoint, tol: float = 1e-12,
                      max_iter: int = 200, region: ContractionReport | None = None,
                      check_directions: int = 2, seed: int = DEFAULT_SEED):
    """Solve ``g(Y) = X`` near ``Y0`` by the chord iteration; returns ``(Y, SolveReport)``.

    The derivative of the inverse is checked on random directions ``Z`` by
    solving at ``[[X, Z], [0, X]]`` and pushing the top-right block back
    through ``Delta_R g(Y, Y)``; the worst mismatch is stored under
    ``report.checks['derivative']``.
    """
    if g.is_exact:
        g = g.to_float()
    Y0 = Y0.to_float() if Y0.exact else Y0
    X = X.to_float() if X.exact else X
    F, center = inverse_as_implicit(g, Y0)
    Y, report = implicit_solve_num(F, center, X, tol, max_iter, region)
    if check_directions:
        rng = np.random.default_rng(seed)
        n, worst = X.n, 0.0
        for _ in range(check_directions):
            Z = [rng.standard_normal((n, n)) for _ in range(X.d)]
            scale = 1e-2 / max(ns_norm(Z), 1e-300)
            Z = [scale * z for z in Z]
            big = []
            for x, z in zip(X.mats, Z):
                B = la.block_diag(x, x)
                B[:n, n:] = z
                big.append(B)
            Yb, _ = implicit_solve_num(F, center, MatrixPoint(big, exact=False), tol, max_iter)
            W = [y[:n, n:] for y in Yb.mats]
            back = delta_r_map(g, Y, Y, W)
            worst = max(worst, ns_norm([p - z for p, z in zip(back, Z)]))
        report.checks["derivative"] = worst
        report.checks["derivative_ok"] = worst <= 10 * tol
    return Y, report


def implicit_derivative_num(F: NcPolyMap, X: MatrixPoint, Y: MatrixPoint, Z):
    """``-(delta^Y F)^{-1} delta^X F (Z)`` at a float solution."""
    from .nilp import implicit_derivative
    return implicit_derivative(F.to_float() if F.is_exact else F, X, Y, Z)


def check_shape(X: MatrixPoint, a: int):
    if X.d != a:
        raise ShapeMismatch(f"X has {X.d} components, map uses {a} X letters")
