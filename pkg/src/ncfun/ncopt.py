"""Critical points of trace objectives under nc constraints.

At matrix size ``s`` the unknowns are ``X`` (``a`` matrices), ``Y`` and the
multipliers ``Lambda`` (``b`` matrices each), and the Lagrange system has
``(a + 2b) s^2`` scalar equations:

    grad_X g + sum_k tr(Lambda_k dF_k/dX) = 0,
    grad_Y g + sum_k tr(Lambda_k dF_k/dY) = 0,
    F(X, Y) = 0.

All derivatives come from the block-evaluation difference operator applied
to matrix-unit directions.  Scalars are real throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .blockmap import matrix_of, unvec, vec
from .errors import MaxIterationsExceeded, ShapeMismatch, SingularDifferential, SingularKktJacobian
from .ncalg import MatrixPoint, NcPolyMap, ampliate
from .ncdiff import delta_r_map


@dataclass(frozen=True)
class TraceFunctional:
    """``tau(W) = sum_j c_j tr(W_j) / n``: a normalized trace, invariant under ampliation."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def e(self) -> int:
        return len(self.coeffs)

    def __call__(self, W) -> float:
        W = list(W)
        if len(W) != self.e:
            raise ShapeMismatch(f"expected {self.e} values, got {len(W)}")
        return float(sum(c * np.trace(la.float_array(w)).real / w.shape[0] for c, w in zip(self.coeffs, W)))

    def row(self, n: int) -> np.ndarray:
        """``tau`` as a row vector on the flattened ``e``-tuple of ``n x n`` matrices."""
        out = np.zeros(self.e * n * n)
        for j, c in enumerate(self.coeffs):
            out[j * n * n + np.arange(n) * (n + 1)] = c / n
        return out


@dataclass
class KktPoint:
    s: int
    X: MatrixPoint
    Y: MatrixPoint
    Lambda: list
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, P in (("X", self.X), ("Y", self.Y)):
            if P.d and P.n != self.s:
                raise ShapeMismatch(f"{name} has size {P.n}, expected {self.s}")
        self.X = self.X.to_float() if self.X.exact else self.X
        self.Y = self.Y.to_float() if self.Y.exact else self.Y
        self.Lambda = [la.float_array(L) for L in self.Lambda]
        if len(self.Lambda) != self.Y.d or any(L.shape != (self.s, self.s) for L in self.Lambda):
            raise ShapeMismatch(f"need {self.Y.d} multipliers of size {self.s}")

    def to_vector(self) -> np.ndarray:
        return np.concatenate([vec(self.X.mats), vec(self.Y.mats), vec(self.Lambda)])

    @classmethod
    def from_vector(cls, z: np.ndarray, s: int, a: int, b: int) -> "KktPoint":
        k = s * s
        X = unvec(z[:a * k], a, (s, s))
        Y = unvec(z[a * k:(a + b) * k], b, (s, s))
        Lam = unvec(z[(a + b) * k:], b, (s, s))
        return cls(s, MatrixPoint(X, exact=False), MatrixPoint(Y, exact=False), Lam)


def _float(F: NcPolyMap) -> NcPolyMap:
    return F.to_float() if F.is_exact else F


def _check(G: NcPolyMap, tau: TraceFunctional, F: NcPolyMap):
    if G.split != F.split:
        raise ShapeMismatch(f"objective letters {G.split} differ from constraint letters {F.split}")
    if G.c != tau.e:
        raise ShapeMismatch(f"objective has {G.c} values, trace functional {tau.e}")
    if F.c != F.b:
        raise ShapeMismatch(f"{F.c} constraints for {F.b} unknowns")
    if F.a < 1:
        raise ShapeMismatch("at least one free X letter is required")


def trace_objective(G: NcPolyMap, tau: TraceFunctional, X: MatrixPoint, Y: MatrixPoint) -> float:
    if G.c != tau.e:
        raise ShapeMismatch(f"objective has {G.c} values, trace functional {tau.e}")
    G = _float(G)
    X = X.to_float() if X.exact else X
    Y = Y.to_float() if Y.exact else Y
    return tau(G.evaluate(X, Y))


def jacobian_matrix(F: NcPolyMap, P: MatrixPoint) -> np.ndarray:
    """Matrix of ``Z -> delta F(P)(Z)`` over all ``a + b`` letters at a float joint point."""
    n = P.n
    return matrix_of(lambda Z: delta_r_map(F, P, P, Z), F.num_letters, (n, n), False)


def _pieces(G, tau, F, X, Y):
    G, F = _float(G), _float(F)
    P = F.joint(X, Y)
    n, a = P.n, F.a
    grad = tau.row(n) @ jacobian_matrix(G, P)
    DF = jacobian_matrix(F, P)
    cut = a * n * n
    return grad[:cut], grad[cut:], DF[:, :cut], DF[:, cut:], F.evaluate(X, Y)


def _lam_row(Lambda) -> np.ndarray:
    # tr(L E_ab) picks L_ba, so the pairing vector is vec(L^T)
    return np.concatenate([np.asarray(L).T.ravel() for L in Lambda])


def kkt_vector(G, tau, F, p: KktPoint) -> np.ndarray:
    gx, gy, DXF, DYF, R = _pieces(G, tau, F, p.X, p.Y)
    lam = _lam_row(p.Lambda)
    return np.concatenate([gx + lam @ DXF, gy + lam @ DYF, vec(R)])


def kkt_residual(G: NcPolyMap, tau: TraceFunctional, F: NcPolyMap, p: KktPoint) -> dict:
    """Euclidean norms of the three equation groups."""
    _check(G, tau, F)
    r = kkt_vector(G, tau, F, p)
    k = p.s * p.s
    a, b = F.a, F.b
    return {
        "stationarity_x": float(np.linalg.norm(r[:a * k])),
        "stationarity_y": float(np.linalg.norm(r[a * k:(a + b) * k])),
        "constraint": float(np.linalg.norm(r[(a + b) * k:])),
    }


def solve_kkt(G: NcPolyMap, tau: TraceFunctional, F: NcPolyMap, s: int, start: KktPoint,
              tol: float = 1e-12, max_iter: int = 50, h: float = 1e-6) -> KktPoint:
    """Damped Newton on the Lagrange system with a central-difference Jacobian.

    Finds a critical point; whether it is a maximum is not decided.
    """
    _check(G, tau, F)
    if start.s != s:
        raise ShapeMismatch(f"start point has size {start.s}, expected {s}")
    a, b = F.a, F.b
    z = start.to_vector()

    def r_of(v):
        return kkt_vector(G, tau, F, KktPoint.from_vector(v, s, a, b))

    r = r_of(z)
    trace = [float(np.linalg.norm(r))]
    for it in range(max_iter + 1):
        if trace[-1] <= tol:
            out = KktPoint.from_vector(z, s, a, b)
            out.info = {"iterations": it, "residuals": trace,
                        "cb_inverse_condition": "not verified across sizes"}
            try:
                la.inv(_pieces(G, tau, F, out.X, out.Y)[3], exc=SingularDifferential)
                out.info["dYF_invertible"] = True
            except SingularDifferential:
                out.info["dYF_invertible"] = False
            return out
        if it == max_iter:
            break
        J = np.empty((len(z), len(z)))
        for j in range(len(z)):
            e = np.zeros_like(z)
            e[j] = h
            J[:, j] = (r_of(z + e) - r_of(z - e)) / (2 * h)
        if not np.all(np.isfinite(J)) or np.linalg.cond(J) > 1e12:
            raise SingularKktJacobian(f"Jacobian is singular at iteration {it}")
        dz = np.linalg.solve(J, -r)
        t = 1.0
        for _ in range(12):
            cand = r_of(z + t * dz)
            if np.linalg.norm(cand) < trace[-1] or t < 1e-3:
                break
            t /= 2
        z = z + t * dz
        r = cand
        trace.append(float(np.linalg.norm(r)))
    raise MaxIterationsExceeded(f"Lagrange residual {trace[-1]:.3e} after {max_iter} Newton steps")


def ampliation_consistency(G: NcPolyMap, tau: TraceFunctional, F: NcPolyMap, p: KktPoint, m: int) -> float:
    """Norm of ``delta^X g - delta^Y g (delta^Y F)^{-1} delta^X F`` at ``(X^(m), Y^(m))``.

    This is the size-``sm`` necessary condition with the multipliers
    eliminated; for trace objectives it vanishes along with the size-``s``
    system.
    """
    _check(G, tau, F)
    Xm, Ym = ampliate(p.X, m), ampliate(p.Y, m)
    gx, gy, DXF, DYF, _ = _pieces(G, tau, F, Xm, Ym)
    Dinv = la.inv(DYF, exc=SingularDifferential)
    return float(np.linalg.norm(gx - gy @ Dinv @ DXF))


def recover_multipliers(G: NcPolyMap, tau: TraceFunctional, F: NcPolyMap, p: KktPoint) -> list:
    """Multipliers solving the ``Y`` equations: ``vec(Lambda^T) = -grad_Y g (delta^Y F)^{-1}``.

    For ``s = 1`` this is ``lambda_k = -sum_j dg/dy_j [(dF/dy)^{-1}]_{jk}``.
    """
    _check(G, tau, F)
    _, gy, _, DYF, _ = _pieces(G, tau, F, p.X, p.Y)
    lam = -gy @ la.inv(DYF, exc=SingularDifferential)
    return [M.T.copy() for M in unvec(lam, F.b, (p.s, p.s))]
