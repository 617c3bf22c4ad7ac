"""Initial value problems ``Y' = g(t, Y)`` with a right-hand side polynomial in ``Y``.

Time enters only through polynomial coefficients, so ``g(t, .)`` is an nc
polynomial map for every fixed ``t``.  The integrator is classical RK4 on a
uniform grid run in both directions from ``t0``; the integral-equation
residual and the variational equation give independent checks.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .blockmap import partial_y_matrix
from .errors import BlowupDetected, DomainError, ShapeMismatch
from .ncalg import MatrixPoint, NcPoly, NcPolyMap, direct_sum, eval_words, similarity
from .ncdiff import delta_r_map
from .opspace import DEFAULT_SEED, mixed_norm, ns_norm

BLOWUP = 1e8


class TimePoly:
    """``g(t, Y)``: the terms of ``base`` scaled by polynomials in ``t``.

    ``coeff_fns`` maps ``(component, word)`` to ascending ``t``-coefficients;
    terms without an entry are constant in time.
    """

    def __init__(self, base: NcPolyMap, coeff_fns: dict | None = None):
        if base.a != 0:
            raise ShapeMismatch("the right-hand side may only use Y letters")
        if base.c != base.b:
            raise ShapeMismatch(f"{base.c} components for {base.b} unknowns")
        self.base = base.to_float() if base.is_exact else base
        self.coeff_fns = {}
        for (k, w), cs in (coeff_fns or {}).items():
            w = tuple(w)
            if w not in self.base.components[k].terms:
                raise ShapeMismatch(f"word {w} does not occur in component {k}")
            self.coeff_fns[(k, w)] = tuple(float(c) for c in cs)

    @classmethod
    def parse(cls, exprs, letters, coeff_fns: dict | None = None) -> "TimePoly":
        return cls(NcPolyMap.parse(exprs, [], letters), coeff_fns)

    @property
    def b(self) -> int:
        return self.base.b

    def _terms(self, k: int, t: float) -> dict:
        terms = dict(self.base.components[k].terms)
        for (j, w), cs in self.coeff_fns.items():
            if j == k:
                terms[w] = terms[w] * float(np.polynomial.polynomial.polyval(t, cs))
        return terms

    def at(self, t: float) -> NcPolyMap:
        comps = [NcPoly(self.b, self._terms(k, t)) for k in range(self.base.c)]
        return NcPolyMap(comps, (0, self.b))

    def __call__(self, t: float, Y: MatrixPoint) -> list[np.ndarray]:
        return [eval_words(self._terms(k, t), Y.mats, False, Y.n) for k in range(self.base.c)]


def _pt(mats) -> MatrixPoint:
    return MatrixPoint(list(mats), exact=False)


def _axpy(Y: MatrixPoint, h: float, K) -> MatrixPoint:
    return _pt(y + h * k for y, k in zip(Y.mats, K))


@dataclass
class Trajectory:
    """Grid solution on ``[t0 - delta, t0 + delta]`` with derivative samples at the nodes."""

    t0: float
    delta: float
    times: np.ndarray
    values: list
    derivs: list
    X: MatrixPoint
    meta: dict = field(default_factory=dict)

    @property
    def start(self) -> int:
        return int(np.argmin(np.abs(self.times - self.t0)))

    @property
    def endpoint(self) -> MatrixPoint:
        return self.values[-1]

    def index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-12 * max(1.0, abs(t)):
            raise DomainError(f"t = {t} is not a grid node")
        return k

    def at(self, t: float) -> MatrixPoint:
        """Cubic Hermite interpolation between the bracketing nodes."""
        ts = self.times
        if t < ts[0] - 1e-12 or t > ts[-1] + 1e-12:
            raise DomainError(f"t = {t} is outside [{ts[0]}, {ts[-1]}]")
        k = int(np.clip(np.searchsorted(ts, t) - 1, 0, len(ts) - 2))
        return hermite(ts[k], ts[k + 1], self.values[k], self.values[k + 1],
                       self.derivs[k], self.derivs[k + 1], t)

    def c1_norm(self) -> float:
        """``max(||Y||_inf, ||Y'||_inf)`` sampled on the grid."""
        return max(max(ns_norm(v) for v in self.values), max(ns_norm(d) for d in self.derivs))


def hermite(ta, tb, ya, yb, da, db, t) -> MatrixPoint:
    h = tb - ta
    s = (t - ta) / h
    h00 = 2 * s ** 3 - 3 * s ** 2 + 1
    h10 = s ** 3 - 2 * s ** 2 + s
    h01 = -2 * s ** 3 + 3 * s ** 2
    h11 = s ** 3 - s ** 2
    return _pt(h00 * a + h10 * h * p + h01 * b + h11 * h * q
               for a, b, p, q in zip(ya.mats, yb.mats, da.mats, db.mats))


def _check_size(Y: MatrixPoint):
    size = ns_norm(Y)
    if not np.isfinite(size) or size > BLOWUP:
        raise BlowupDetected(f"solution norm {size:.3e} exceeds {BLOWUP:.0e}")


def _rk4(g: TimePoly, t0: float, X: MatrixPoint, h: float, steps: int):
    ts, ys = [t0], [X]
    Y, t = X, t0
    for _ in range(steps):
        k1 = g(t, Y)
        k2 = g(t + h / 2, _axpy(Y, h / 2, k1))
        k3 = g(t + h / 2, _axpy(Y, h / 2, k2))
        k4 = g(t + h, _axpy(Y, h, k3))
        Y = _pt(y + h / 6 * (a + 2 * b + 2 * c + d) for y, a, b, c, d in zip(Y.mats, k1, k2, k3, k4))
        _check_size(Y)
        t = t + h
        ts.append(t)
        ys.append(Y)
    return ts, ys


def integrate_ivp(g: TimePoly, t0: float, X: MatrixPoint, delta: float, steps: int = 64) -> Trajectory:
    """RK4 with ``steps`` uniform steps each way from ``t0``; ``Y(t0) = X``."""
    if steps < 16:
        raise DomainError("steps must be at least 16")
    if delta <= 0:
        raise DomainError("delta must be positive")
    if X.d != g.b:
        raise ShapeMismatch(f"X has {X.d} components, g has {g.b} letters")
    X = X.to_float() if X.exact else X
    h = delta / steps
    tf, yf = _rk4(g, t0, X, h, steps)
    tb, yb = _rk4(g, t0, X, -h, steps)
    times = np.array(tb[::-1] + tf[1:])
    values = yb[::-1] + yf[1:]
    derivs = [_pt(g(t, Y)) for t, Y in zip(times, values)]
    return Trajectory(t0=t0, delta=delta, times=times, values=values, derivs=derivs, X=X,
                      meta={"steps": steps, "h": h})


def trajectory_from_function(fn, g: TimePoly, t0: float, X: MatrixPoint, delta: float,
                             steps: int = 64) -> Trajectory:
    """Tabulate a given ``fn(t) -> MatrixPoint`` on the integrator's grid."""
    times = t0 + delta * np.linspace(-1.0, 1.0, 2 * steps + 1)
    values = [fn(t) for t in times]
    derivs = [_pt(g(t, Y)) for t, Y in zip(times, values)]
    return Trajectory(t0=t0, delta=delta, times=times, values=values, derivs=derivs, X=X,
                      meta={"steps": steps, "h": delta / steps})


def ivp_residual(g: TimePoly, t0: float, X: MatrixPoint, traj: Trajectory) -> float:
    """``max_k ||Y(t_k) - X - int_{t0}^{t_k} g(s, Y(s)) ds||`` with Simpson on each cell.

    Slopes are recomputed from ``g`` and midpoints come from Hermite
    interpolation, so a corrupted node shows up in the residual.
    """
    X = X.to_float() if X.exact else X
    ts, ys = traj.times, traj.values
    if traj.start >= len(ts) or abs(ts[traj.start] - t0) > 1e-12 * max(1.0, abs(t0)):
        raise ShapeMismatch("trajectory grid does not contain t0")
    ds = [_pt(g(t, Y)) for t, Y in zip(ts, ys)]
    cell = []
    for k in range(len(ts) - 1):
        mid_t = 0.5 * (ts[k] + ts[k + 1])
        mid = hermite(ts[k], ts[k + 1], ys[k], ys[k + 1], ds[k], ds[k + 1], mid_t)
        gm = g(mid_t, mid)
        h = ts[k + 1] - ts[k]
        cell.append([h / 6 * (a + 4 * m + b) for a, m, b in zip(ds[k].mats, gm, ds[k + 1].mats)])
    k0 = traj.start
    worst = ns_norm([y - x for y, x in zip(ys[k0].mats, X.mats)])
    acc = [np.zeros_like(x) for x in X.mats]
    for k in range(k0, len(ts) - 1):
        acc = [a + c for a, c in zip(acc, cell[k])]
        worst = max(worst, ns_norm([y - x - a for y, x, a in zip(ys[k + 1].mats, X.mats, acc)]))
    acc = [np.zeros_like(x) for x in X.mats]
    for k in range(k0 - 1, -1, -1):
        acc = [a - c for a, c in zip(acc, cell[k])]
        worst = max(worst, ns_norm([y - x - a for y, x, a in zip(ys[k].mats, X.mats, acc)]))
    return worst


def _variation(g: TimePoly, t: float, Y: MatrixPoint, Z) -> list[np.ndarray]:
    return delta_r_map(g.at(t), Y, Y, _pt(Z))


def flow_sensitivity(g: TimePoly, traj: Trajectory, H: MatrixPoint, forcing=None,
                     t_end: float | None = None) -> MatrixPoint:
    """``Z(t_end)`` for ``Z' = delta^Y g(t, Y(t))(Z) + G'(t)``, ``Z(t0) = H``.

    ``forcing`` is an optional callable returning ``G'(t)`` as a list of
    matrices; without it ``G`` is the constant ``H``.  ``t_end`` defaults to
    the right end of the window and must be a grid node.
    """
    X = traj.X
    if H.d != X.d or H.shape != X.shape:
        raise ShapeMismatch(f"direction must be {X.d} matrices of size {X.n}")
    H = H.to_float() if H.exact else H
    end = len(traj.times) - 1 if t_end is None else traj.index(t_end)
    k0 = traj.start
    ts = traj.times
    step = 1 if end >= k0 else -1
    Z = H

    def rhs(t, Y, Zc):
        out = _variation(g, t, Y, Zc)
        if forcing is not None:
            out = [o + np.asarray(f, dtype=o.dtype) for o, f in zip(out, forcing(t))]
        return out

    for k in range(k0, end, step):
        t, h = ts[k], ts[k + step] - ts[k]
        Ya, Yb = traj.values[k], traj.values[k + step]
        Ym = traj.at(t + h / 2)
        k1 = rhs(t, Ya, Z.mats)
        k2 = rhs(t + h / 2, Ym, _axpy(Z, h / 2, k1).mats)
        k3 = rhs(t + h / 2, Ym, _axpy(Z, h / 2, k2).mats)
        k4 = rhs(t + h, Yb, _axpy(Z, h, k3).mats)
        Z = _pt(z + h / 6 * (a + 2 * b + 2 * c + d) for z, a, b, c, d in zip(Z.mats, k1, k2, k3, k4))
    return Z


def kappa_delta_report(g: TimePoly, traj: Trajectory, seed: int = DEFAULT_SEED, warn: bool = True) -> dict:
    """Estimate ``kappa = max_t ||delta^Y g(t, Y(t))||`` on the grid and the resulting bound.

    The operator norm is a sampled lower estimate at the trajectory's own
    size; the bound ``(1 - kd + k) / (1 - kd)`` is reported only when
    ``kappa * delta < 1``.
    """
    rng = np.random.default_rng(seed)
    n, b = traj.X.n, g.b
    kappa = 0.0
    for t, Y in zip(traj.times, traj.values):
        A = partial_y_matrix(g.at(t), Y, Y)
        v, _ = mixed_norm(A, b, (n, n), b, (n, n), rng, trials=2, iters=30)
        kappa = max(kappa, v)
    kd = kappa * traj.delta
    ok = kd < 1
    if not ok and warn:
        warnings.warn(f"kappa * delta = {kd:.3g} >= 1; shrink the window", RuntimeWarning, stacklevel=2)
    return {
        "kappa": kappa,
        "delta": traj.delta,
        "kappa_delta": kd,
        "condition_met": ok,
        "cb_bound": (1 - kd + kappa) / (1 - kd) if ok else None,
        "c1_norm": traj.c1_norm(),
        "c1_norm_note": "grid-sampled",
    }


def _flow(g, t0, delta, X, steps):
    return integrate_ivp(g, t0, X, delta, steps).endpoint


def flow_nc_check(g: TimePoly, t0: float, delta: float, samples: int = 3, n: int = 2, steps: int = 64,
                  seed: int = DEFAULT_SEED, scale: float = 0.3, X=None, S=None) -> dict:
    """Direct-sum and similarity covariance of the time-``(t0 + delta)`` flow map.

    Random ``X``, ``X'`` and ``S`` are drawn unless ``X`` / ``S`` are given.
    """
    rng = np.random.default_rng(seed)
    b = g.b
    worst_sum = worst_sim = 0.0
    ok = True
    rows = []

    def rand_point(size):
        U = [rng.standard_normal((size, size)) for _ in range(b)]
        return _pt(scale * u / max(ns_norm(U), 1e-300) for u in U)

    for _ in range(samples):
        A = X.to_float() if X is not None and X.exact else (X if X is not None else rand_point(n))
        B = rand_point(A.n)
        fa, fb = _flow(g, t0, delta, A, steps), _flow(g, t0, delta, B, steps)
        fab = _flow(g, t0, delta, direct_sum(A, B), steps)
        e_sum = ns_norm([p - q for p, q in zip(fab.mats, direct_sum(fa, fb).mats)])
        if S is None:
            T = np.eye(A.n) + 0.3 * rng.standard_normal((A.n, A.n)) / np.sqrt(A.n)
        else:
            T = la.float_array(S)
        cond = float(np.linalg.cond(T))
        fs = _flow(g, t0, delta, similarity(A, T), steps)
        e_sim = ns_norm([p - q for p, q in zip(fs.mats, similarity(fa, T).mats)])
        good = e_sum <= 1e-9 and e_sim <= 1e-6 * cond
        ok &= good
        worst_sum, worst_sim = max(worst_sum, e_sum), max(worst_sim, e_sim)
        rows.append({"direct_sum_err": e_sum, "similarity_err": e_sim, "cond": cond, "ok": good})
    return {"ok": ok, "direct_sum_err": worst_sum, "similarity_err": worst_sim, "samples": rows}
