"""Right difference-differential operators and Taylor-Taylor expansions.

Two independent routes compute the same quantities:

* block evaluation: substitute a block upper (bi)diagonal point and read off
  the top-right block;
* symbolic expansion: each word ``x_{w1}...x_{wk}`` contributes every way of
  replacing ``l`` of its letters by direction matrices, letters before the
  first replacement taken from the first point, and so on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg as la
from .errors import ComponentCountMismatch, LetterCountMismatch, ShapeMismatch
from .ncalg import (
    Direction,
    MatrixPoint,
    NcPoly,
    NcPolyMap,
    eval_poly,
    eval_words,
    shift_poly,
)


def _as_direction(Z) -> Direction:
    return Z if isinstance(Z, Direction) else Direction(Z.mats if hasattr(Z, "mats") else Z)


def _check_chain(p: NcPoly, points: Sequence[MatrixPoint], dirs: Sequence[Direction]):
    if len(points) != len(dirs) + 1:
        raise ShapeMismatch(f"{len(points)} points need {len(points) - 1} directions, got {len(dirs)}")
    for P in points:
        if P.d != p.num_letters:
            raise LetterCountMismatch(f"point has {P.d} components, polynomial {p.num_letters} letters")
    for k, Z in enumerate(dirs):
        if Z.d != p.num_letters:
            raise ComponentCountMismatch(f"direction has {Z.d} components, polynomial {p.num_letters} letters")
        want = (points[k].n, points[k + 1].n)
        if Z.shape != want:
            raise ShapeMismatch(f"direction {k + 1} has shape {Z.shape}, expected {want}")
    la.same_kernel(*(P[0] for P in points), *(Z[0] for Z in dirs))


def bidiagonal_point(points: Sequence[MatrixPoint], dirs: Sequence[Direction]) -> MatrixPoint:
    """Block upper bidiagonal point with ``points`` on the diagonal and ``dirs`` above it."""
    sizes = [P.n for P in points]
    offs = np.concatenate([[0], np.cumsum(sizes)])
    N = int(offs[-1])
    exact = points[0].exact
    like = next((a for P in list(points) + list(dirs) for a in P.mats if np.iscomplexobj(a)), None)
    mats = []
    for i in range(points[0].d):
        big = la.zeros((N, N), exact, like)
        for k, P in enumerate(points):
            big[offs[k]:offs[k + 1], offs[k]:offs[k + 1]] = P[i]
        for k, Z in enumerate(dirs):
            big[offs[k]:offs[k + 1], offs[k + 1]:offs[k + 2]] = Z[i]
        mats.append(big)
    return MatrixPoint(mats, exact=exact)


def delta_r_higher(p: NcPoly, points: Sequence[MatrixPoint], dirs: Sequence) -> np.ndarray:
    """``Delta_R^l p(X^0..X^l)(Z^1..Z^l)`` as the top-right block of ``p`` on the bidiagonal point."""
    dirs = [_as_direction(Z) for Z in dirs]
    _check_chain(p, points, dirs)
    if not dirs:
        return eval_poly(p, points[0])
    big = eval_poly(p, bidiagonal_point(points, dirs))
    n0, nl = points[0].n, points[-1].n
    return big[:n0, big.shape[1] - nl:]


def delta_r_block(p: NcPoly, X: MatrixPoint, Y: MatrixPoint, Z) -> np.ndarray:
    """``Delta_R p(X, Y)(Z)``: the (1,2) block of ``p([[X, Z], [0, Y]])``."""
    return delta_r_higher(p, [X, Y], [Z])


def delta_r_higher_sym(p: NcPoly, points: Sequence[MatrixPoint], dirs: Sequence) -> np.ndarray:
    """Symbolic route for ``Delta_R^l``: sum over placements of the directions inside each word."""
    dirs = [_as_direction(Z) for Z in dirs]
    _check_chain(p, points, dirs)
    ell = len(dirs)
    exact = points[0].exact
    n0, nl = points[0].n, points[-1].n
    like = next((a for P in list(points) + list(dirs) for a in P.mats if np.iscomplexobj(a)), None)
    out = la.zeros((n0, nl), exact, like)
    for w, c in p.terms.items():
        if len(w) < ell:
            continue
        # acc[k]: sum of products over prefixes with k directions already placed
        acc = [la.eye(n0, exact)] + [None] * ell
        for letter in w:
            new = [None] * (ell + 1)
            for k in range(ell + 1):
                terms = []
                if acc[k] is not None:
                    terms.append(acc[k] @ points[k][letter])
                if k > 0 and acc[k - 1] is not None:
                    terms.append(acc[k - 1] @ dirs[k - 1][letter])
                if terms:
                    new[k] = terms[0] if len(terms) == 1 else terms[0] + terms[1]
            acc = new
        if acc[ell] is not None:
            out = out + la.coerce_scalar(c, exact) * acc[ell]
    return out


def delta_r_sym(p: NcPoly, X: MatrixPoint, Y: MatrixPoint, Z) -> np.ndarray:
    """``Delta_R p(X, Y)(Z)`` via ``sum_j X_{w1}..X_{w(j-1)} Z_{wj} Y_{w(j+1)}..Y_{wk}``."""
    return delta_r_higher_sym(p, [X, Y], [Z])


def gateaux(p: NcPoly, X: MatrixPoint, Z) -> np.ndarray:
    """Directional derivative ``delta p(X)(Z) = Delta_R p(X, X)(Z)``."""
    return delta_r_block(p, X, X, Z)


def delta_r_map(F: NcPolyMap, P: MatrixPoint, Q: MatrixPoint, Z) -> list[np.ndarray]:
    """Componentwise ``Delta_R F(P, Q)(Z)`` on joint points, evaluated once on the block point."""
    Z = _as_direction(Z)
    big = bidiagonal_point([P, Q], [Z])
    n = P.n
    return [eval_poly(f, big)[:n, n:] for f in F.components]


def first_order_identity_residual(p: NcPoly, X: MatrixPoint, Y: MatrixPoint, S) -> np.ndarray:
    """``S p(Y) - p(X) S - Delta_R p(X, Y)(S Y - X S)`` for ``S`` of shape ``n x m``.

    Zero for every polynomial; with ``X`` of size ``n`` and ``Y`` of size ``m``
    this is the operand order under which the shapes conform.
    """
    S = la.as_kernel(S, X.exact)
    if S.shape != (X.n, Y.n):
        raise ShapeMismatch(f"S has shape {S.shape}, expected {(X.n, Y.n)}")
    Z = Direction([S @ y - x @ S for x, y in zip(X.mats, Y.mats)], exact=X.exact)
    return S @ eval_poly(p, Y) - eval_poly(p, X) @ S - delta_r_block(p, X, Y, Z)


# ---------------------------------------------------------------- Taylor-Taylor series

@dataclass(frozen=True)
class TTSeries:
    """Homogeneous parts of ``p`` in the shifted letters ``u = x - c`` about a scalar center."""

    center: MatrixPoint
    parts: tuple

    @property
    def order(self) -> int:
        return len(self.parts) - 1


def tt_coefficients(p: NcPoly, c: MatrixPoint) -> TTSeries:
    q = shift_poly(p, c)
    top = max(q.degree, 0)
    return TTSeries(center=c, parts=tuple(q.homogeneous(ell) for ell in range(top + 1)))


def _shifted(X: MatrixPoint, c: MatrixPoint) -> MatrixPoint:
    vals = c.scalars()
    ident = la.eye(X.n, X.exact)
    return MatrixPoint([x - la.coerce_scalar(v, X.exact) * ident for x, v in zip(X.mats, vals)],
                       exact=X.exact)


def tt_evaluate(tt: TTSeries, X: MatrixPoint, up_to: int | None = None) -> np.ndarray:
    """Partial sum ``sum_{l <= up_to} part_l(X - c)``."""
    if X.d != tt.center.d:
        raise LetterCountMismatch(f"point has {X.d} components, series {tt.center.d} letters")
    U = _shifted(X, tt.center)
    top = tt.order if up_to is None else min(up_to, tt.order)
    terms: dict = {}
    for ell in range(top + 1):
        terms.update(tt.parts[ell].terms)
    return eval_words(terms, U.mats, U.exact, U.n)


def tt_remainder(p: NcPoly, c: MatrixPoint, X: MatrixPoint, N: int) -> np.ndarray:
    """Remainder ``Delta_R^{N+1} p(c,..,c, X)(X - c, .., X - c)`` of the order-``N`` expansion."""
    vals = c.scalars()
    C = MatrixPoint([la.coerce_scalar(v, X.exact) * la.eye(X.n, X.exact) for v in vals], exact=X.exact)
    U = _shifted(X, c)
    return delta_r_higher(p, [C] * (N + 1) + [X], [Direction(U.mats)] * (N + 1))
