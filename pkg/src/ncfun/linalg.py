"""Matrix kernels: exact rationals (object arrays of Fraction) and binary64.

A matrix is exact iff its dtype is ``object``; all entries are then
:class:`fractions.Fraction`.  Float matrices are ``float64`` or ``complex128``.
The helpers here never mix the two.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import KernelMismatch, ShapeMismatch

FLOAT_ATOL = 1e-12


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer, Rational)):
        return Fraction(int(x)) if isinstance(x, (int, np.integer)) else Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x))
    raise TypeError(f"cannot convert {x!r} to an exact rational")


def is_exact(a: np.ndarray) -> bool:
    return a.dtype == object


def exact_array(rows) -> np.ndarray:
    a = np.array(rows, dtype=object)
    flat = [to_fraction(x) for x in a.ravel()]
    out = np.empty(a.shape, dtype=object)
    out.ravel()[:] = flat if flat else []
    return out


def float_array(rows) -> np.ndarray:
    a = np.asarray(rows)
    if a.dtype == object:
        vals = [complex(x) if isinstance(x, complex) else float(x) for x in a.ravel()]
        a = np.array(vals).reshape(a.shape)
    if np.iscomplexobj(a):
        return a.astype(np.complex128)
    return a.astype(np.float64)


def as_kernel(a, exact: bool) -> np.ndarray:
    return exact_array(a) if exact else float_array(a)


def zeros(shape, exact: bool, like: np.ndarray | None = None) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    dtype = like.dtype if like is not None and np.iscomplexobj(like) else np.float64
    return np.zeros(shape, dtype=dtype)


def eye(n: int, exact: bool) -> np.ndarray:
    out = zeros((n, n), exact)
    for i in range(n):
        out[i, i] = Fraction(1) if exact else 1.0
    return out


def same_kernel(*arrays) -> bool:
    """Return the common kernel flag; raise on a mix."""
    flags = {is_exact(a) for a in arrays}
    if len(flags) > 1:
        raise KernelMismatch("exact and float matrices cannot be mixed")
    return flags.pop() if flags else True


def coerce_scalar(c, exact: bool):
    if exact:
        if isinstance(c, (float, complex)):
            raise KernelMismatch(f"float coefficient {c!r} used with an exact matrix")
        return to_fraction(c)
    if isinstance(c, complex):
        return c
    return float(c)


def is_zero(a: np.ndarray, atol: float = FLOAT_ATOL) -> bool:
    if is_exact(a):
        return all(x == 0 for x in a.ravel())
    return a.size == 0 or float(np.max(np.abs(a))) <= atol


def block_diag(*mats) -> np.ndarray:
    exact = same_kernel(*mats)
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    like = next((m for m in mats if np.iscomplexobj(m)), None)
    out = zeros((rows, cols), exact, like)
    r = c = 0
    for m in mats:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out


def _rref_inverse(a: np.ndarray):
    """Gauss-Jordan over Fractions. Returns the inverse or None when singular."""
    n = a.shape[0]
    m = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        out[i, :] = m[i][n:]
    return out


def inv(a: np.ndarray, exc=np.linalg.LinAlgError, cond_max: float = 1e14) -> np.ndarray:
    """Inverse of a square matrix; raises ``exc`` when singular."""
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"cannot invert a {a.shape} array")
    if a.shape[0] == 0:
        return a.copy()
    if is_exact(a):
        out = _rref_inverse(a)
        if out is None:
            raise exc("matrix is singular (exact rank deficiency)")
        return out
    if not np.all(np.isfinite(a)) or np.linalg.cond(a) > cond_max:
        raise exc("matrix is numerically singular")
    return np.linalg.inv(a)


def rank(a: np.ndarray, atol: float = 1e-10) -> int:
    if a.size == 0:
        return 0
    if not is_exact(a):
        return int(np.linalg.matrix_rank(a, tol=atol))
    rows = [list(r) for r in a]
    rk, ncols = 0, a.shape[1]
    for col in range(ncols):
        piv = next((r for r in range(rk, len(rows)) if rows[r][col] != 0), None)
        if piv is None:
            continue
        rows[rk], rows[piv] = rows[piv], rows[rk]
        p = rows[rk][col]
        for r in range(rk + 1, len(rows)):
            if rows[r][col] != 0:
                f = rows[r][col] / p
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[rk])]
        rk += 1
    return rk


class SpanBasis:
    """Incrementally maintained basis of a span of flattened matrices.

    Exact mode keeps an echelon form over Fractions; float mode keeps an
    orthonormal basis and admits a vector when its residual exceeds ``atol``
    relative to its norm.
    """

    def __init__(self, exact: bool, atol: float = 1e-10):
        self.exact = exact
        self.atol = atol
        self.rows: list = []
        self.pivots: list[int] = []
        self.members: list[np.ndarray] = []

    def __len__(self):
        return len(self.members)

    def add(self, mat: np.ndarray) -> bool:
        v = mat.ravel()
        if self.exact:
            v = list(v)
            for row, p in zip(self.rows, self.pivots):
                if v[p] != 0:
                    f = v[p] / row[p]
                    v = [x - f * y for x, y in zip(v, row)]
            p = next((i for i, x in enumerate(v) if x != 0), None)
            if p is None:
                return False
            self.rows.append(v)
            self.pivots.append(p)
        else:
            v = np.asarray(v, dtype=complex if np.iscomplexobj(v) else float)
            scale = np.linalg.norm(v)
            if scale <= self.atol:
                return False
            w = v.copy()
            for q in self.rows:
                w = w - np.vdot(q, w) * q
            if np.linalg.norm(w) <= self.atol * max(1.0, scale):
                return False
            self.rows.append(w / np.linalg.norm(w))
        self.members.append(mat)
        return True
