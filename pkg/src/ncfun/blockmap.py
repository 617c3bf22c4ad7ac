"""Linear maps between tuples of ``s x s`` blocks and their ampliations.

Coordinates: a tuple ``(Z_1, .., Z_b)`` of ``p x q`` matrices is flattened
component-major, each component row-major.  A :class:`LinearBlockMap` stores
``L : (F^{s x s})^b -> (F^{s x s})^c`` as a ``(c s^2) x (b s^2)`` matrix and
applies ``L^(m) = id_m (x) L`` to ``sm x sm'`` inputs block by block.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import linalg as la
from .errors import NotSquare, ShapeMismatch, SingularDifferential
from .ncalg import Direction, MatrixPoint, NcPolyMap, join
from .ncdiff import delta_r_map


def vec(mats: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([np.asarray(m).ravel() for m in mats])


def unvec(v: np.ndarray, count: int, shape: tuple) -> list[np.ndarray]:
    size = shape[0] * shape[1]
    return [np.array(v[k * size:(k + 1) * size]).reshape(shape) for k in range(count)]


def matrix_of(fn: Callable, count: int, shape: tuple, exact: bool, like=None) -> np.ndarray:
    """Matrix of a linear map on ``count``-tuples of ``shape`` matrices, column by column."""
    dim = count * shape[0] * shape[1]
    cols = []
    for j in range(dim):
        e = la.zeros(dim, exact, like)
        e[j] = 1 if not exact else la.to_fraction(1)
        cols.append(vec(fn(unvec(e, count, shape))))
    if not cols:
        return la.zeros((0, 0), exact)
    return np.stack(cols, axis=1)


@dataclass(frozen=True, eq=False)
class LinearBlockMap:
    s: int
    b: int
    c: int
    matrix: np.ndarray

    def __post_init__(self):
        want = (self.c * self.s ** 2, self.b * self.s ** 2)
        if self.matrix.shape != want:
            raise ShapeMismatch(f"matrix has shape {self.matrix.shape}, expected {want}")

    @property
    def exact(self) -> bool:
        return la.is_exact(self.matrix)

    @classmethod
    def identity(cls, s: int, b: int, exact: bool = True) -> "LinearBlockMap":
        return cls(s, b, b, la.eye(b * s * s, exact))

    @classmethod
    def from_function(cls, fn: Callable, s: int, b: int, c: int, exact: bool, like=None):
        mat = matrix_of(fn, b, (s, s), exact, like)
        return cls(s, b, c, mat)

    def apply(self, Z) -> list[np.ndarray]:
        """``L^(m)`` applied to a ``b``-tuple of ``(s m1) x (s m2)`` matrices."""
        mats = list(Z.mats) if hasattr(Z, "mats") else list(Z)
        if len(mats) != self.b:
            raise ShapeMismatch(f"expected {self.b} components, got {len(mats)}")
        s = self.s
        p, q = mats[0].shape
        if p % s or q % s:
            raise ShapeMismatch(f"shape {(p, q)} is not a multiple of block size {s}")
        m1, m2 = p // s, q // s
        arr = np.stack(mats).reshape(self.b, m1, s, m2, s).transpose(1, 3, 0, 2, 4)
        flat = arr.reshape(m1 * m2, self.b * s * s)
        mat = self.matrix
        if not self.exact and la.is_exact(flat):
            raise ShapeMismatch("exact input for a float map")
        if self.exact and not la.is_exact(flat):
            mat = la.float_array(mat)
        out = flat @ mat.T
        out = out.reshape(m1, m2, self.c, s, s).transpose(2, 0, 3, 1, 4).reshape(self.c, p, q)
        return [np.array(o) for o in out]

    def inverse(self) -> "LinearBlockMap":
        if self.b != self.c:
            raise NotSquare(f"map from {self.b} to {self.c} components has no inverse")
        return LinearBlockMap(self.s, self.c, self.b, la.inv(self.matrix, exc=SingularDifferential))

    def compose(self, other: "LinearBlockMap") -> "LinearBlockMap":
        """``self o other``."""
        if other.c != self.b or other.s != self.s:
            raise ShapeMismatch("incompatible block maps")
        return LinearBlockMap(self.s, other.b, self.c, self.matrix @ other.matrix)

    def ampliated_matrix(self, m: int) -> np.ndarray:
        """Explicit matrix of ``L^(m)`` in the coordinates of ``(F^{sm x sm})^b``."""
        size = self.s * m
        like = self.matrix if np.iscomplexobj(self.matrix) else None
        return matrix_of(self.apply, self.b, (size, size), self.exact, like)

    def to_float(self) -> "LinearBlockMap":
        return LinearBlockMap(self.s, self.b, self.c, la.float_array(self.matrix))


def partial_y_matrix(F: NcPolyMap, P: MatrixPoint, Q: MatrixPoint) -> np.ndarray:
    """Matrix of ``Z -> Delta_R F(P, Q)(0, Z)`` on ``b``-tuples of ``P.n x Q.n`` matrices."""
    a = F.a
    zero_x = [la.zeros((P.n, Q.n), P.exact, P[0]) for _ in range(a)]

    def fn(Z):
        return delta_r_map(F, P, Q, Direction(zero_x + list(Z), exact=P.exact))

    like = P[0] if np.iscomplexobj(P[0]) else None
    return matrix_of(fn, F.b, (P.n, Q.n), P.exact, like)


def partial_x_matrix(F: NcPolyMap, P: MatrixPoint, Q: MatrixPoint) -> np.ndarray:
    """Matrix of ``W -> Delta_R F(P, Q)(W, 0)`` on ``a``-tuples of ``P.n x Q.n`` matrices."""
    zero_y = [la.zeros((P.n, Q.n), P.exact, P[0]) for _ in range(F.b)]

    def fn(W):
        return delta_r_map(F, P, Q, Direction(list(W) + zero_y, exact=P.exact))

    like = P[0] if np.iscomplexobj(P[0]) else None
    return matrix_of(fn, F.a, (P.n, Q.n), P.exact, like)


def delta_ry_center(F: NcPolyMap, center: MatrixPoint) -> LinearBlockMap:
    """``Z -> Delta_R F((X0, Y0), (X0, Y0))(0, Z)`` at the joint center, checked invertible."""
    if center.d != F.num_letters:
        raise ShapeMismatch(f"center has {center.d} components, map uses {F.num_letters} letters")
    if F.c != F.b:
        raise NotSquare(f"{F.c} equations in {F.b} unknowns")
    if not F.is_exact and center.exact:
        center = center.to_float()
    L = LinearBlockMap(center.n, F.b, F.c, partial_y_matrix(F, center, center))
    L.inverse()
    return L


def delta_rx_center(F: NcPolyMap, center: MatrixPoint) -> LinearBlockMap:
    return LinearBlockMap(center.n, F.a, F.c, partial_x_matrix(F, center, center))


def joint_center(F: NcPolyMap, X0: MatrixPoint | None, Y0: MatrixPoint | None) -> MatrixPoint:
    return F.joint(X0, Y0)


__all__ = [
    "LinearBlockMap", "vec", "unvec", "matrix_of", "partial_x_matrix", "partial_y_matrix",
    "delta_ry_center", "delta_rx_center", "joint_center", "join",
]
