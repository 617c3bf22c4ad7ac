"""Noncommutative polynomial functions on matrix tuples: evaluation, difference-differential
calculus, exact nilpotent and numeric implicit/inverse solvers, ODE flows and trace extremals."""

__version__ = "0.1.0"

from .errors import DomainError, NcError, SchemaError  # noqa: E402
from .ncalg import (  # noqa: E402
    Direction,
    MatrixPoint,
    NcPoly,
    NcPolyMap,
    ampliate,
    direct_sum,
    eval_poly,
    scalar_center,
    shift_poly,
    similarity,
)

__all__ = [
    "NcError", "SchemaError", "DomainError", "NcPoly", "NcPolyMap", "MatrixPoint", "Direction",
    "eval_poly", "direct_sum", "ampliate", "similarity", "shift_poly", "scalar_center",
]
