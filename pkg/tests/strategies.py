"""Hypothesis strategies for exact polynomials and points."""
from fractions import Fraction

from hypothesis import strategies as st

from ncfun import linalg as la
from ncfun.ncalg import MatrixPoint, NcPoly

rationals = st.builds(Fraction, st.integers(-9, 9), st.integers(1, 9))


def words(d, deg):
    return st.lists(st.integers(0, d - 1), max_size=deg).map(tuple)


@st.composite
def polys(draw, d, deg=4, max_terms=5):
    terms = draw(st.dictionaries(words(d, deg), rationals, min_size=1, max_size=max_terms))
    return NcPoly(d, terms)


@st.composite
def matrices(draw, rows, cols):
    return la.exact_array([[draw(rationals) for _ in range(cols)] for _ in range(rows)])


@st.composite
def points(draw, d, n):
    return MatrixPoint([draw(matrices(n, n)) for _ in range(d)], exact=True)


@st.composite
def invertible(draw, n):
    """Unit lower times unit upper triangular: always invertible."""
    lo, up = la.eye(n, True), la.eye(n, True)
    for i in range(n):
        for j in range(n):
            if i > j:
                lo[i, j] = draw(rationals)
            elif i < j:
                up[i, j] = draw(rationals)
    return lo @ up
