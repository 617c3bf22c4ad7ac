"""Free-algebra polynomials and matrix tuples.

An :class:`NcPoly` in ``d`` letters is a sparse map from words (tuples of
letter indices) to coefficients.  A :class:`MatrixPoint` is a ``d``-tuple of
square matrices of one size; substituting it into a polynomial gives a
matrix.  Everything is immutable.
"""
from __future__ import annotations

import re
from fractions import Fraction
from numbers import Number
from typing import Iterable, Sequence

import numpy as np

from . import linalg as la
from .errors import (
    ComponentCountMismatch,
    DomainError,
    KernelMismatch,
    LetterCountMismatch,
    NonScalarCenter,
    SchemaError,
    ShapeMismatch,
    SingularSimilarity,
)

Word = tuple  # tuple[int, ...]


def _canon_coeff(c):
    if isinstance(c, (bool, np.bool_)):
        raise TypeError("boolean coefficient")
    if isinstance(c, (complex, np.complexfloating)):
        return complex(c) if complex(c).imag != 0 else float(complex(c).real)
    if isinstance(c, (float, np.floating)):
        return float(c)
    return la.to_fraction(c)


def _is_float_coeff(c) -> bool:
    return isinstance(c, (float, complex))


class NcPoly:
    """Polynomial in noncommuting letters ``0..num_letters-1``."""

    __slots__ = ("num_letters", "terms")

    def __init__(self, num_letters: int, terms=None):
        if num_letters < 0:
            raise DomainError("num_letters must be >= 0")
        merged: dict = {}
        for word, c in dict(terms or {}).items():
            word = tuple(int(i) for i in word)
            if any(i < 0 or i >= num_letters for i in word):
                raise LetterCountMismatch(f"word {word} uses a letter outside 0..{num_letters - 1}")
            merged[word] = merged.get(word, 0) + _canon_coeff(c)
        if any(_is_float_coeff(c) for c in merged.values()):
            merged = {w: (c if isinstance(c, complex) else float(c)) for w, c in merged.items()}
        object.__setattr__(self, "num_letters", num_letters)
        object.__setattr__(self, "terms", {w: c for w, c in merged.items() if c != 0})

    def __setattr__(self, name, value):
        raise AttributeError("NcPoly is immutable")

    # constructors
    @classmethod
    def var(cls, i: int, num_letters: int) -> "NcPoly":
        return cls(num_letters, {(i,): 1})

    @classmethod
    def const(cls, c, num_letters: int) -> "NcPoly":
        return cls(num_letters, {(): c})

    @classmethod
    def zero(cls, num_letters: int) -> "NcPoly":
        return cls(num_letters)

    @classmethod
    def parse(cls, expr: str, letters: Sequence[str]) -> "NcPoly":
        return _Parser(expr, list(letters)).parse()

    # queries
    @property
    def is_exact(self) -> bool:
        return not any(_is_float_coeff(c) for c in self.terms.values())

    @property
    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=-1)

    def homogeneous(self, ell: int) -> "NcPoly":
        return NcPoly(self.num_letters, {w: c for w, c in self.terms.items() if len(w) == ell})

    def is_homogeneous(self, ell: int) -> bool:
        return all(len(w) == ell for w in self.terms)

    def coeff(self, word: Iterable[int]):
        return self.terms.get(tuple(word), 0)

    def to_float(self) -> "NcPoly":
        return NcPoly(self.num_letters, {w: (c if isinstance(c, complex) else float(c))
                                         for w, c in self.terms.items()})

    # arithmetic
    def _check(self, other: "NcPoly"):
        if other.num_letters != self.num_letters:
            raise LetterCountMismatch(f"{self.num_letters} vs {other.num_letters} letters")

    def _lift(self, other) -> "NcPoly":
        if isinstance(other, NcPoly):
            self._check(other)
            return other
        if isinstance(other, (Number, str)):
            return NcPoly.const(other, self.num_letters)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for w, c in other.terms.items():
            terms[w] = terms.get(w, 0) + c
        return NcPoly(self.num_letters, terms)

    __radd__ = __add__

    def __neg__(self):
        return NcPoly(self.num_letters, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (Number, str)):
            c = _canon_coeff(other)
            return NcPoly(self.num_letters, {w: a * c for w, a in self.terms.items()})
        other = self._lift(other)
        if other is NotImplemented:
            return other
        terms: dict = {}
        for w1, a in self.terms.items():
            for w2, b in other.terms.items():
                w = w1 + w2
                terms[w] = terms.get(w, 0) + a * b
        return NcPoly(self.num_letters, terms)

    def __rmul__(self, other):
        if isinstance(other, (Number, str)):
            return self * other
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            raise DomainError("negative power")
        out = NcPoly.const(1, self.num_letters)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, NcPoly):
            return NotImplemented
        return self.num_letters == other.num_letters and self.terms == other.terms

    def __hash__(self):
        return hash((self.num_letters, frozenset(self.terms.items())))

    def compose(self, subs: Sequence["NcPoly"]) -> "NcPoly":
        """Substitute ``subs[i]`` for letter ``i``; result lives in the subs' letters."""
        if len(subs) != self.num_letters:
            raise LetterCountMismatch(f"need {self.num_letters} substitutions, got {len(subs)}")
        if not subs:
            return NcPoly(0, self.terms)
        d = subs[0].num_letters
        if any(s.num_letters != d for s in subs):
            raise LetterCountMismatch("substitutions disagree on letter count")
        cache: dict = {(): NcPoly.const(1, d)}

        def word_value(w):
            if w not in cache:
                cache[w] = word_value(w[:-1]) * subs[w[-1]]
            return cache[w]

        out = NcPoly.zero(d)
        for w in sorted(self.terms, key=len):
            out = out + word_value(w) * self.terms[w]
        return out

    def embed(self, num_letters: int, offset: int = 0) -> "NcPoly":
        """Same polynomial with letter ``i`` renamed to ``i + offset`` in a larger alphabet."""
        return NcPoly(num_letters, {tuple(i + offset for i in w): c for w, c in self.terms.items()})

    def format(self, letters: Sequence[str] | None = None) -> str:
        letters = letters or [f"x{i}" for i in range(self.num_letters)]
        if not self.terms:
            return "0"
        parts = []
        for w in sorted(self.terms, key=lambda w: (len(w), w)):
            c = self.terms[w]
            mono = "*".join(letters[i] for i in w)
            if not mono:
                parts.append(f"({c})")
            elif c == 1:
                parts.append(mono)
            else:
                parts.append(f"({c})*{mono}")
        return " + ".join(parts)

    def __repr__(self):
        return f"NcPoly({self.num_letters}, {self.format()!r})"


class _Parser:
    """Recursive-descent parser for expressions like ``"y0 - x0 - 1/2*y0^2"``.

    Numeric literals are exact (decimals included); ``/`` only divides by a
    numeric literal.
    """

    _token = re.compile(r"\s*(?:(\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")

    def __init__(self, text: str, letters: list[str]):
        self.text = text
        self.letters = {name: i for i, name in enumerate(letters)}
        self.d = len(letters)
        self.toks = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = self._token.match(text, pos)
            if not m:
                raise SchemaError(f"unexpected character at position {pos} in {text!r}")
            num, ident, op = m.groups()
            self.toks.append(("num", num) if num else ("id", ident) if ident else ("op", "^" if op == "**" else op))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse(self) -> NcPoly:
        p = self.expr()
        if self.i != len(self.toks):
            raise SchemaError(f"trailing tokens in {self.text!r}")
        return p

    def expr(self):
        p = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            if op == "*":
                p = p * self.unary()
            else:
                kind, val = self.take()
                if kind != "num":
                    raise SchemaError("division is only allowed by a numeric literal")
                p = p * (1 / Fraction(val))
        return p

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return -self.unary()
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        p = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, val = self.take()
            if kind != "num" or not val.isdigit():
                raise SchemaError("exponent must be a non-negative integer")
            p = p ** int(val)
        return p

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return NcPoly.const(Fraction(val), self.d)
        if kind == "id":
            if val not in self.letters:
                raise SchemaError(f"unknown letter {val!r}; letters are {list(self.letters)}")
            return NcPoly.var(self.letters[val], self.d)
        if (kind, val) == ("op", "("):
            p = self.expr()
            if self.take() != ("op", ")"):
                raise SchemaError("missing ')'")
            return p
        raise SchemaError(f"unexpected token {val!r} in {self.text!r}")


# ---------------------------------------------------------------- matrix tuples

def _convert(m, exact):
    if isinstance(m, np.ndarray) and exact is None:
        exact = la.is_exact(m)
    if exact is None:
        flat = np.array(m, dtype=object).ravel()
        exact = all(isinstance(x, (int, Fraction, str, np.integer)) and not isinstance(x, bool) for x in flat)
    return la.as_kernel(m, exact)


class MatrixTuple:
    """A ``d``-tuple of equally shaped matrices in one scalar kernel."""

    __slots__ = ("mats",)

    def __init__(self, mats, exact: bool | None = None):
        if isinstance(mats, MatrixTuple):
            mats = mats.mats
        arrs = [_convert(m, exact) for m in mats]
        if not arrs:
            raise ComponentCountMismatch("a matrix tuple needs at least one component")
        if exact is None and len({la.is_exact(a) for a in arrs}) > 1:
            arrs = [la.float_array(a) for a in arrs]
        la.same_kernel(*arrs)
        shape = arrs[0].shape
        if any(a.ndim != 2 or a.shape != shape for a in arrs):
            raise ShapeMismatch(f"components have shapes {[a.shape for a in arrs]}")
        if not la.is_exact(arrs[0]) and any(np.iscomplexobj(a) for a in arrs):
            arrs = [a.astype(np.complex128) for a in arrs]
        for a in arrs:
            a.flags.writeable = False
        object.__setattr__(self, "mats", tuple(arrs))
        self._validate()

    def _validate(self):
        pass

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @property
    def d(self) -> int:
        return len(self.mats)

    @property
    def shape(self) -> tuple:
        return self.mats[0].shape

    @property
    def exact(self) -> bool:
        return la.is_exact(self.mats[0])

    def __len__(self):
        return len(self.mats)

    def __iter__(self):
        return iter(self.mats)

    def __getitem__(self, i):
        return self.mats[i]

    def __eq__(self, other):
        if not isinstance(other, MatrixTuple):
            return NotImplemented
        return (self.d == other.d and self.shape == other.shape
                and all(np.array_equal(a, b) for a, b in zip(self.mats, other.mats)))

    __hash__ = None

    def _like(self, mats):
        return type(self)(mats, exact=self.exact)

    def __add__(self, other):
        _check_compatible(self, other)
        return self._like([a + b for a, b in zip(self.mats, other.mats)])

    def __sub__(self, other):
        _check_compatible(self, other)
        return self._like([a - b for a, b in zip(self.mats, other.mats)])

    def __neg__(self):
        return self._like([-a for a in self.mats])

    def scale(self, c):
        c = la.coerce_scalar(c, self.exact)
        return self._like([c * a for a in self.mats])

    def to_float(self):
        return type(self)([la.float_array(a) for a in self.mats], exact=False)

    def to_exact(self):
        return type(self)([la.exact_array(a) for a in self.mats], exact=True)

    def allclose(self, other, atol=1e-10, rtol=0.0) -> bool:
        return (self.d == other.d and self.shape == other.shape and
                all(np.allclose(la.float_array(a), la.float_array(b), atol=atol, rtol=rtol)
                    for a, b in zip(self.mats, other.mats)))

    def __repr__(self):
        kind = "exact" if self.exact else "float"
        return f"{type(self).__name__}(d={self.d}, shape={self.shape}, {kind})"


class Direction(MatrixTuple):
    """Possibly rectangular matrix tuple used as the argument of difference operators."""

    __slots__ = ()


class MatrixPoint(MatrixTuple):
    """A point of the nc space: ``d`` square ``n x n`` matrices."""

    __slots__ = ()

    def _validate(self):
        r, c = self.shape
        if r != c or r < 1:
            raise ShapeMismatch(f"a point needs square nonempty components, got {self.shape}")

    @property
    def n(self) -> int:
        return self.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.n == 1

    def scalars(self) -> list:
        if not self.is_scalar:
            raise NonScalarCenter(f"center has size {self.n}, expected 1")
        return [m[0, 0] for m in self.mats]


CenterPoint = MatrixPoint


def scalar_center(values: Sequence, exact: bool | None = None) -> MatrixPoint:
    return MatrixPoint([[[v]] for v in values], exact=exact)


def zero_point(d: int, n: int, exact: bool = True) -> MatrixPoint:
    return MatrixPoint([la.zeros((n, n), exact) for _ in range(d)], exact=exact)


def _check_compatible(a: MatrixTuple, b: MatrixTuple):
    if a.d != b.d:
        raise ComponentCountMismatch(f"{a.d} vs {b.d} components")
    if a.shape != b.shape:
        raise ShapeMismatch(f"{a.shape} vs {b.shape}")
    if a.exact != b.exact:
        raise KernelMismatch("exact and float tuples cannot be mixed")


def join(X: MatrixTuple, Y: MatrixTuple) -> MatrixTuple:
    """Concatenate two tuples of equal shape: ``(X, Y)`` as one ``(a+b)``-tuple."""
    if X.shape != Y.shape:
        raise ShapeMismatch(f"{X.shape} vs {Y.shape}")
    la.same_kernel(X[0], Y[0])
    return type(X)(list(X.mats) + list(Y.mats))


def split(P: MatrixTuple, a: int):
    cls = type(P)
    return cls(P.mats[:a]), cls(P.mats[a:])


# ---------------------------------------------------------------- operations

def eval_words(terms: dict, mats: Sequence[np.ndarray], exact: bool, n: int) -> np.ndarray:
    """Sum ``c_w * M_{w1} ... M_{wk}`` over ``terms`` with shared prefix products."""
    cache: dict = {(): None}
    like = mats[0] if mats else None
    out = la.zeros((n, n), exact, like)
    ident = la.eye(n, exact)

    def prod(w):
        if w in cache:
            return cache[w]
        head = prod(w[:-1])
        val = mats[w[-1]] if head is None else head @ mats[w[-1]]
        cache[w] = val
        return val

    for w in sorted(terms, key=len):
        c = la.coerce_scalar(terms[w], exact)
        val = prod(w)
        out = out + c * (ident if val is None else val)
    if not exact and any(np.iscomplexobj(m) for m in mats):
        out = out.astype(np.complex128)
    return out


def eval_poly(p: NcPoly, X: MatrixPoint) -> np.ndarray:
    """Substitute the components of ``X`` for the letters of ``p``."""
    if p.num_letters != X.d:
        raise LetterCountMismatch(f"polynomial has {p.num_letters} letters, point has {X.d} components")
    return eval_words(p.terms, X.mats, X.exact, X.n)


def direct_sum(P: MatrixPoint, Q: MatrixPoint) -> MatrixPoint:
    if P.d != Q.d:
        raise ComponentCountMismatch(f"{P.d} vs {Q.d} components")
    return MatrixPoint([la.block_diag(a, b) for a, b in zip(P.mats, Q.mats)])


def ampliate(Y: MatrixTuple, m: int):
    """``Y^(m)``: ``m``-fold direct sum, i.e. ``I_m (x) Y`` componentwise."""
    if m < 1:
        raise DomainError("ampliation order must be >= 1")
    if m == 1:
        return Y
    return type(Y)([la.block_diag(*([a] * m)) for a in Y.mats])


def ampliate_matrix(a: np.ndarray, m: int) -> np.ndarray:
    return a if m == 1 else la.block_diag(*([a] * m))


def similarity(X: MatrixPoint, S) -> MatrixPoint:
    """Componentwise ``S X_i S^{-1}``."""
    S = la.as_kernel(S, X.exact)
    if S.shape != (X.n, X.n):
        raise ShapeMismatch(f"similarity of shape {S.shape} for size {X.n}")
    Sinv = la.inv(S, exc=SingularSimilarity)
    return MatrixPoint([S @ a @ Sinv for a in X.mats])


def shift_poly(p: NcPoly, c: MatrixPoint) -> NcPoly:
    """Rewrite ``p`` in the shifted letters ``u_i = x_i - c_i`` about a scalar center."""
    if c.d != p.num_letters:
        raise LetterCountMismatch(f"center has {c.d} components, polynomial {p.num_letters} letters")
    vals = c.scalars()
    d = p.num_letters
    subs = [NcPoly(d, {(i,): 1, (): v}) for i, v in enumerate(vals)]
    return p.compose(subs)


def compose_point(p: NcPoly, X: MatrixPoint) -> np.ndarray:
    return eval_poly(p, X)


# ---------------------------------------------------------------- polynomial maps

class NcPolyMap:
    """A tuple of polynomials in letters split as ``a`` X-letters followed by ``b`` Y-letters."""

    __slots__ = ("components", "split")

    def __init__(self, components: Sequence[NcPoly], split: tuple[int, int]):
        comps = tuple(components)
        a, b = (int(split[0]), int(split[1]))
        if a < 0 or b < 0:
            raise DomainError("letter split must be non-negative")
        if not comps:
            raise ComponentCountMismatch("a polynomial map needs at least one component")
        if any(p.num_letters != a + b for p in comps):
            raise LetterCountMismatch(f"components must use {a + b} letters")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "split", (a, b))

    def __setattr__(self, name, value):
        raise AttributeError("NcPolyMap is immutable")

    @classmethod
    def parse(cls, exprs: Sequence[str], x_letters: Sequence[str], y_letters: Sequence[str]):
        letters = list(x_letters) + list(y_letters)
        return cls([NcPoly.parse(e, letters) for e in exprs], (len(x_letters), len(y_letters)))

    @property
    def a(self) -> int:
        return self.split[0]

    @property
    def b(self) -> int:
        return self.split[1]

    @property
    def c(self) -> int:
        return len(self.components)

    @property
    def num_letters(self) -> int:
        return self.a + self.b

    @property
    def is_exact(self) -> bool:
        return all(p.is_exact for p in self.components)

    def letters(self) -> list[str]:
        return [f"x{i}" for i in range(self.a)] + [f"y{i}" for i in range(self.b)]

    def evaluate(self, X: MatrixPoint | None, Y: MatrixPoint | None) -> list[np.ndarray]:
        P = self.joint(X, Y)
        return [eval_poly(p, P) for p in self.components]

    __call__ = evaluate

    def evaluate_joint(self, P: MatrixPoint) -> list[np.ndarray]:
        return [eval_poly(p, P) for p in self.components]

    def joint(self, X, Y) -> MatrixPoint:
        parts = []
        if self.a:
            if X is None or X.d != self.a:
                raise ComponentCountMismatch(f"expected {self.a} X-components")
            parts.append(X)
        if self.b:
            if Y is None or Y.d != self.b:
                raise ComponentCountMismatch(f"expected {self.b} Y-components")
            parts.append(Y)
        P = parts[0]
        for Q in parts[1:]:
            P = join(P, Q)
        return MatrixPoint(P.mats)

    def to_float(self) -> "NcPolyMap":
        return NcPolyMap([p.to_float() for p in self.components], self.split)

    def __repr__(self):
        letters = self.letters()
        return f"NcPolyMap(split={self.split}, [{', '.join(p.format(letters) for p in self.components)}])"
