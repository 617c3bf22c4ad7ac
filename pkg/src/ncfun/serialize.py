"""JSON wire format.

Exact rationals travel as strings (``"3/2"``, ``"4"``), floats as JSON
numbers (shortest round-trip repr, so no precision is lost), complex entries
as ``{"re": .., "im": ..}``.  A matrix whose entries are all integers or
strings is read into the exact kernel; any float entry makes it float.
"""
from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

from . import linalg as la
from .errors import SchemaError
from .ncalg import MatrixPoint, NcPoly, NcPolyMap

SCHEMA_VERSION = "1.0"


def scalar_to_json(x):
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (complex, np.complexfloating)):
        z = complex(x)
        if z.imag == 0:
            return float(z.real)
        return {"re": float(z.real), "im": float(z.imag)}
    if isinstance(x, (int, np.integer)):
        return int(x)
    return float(x)


def _entry(v, path):
    if isinstance(v, bool):
        raise SchemaError(f"{path}: booleans are not numbers")
    if isinstance(v, str):
        try:
            return Fraction(v.strip()), True
        except (ValueError, ZeroDivisionError) as e:
            raise SchemaError(f"{path}: bad rational {v!r}") from e
    if isinstance(v, int):
        return Fraction(v), True
    if isinstance(v, float):
        return v, False
    if isinstance(v, dict) and set(v) == {"re", "im"}:
        return complex(float(v["re"]), float(v["im"])), False
    raise SchemaError(f"{path}: expected a number, rational string or {{re, im}}, got {v!r}")


def scalar_from_json(v, path="coeff"):
    return _entry(v, path)[0]


def matrix_to_json(a) -> list:
    return [[scalar_to_json(x) for x in row] for row in np.asarray(a)]


def matrix_from_json(rows, path="matrix", exact: bool | None = None) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise SchemaError(f"{path}: expected a non-empty list of rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise SchemaError(f"{path}: ragged rows")
    vals = [[_entry(v, f"{path}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(rows)]
    is_exact = all(e for r in vals for _, e in r) if exact is None else exact
    flat = [[x for x, _ in r] for r in vals]
    if is_exact:
        if any(not e for r in vals for _, e in r):
            raise SchemaError(f"{path}: float entry in an exact matrix")
        return la.exact_array(flat)
    if any(isinstance(x, complex) for r in flat for x in r):
        return np.array([[complex(x) for x in r] for r in flat], dtype=complex)
    return np.array([[float(x) for x in r] for r in flat], dtype=float)


def point_to_json(P) -> dict:
    n = P.mats[0].shape[0] if P.mats else 0
    return {"size": n, "mats": [matrix_to_json(a) for a in P.mats]}


def point_from_json(obj, path="point", exact: bool | None = None) -> MatrixPoint:
    if isinstance(obj, list):
        obj = {"mats": obj}
    if not isinstance(obj, dict) or "mats" not in obj:
        raise SchemaError(f"{path}: expected an object with 'mats'")
    mats = obj["mats"]
    if not isinstance(mats, list) or not mats:
        raise SchemaError(f"{path}.mats: expected a non-empty list of matrices")
    arrs = [matrix_from_json(m, f"{path}.mats[{k}]", exact) for k, m in enumerate(mats)]
    if exact is None and len({la.is_exact(a) for a in arrs}) > 1:
        arrs = [la.float_array(a) for a in arrs]
    size = obj.get("size")
    if size is not None and any(a.shape != (size, size) for a in arrs):
        raise SchemaError(f"{path}: matrices do not match size {size}")
    try:
        return MatrixPoint(arrs)
    except (ValueError, TypeError) as e:
        raise SchemaError(f"{path}: {e}") from e


def poly_to_json(p: NcPoly, letters) -> dict:
    terms = [{"word": [letters[i] for i in w], "coeff": scalar_to_json(c)}
             for w, c in sorted(p.terms.items(), key=lambda t: (len(t[0]), t[0]))]
    return {"letters": list(letters), "terms": terms}


def _poly_terms(obj, letters, path) -> NcPoly:
    if isinstance(obj, str):
        try:
            return NcPoly.parse(obj, letters)
        except ValueError as e:
            raise SchemaError(f"{path}: {e}") from e
    if not isinstance(obj, dict) or not isinstance(obj.get("terms"), list):
        raise SchemaError(f"{path}: expected an expression string or an object with 'terms'")
    index = {name: k for k, name in enumerate(letters)}
    terms: dict = {}
    for k, t in enumerate(obj["terms"]):
        if not isinstance(t, dict) or "word" not in t or "coeff" not in t:
            raise SchemaError(f"{path}.terms[{k}]: expected {{word, coeff}}")
        word = []
        for name in t["word"]:
            if name not in index:
                raise SchemaError(f"{path}.terms[{k}]: unknown letter {name!r}")
            word.append(index[name])
        c = scalar_from_json(t["coeff"], f"{path}.terms[{k}].coeff")
        w = tuple(word)
        terms[w] = terms.get(w, 0) + c
    return NcPoly(len(letters), terms)


def _letters(obj, path):
    letters = obj.get("letters") if isinstance(obj, dict) else None
    if not isinstance(letters, list) or not all(isinstance(s, str) for s in letters):
        raise SchemaError(f"{path}.letters: expected a list of names")
    if len(set(letters)) != len(letters):
        raise SchemaError(f"{path}.letters: duplicate names")
    return letters


def poly_from_json(obj, path="poly") -> tuple[NcPoly, list]:
    letters = _letters(obj, path)
    body = obj.get("expr", obj)
    return _poly_terms(body, letters, path), letters


def map_to_json(F: NcPolyMap, letters=None) -> dict:
    letters = letters or F.letters()
    return {"letters": list(letters), "split": list(F.split),
            "components": [poly_to_json(p, letters)["terms"] for p in F.components]}


def map_from_json(obj, path="map") -> NcPolyMap:
    """``{"letters": [...], "split": [a, b], "components": [expr | {"terms": ..} | [terms]]}``."""
    letters = _letters(obj, path)
    split = obj.get("split")
    if not (isinstance(split, list) and len(split) == 2 and all(isinstance(v, int) for v in split)):
        raise SchemaError(f"{path}.split: expected [a, b]")
    if sum(split) != len(letters):
        raise SchemaError(f"{path}: split {split} does not cover {len(letters)} letters")
    comps = obj.get("components")
    if not isinstance(comps, list) or not comps:
        raise SchemaError(f"{path}.components: expected a non-empty list")
    polys = []
    for k, c in enumerate(comps):
        c = {"terms": c} if isinstance(c, list) else c
        polys.append(_poly_terms(c, letters, f"{path}.components[{k}]"))
    try:
        return NcPolyMap(polys, tuple(split))
    except ValueError as e:
        raise SchemaError(f"{path}: {e}") from e


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True)
