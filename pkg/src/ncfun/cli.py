"""Command-line entry point: ``ncfun <command> [--input FILE] [--output FILE] [flags]``.

Input and output are JSON (stdin/stdout by default).  Exit codes: 0 success,
1 failed ``check`` suites, 2 malformed input, 3 domain errors raised by the
library, 4 anything else.  Diagnostics go to stderr as plain text.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .errors import DomainError, SchemaError
from .serialize import (
    SCHEMA_VERSION,
    dumps,
    map_from_json,
    matrix_from_json,
    matrix_to_json,
    point_from_json,
    point_to_json,
    poly_from_json,
    poly_to_json,
    scalar_from_json,
)


def _need(obj: dict, key: str, path: str = "input"):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{path}: missing key {key!r}")
    return obj[key]


def _direction(obj, path):
    from .ncalg import Direction
    if isinstance(obj, dict):
        obj = _need(obj, "mats", path)
    if not isinstance(obj, list) or not obj:
        raise SchemaError(f"{path}: expected a list of matrices")
    return Direction([matrix_from_json(m, f"{path}[{k}]") for k, m in enumerate(obj)])


# ---------------------------------------------------------------- commands

def cmd_eval(data, args):
    from .ncalg import eval_poly
    p, _ = poly_from_json(_need(data, "poly"), "poly")
    X = point_from_json(_need(data, "point"), "point")
    return {"value": matrix_to_json(eval_poly(p, X))}


def cmd_deriv(data, args):
    from .ncdiff import delta_r_higher, delta_r_higher_sym
    p, _ = poly_from_json(_need(data, "poly"), "poly")
    if "points" in data:
        points = [point_from_json(P, f"points[{k}]") for k, P in enumerate(data["points"])]
        dirs = [_direction(Z, f"dirs[{k}]") for k, Z in enumerate(_need(data, "dirs"))]
    else:
        X = point_from_json(_need(data, "X"), "X")
        Y = point_from_json(data.get("Y", data["X"]), "Y")
        points, dirs = [X, Y], [_direction(_need(data, "Z"), "Z")]
    block = delta_r_higher(p, points, dirs)
    sym = delta_r_higher_sym(p, points, dirs)
    diff = np.abs(np.asarray(block - sym, dtype=complex if np.iscomplexobj(block) else float))
    return {"result": matrix_to_json(block), "order": len(dirs),
            "path_agreement": bool(diff.size == 0 or diff.max() <= (0 if points[0].exact else 1e-10))}


def cmd_tt(data, args):
    from .ncalg import scalar_center
    from .ncdiff import tt_coefficients, tt_evaluate, tt_remainder
    p, letters = poly_from_json(_need(data, "poly"), "poly")
    raw = _need(data, "center")
    vals = [scalar_from_json(v, f"center[{k}]") for k, v in enumerate(raw)]
    c = scalar_center(vals)
    tt = tt_coefficients(p, c)
    shifted = [f"u{k}" for k in range(p.num_letters)]
    out = {"parts": [poly_to_json(q, shifted) for q in tt.parts], "order": tt.order}
    if "X" in data:
        X = point_from_json(data["X"], "X")
        N = data.get("order", args.order)
        out["value"] = matrix_to_json(tt_evaluate(tt, X, up_to=N))
        if N is not None:
            out["remainder"] = matrix_to_json(tt_remainder(p, c, X, N))
    return out


def _report(rep):
    return rep.to_dict()


def cmd_nilp_solve(data, args):
    from .nilp import implicit_solve_nilp
    F = map_from_json(_need(data, "F"), "F")
    center = point_from_json(_need(data, "center"), "center")
    X = point_from_json(_need(data, "X"), "X")
    Y, rep = implicit_solve_nilp(F, center, X, kappa_max=args.kappa_max)
    return {"Y": point_to_json(Y), "exact_residual": bool(Y.exact), "iterations": rep.iterations,
            "kappa": rep.kappa, "report": _report(rep)}


def cmd_nilp_invert(data, args):
    from .nilp import inverse_solve_nilp
    g = map_from_json(_need(data, "g"), "g")
    Y0 = point_from_json(_need(data, "Y0"), "Y0")
    X = point_from_json(_need(data, "X"), "X")
    Y, rep = inverse_solve_nilp(g, Y0, X, kappa_max=args.kappa_max)
    return {"Y": point_to_json(Y), "exact_residual": bool(Y.exact), "iterations": rep.iterations,
            "kappa": rep.kappa, "report": _report(rep)}


def cmd_solve(data, args):
    from .opspace import contraction_search, implicit_solve_num
    F = map_from_json(_need(data, "F"), "F")
    center = point_from_json(_need(data, "center"), "center")
    X = point_from_json(_need(data, "X"), "X")
    region = contraction_search(F, center, m_probe=args.m_probe, seed=args.seed)
    Y, rep = implicit_solve_num(F, center, X, args.tol, args.max_iter,
                                region if args.enforce_region else None)
    return {"Y": point_to_json(Y), "report": _report(rep), "region": region.to_dict(),
            "region_enforced": bool(args.enforce_region)}


def cmd_invert(data, args):
    from .nilp import inverse_as_implicit
    from .opspace import contraction_search, inverse_solve_num
    g = map_from_json(_need(data, "g"), "g")
    Y0 = point_from_json(_need(data, "Y0"), "Y0")
    X = point_from_json(_need(data, "X"), "X")
    F, center = inverse_as_implicit(g.to_float() if g.is_exact else g, Y0.to_float() if Y0.exact else Y0)
    region = contraction_search(F, center, m_probe=args.m_probe, seed=args.seed)
    Y, rep = inverse_solve_num(g, Y0, X, args.tol, args.max_iter,
                               region if args.enforce_region else None, seed=args.seed)
    return {"Y": point_to_json(Y), "report": _report(rep), "region": region.to_dict(),
            "region_enforced": bool(args.enforce_region)}


def _time_poly(obj):
    from .ncode import TimePoly
    if isinstance(obj, dict) and "map" in obj:
        base = map_from_json(obj["map"], "g.map")
        letters = obj["map"]["letters"]
        index = {name: k for k, name in enumerate(letters)}
        fns = {}
        for k, item in enumerate(obj.get("time_coeffs", [])):
            path = f"g.time_coeffs[{k}]"
            comp = _need(item, "component", path)
            word = tuple(index[w] if w in index else _bad_letter(w, path) for w in _need(item, "word", path))
            fns[(comp, word)] = [float(scalar_from_json(c, path)) for c in _need(item, "coeffs", path)]
        return TimePoly(base, fns)
    return TimePoly(map_from_json(obj, "g"))


def _bad_letter(w, path):
    raise SchemaError(f"{path}: unknown letter {w!r}")


def cmd_ode(data, args):
    from .ncalg import MatrixPoint
    from .ncode import flow_sensitivity, integrate_ivp, kappa_delta_report
    g = _time_poly(_need(data, "g"))
    X = point_from_json(_need(data, "X"), "X")
    traj = integrate_ivp(g, args.t0, X, args.delta, args.steps)
    at = args.t0 + args.delta if args.at is None else args.at
    out = {"t": at, "Y": point_to_json(traj.at(at)),
           "kappa_delta_report": kappa_delta_report(g, traj, seed=args.seed, warn=False)}
    if "H" in data:
        H = point_from_json(data["H"], "H")
        out["sensitivity"] = point_to_json(flow_sensitivity(g, traj, MatrixPoint(H.mats), t_end=at))
    return out


def cmd_extremum(data, args):
    from .ncopt import KktPoint, TraceFunctional, ampliation_consistency, kkt_residual, solve_kkt
    G = map_from_json(_need(data, "G"), "G")
    F = map_from_json(_need(data, "F"), "F")
    tau = TraceFunctional([float(scalar_from_json(c, "tau")) for c in _need(data, "tau")])
    s = _need(data, "s")
    st = _need(data, "start")
    start = KktPoint(s, point_from_json(_need(st, "X", "start"), "start.X"),
                     point_from_json(_need(st, "Y", "start"), "start.Y"),
                     [matrix_from_json(L, f"start.Lambda[{k}]", exact=False)
                      for k, L in enumerate(_need(st, "Lambda", "start"))])
    p = solve_kkt(G, tau, F, s, start, args.tol, args.max_iter)
    ms = [int(v) for v in args.check_m.split(",") if v.strip()] if args.check_m else []
    return {"point": {"s": p.s, "X": point_to_json(p.X), "Y": point_to_json(p.Y),
                      "Lambda": [matrix_to_json(L) for L in p.Lambda]},
            "residuals": kkt_residual(G, tau, F, p),
            "consistency": {str(m): ampliation_consistency(G, tau, F, p, m) for m in ms},
            "info": p.info}


def cmd_check(data, args):
    from .harness import CaseSpec, run_suites
    names = [n for group in (args.suite or []) for n in group.split(",") if n]
    spec = CaseSpec(seed=args.seed, count=args.count, kernel=args.kernel)
    code, summary = run_suites(names, spec)
    return {"summary": summary, "exit_code": code}


COMMANDS = {
    "eval": (cmd_eval, "evaluate a polynomial on a matrix point"),
    "deriv": (cmd_deriv, "right difference-differential by both routes"),
    "tt": (cmd_tt, "Taylor-Taylor coefficients about a scalar center"),
    "nilp-solve": (cmd_nilp_solve, "exact implicit solve on a nilpotent point"),
    "nilp-invert": (cmd_nilp_invert, "exact inverse on a nilpotent point"),
    "solve": (cmd_solve, "numeric implicit solve by the chord iteration"),
    "invert": (cmd_invert, "numeric inverse by the chord iteration"),
    "ode": (cmd_ode, "integrate Y' = g(t, Y) by RK4"),
    "extremum": (cmd_extremum, "critical points of a trace objective under constraints"),
    "check": (cmd_check, "run the property suites"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ncfun", description="Noncommutative function toolkit.")
    ap.add_argument("--version", action="version",
                    version=f"ncfun {__version__} (schema {SCHEMA_VERSION})")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-i", "--input", help="input JSON file (default stdin)")
        p.add_argument("-o", "--output", help="output JSON file (default stdout)")
        p.add_argument("--seed", type=lambda v: int(v, 0), default=0x9E3779B9 if name != "check" else 0)
        if name in ("nilp-solve", "nilp-invert"):
            p.add_argument("--kappa-max", type=int, default=16)
        if name in ("solve", "invert", "extremum"):
            p.add_argument("--tol", type=float, default=1e-12)
            p.add_argument("--max-iter", type=int, default=200 if name != "extremum" else 50)
        if name in ("solve", "invert"):
            p.add_argument("--m-probe", type=int, default=2)
            p.add_argument("--enforce-region", action="store_true",
                           help="require X in the certified alpha-ball and iterates in the beta-ball")
        if name == "tt":
            p.add_argument("--order", type=int, default=None)
        if name == "ode":
            p.add_argument("--t0", type=float, default=0.0)
            p.add_argument("--delta", type=float, required=True)
            p.add_argument("--steps", type=int, default=64)
            p.add_argument("--at", type=float, default=None)
        if name == "extremum":
            p.add_argument("--check-m", default="2,3", help="comma-separated ampliation orders")
        if name == "check":
            p.add_argument("--suite", action="append", help="suite name(s), repeatable or comma-separated")
            p.add_argument("--count", type=int, default=20)
            p.add_argument("--kernel", choices=["exact", "float"], default="exact")
    return ap


def _read_input(path) -> object:
    text = sys.stdin.read() if path in (None, "-") else open(path, encoding="utf-8").read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn = COMMANDS[args.command][0]
    try:
        data = {} if args.command == "check" and args.input is None else _read_input(args.input)
        result = fn(data, args)
    except SchemaError as e:
        print(f"schema error: {e}", file=sys.stderr)
        return 2
    except DomainError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 4
    text = dumps(result) + "\n"
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.command == "check":
        return result["exit_code"]
    return 0


if __name__ == "__main__":
    sys.exit(main())
