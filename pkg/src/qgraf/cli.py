"""Command line: evaluate primitives, verify identities, sweep parameter grids.

Exit codes: 0 success (all checks pass), 1 some check failed, 2 bad input or a
domain error.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

from . import __version__
from .errors import QGrafError
from .qcore import (
    QContext,
    WORKING_TOL,
    bessel_j,
    phi,
    phi_regularized,
    q_power_index,
    qgamma,
    qpoch_finite,
    qpoch_infinite,
)
from .registry import REGISTRY, get

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
DEFAULT_MAX_CASES = 100_000

_COMPLEX = re.compile(r"^[+-]?[0-9.eE+-]*[0-9.][ij]$|^[+-]?[0-9.eE]+[+-][0-9.eE+-]*[ij]$")


class UsageError(Exception):
    pass


def parse_value(text: str, q: float | None = None):
    """``int``, ``float``, complex ``re+imi``, ``q^x`` or ``none``."""
    s = text.strip()
    low = s.lower()
    if low in ("none", "null"):
        return None
    if low.startswith("q^"):
        if q is None:
            raise UsageError(f"{text!r} needs q to be set first")
        return q ** float(s[2:].strip("()"))
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    if _COMPLEX.match(s):
        return complex(s.replace("i", "j"))
    raise UsageError(f"cannot parse value {text!r}")


def parse_params(items, q_flag=None) -> dict:
    """Turn ``key=value`` strings into a dict; ``q`` is resolved first so ``q^x`` works."""
    raw = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        key, val = item.split("=", 1)
        raw[key.strip()] = val
    q = q_flag
    if q is None and "q" in raw:
        q = float(raw["q"])
    out = {}
    for key, val in raw.items():
        if key in ("upper", "lower"):
            out[key] = [parse_value(v, q) for v in val.split(",") if v.strip()]
        else:
            out[key] = parse_value(val, q)
    if q_flag is not None:
        out["q"] = q_flag
    return out


def _jsonable(v):
    if isinstance(v, complex):
        return v.real if v.imag == 0 else {"re": v.real, "im": v.imag}
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _context(q, args) -> QContext:
    tol = args.tol if args.tol is not None else WORKING_TOL
    kw = {}
    if args.max_terms is not None:
        kw["max_terms"] = args.max_terms
    if args.max_factors is not None:
        kw["max_product_factors"] = args.max_factors
    return QContext(q, tol=tol, **kw)


# ------------------------------------------------------------------- eval


def _need(p, *names):
    missing = [n for n in names if p.get(n) is None]
    if missing:
        raise UsageError(f"missing parameter(s): {', '.join(missing)}")


def _eval(function: str, p: dict, args):
    from .ortho import WeightSpec, weight_eval
    from .polys import ASCParams, CharlierParams, SpectralPoint, asc_eval_rec, qcharlier_eval, qlaguerre_eval

    if function == "bessel_j":
        _need(p, "nu", "z")
        return bessel_j(p["nu"], p["z"]), None
    _need(p, "q")
    ctx = _context(p["q"], args)
    q = ctx.q
    if function == "qpoch":
        _need(p, "a")
        if p.get("k") is None:
            sv = qpoch_infinite(p["a"], ctx)
            return sv.value, sv.tail_bound
        return qpoch_finite(p["a"], q, int(p["k"])), 0.0
    if function == "phi":
        _need(p, "z")
        upper, lower = p.get("upper") or [], p.get("lower") or []
        if args.regularize:
            if not lower:
                raise UsageError("--regularize needs a lower parameter q^{1-n}")
            k = q_power_index(lower[0], q)
            if k is None:
                raise UsageError("--regularize needs the first lower parameter to be an integer power of q")
            sv = phi_regularized(upper, k + 1, lower[1:], p["z"], ctx)
        else:
            sv = phi(upper, lower, p["z"], ctx)
        return sv.value, sv.tail_bound
    if function == "qgamma":
        _need(p, "x")
        return qgamma(p["x"], ctx), None
    if function == "asc":
        _need(p, "n", "a", "b")
        pt = SpectralPoint.off_spectrum(p["xi"]) if p.get("xi") is not None else SpectralPoint.on_spectrum(p["theta"])
        return asc_eval_rec(int(p["n"]), pt, ASCParams(p["a"], p["b"], q)), None
    if function == "qcharlier":
        _need(p, "m", "x", "a")
        return qcharlier_eval(int(p["m"]), p["x"], CharlierParams(p["a"], q), ctx), None
    if function == "qlaguerre":
        _need(p, "n", "alpha", "x")
        return qlaguerre_eval(int(p["n"]), p["alpha"], p["x"], ctx), None
    if function == "weight":
        _need(p, "theta", "a", "b")
        return complex(weight_eval(p["theta"], WeightSpec(ASCParams(p["a"], p["b"], q)), ctx)), None
    raise UsageError(f"unknown function {function!r}; known: {', '.join(EVAL_FUNCTIONS)}")


EVAL_FUNCTIONS = ("qpoch", "phi", "qgamma", "asc", "qcharlier", "qlaguerre", "weight", "bessel_j")


def cmd_eval(args) -> int:
    p = parse_params(args.params, args.q)
    value, tail = _eval(args.function, p, args)
    out = {"function": args.function, "value": _jsonable(complex(value))}
    if tail is not None:
        out["tail_bound"] = tail
    print(json.dumps(out, sort_keys=False))
    return EXIT_OK


# ----------------------------------------------------------------- verify


def _run_case(name: str, params: dict, tol, max_terms, max_factors):
    entry = get(name)
    params = dict(params)
    if tol is not None:
        params["tol"] = tol
    if (max_terms is not None or max_factors is not None) and "q" in entry.defaults:
        q = params.get("q", entry.defaults["q"])
        kw = {}
        if max_terms is not None:
            kw["max_terms"] = max_terms
        if max_factors is not None:
            kw["max_product_factors"] = max_factors
        params["q"] = QContext(q, tol=WORKING_TOL, **kw)
    return entry.run(**params)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return "%.16e" % v
    if v is None:
        return ""
    if isinstance(v, QContext):
        return "%.16e" % v.q
    return str(v)


def _row(report) -> dict:
    row = report.as_row()
    return {k: (v.q if isinstance(v, QContext) else v) for k, v in row.items()}


def write_csv(rows: list, stream, header_line: str | None = None):
    if header_line:
        stream.write(f"# {header_line}\n")
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in cols])


def _json_row(r: dict) -> dict:
    return {k: _jsonable(v) for k, v in r.items()}


def cmd_verify(args) -> int:
    entry = get(args.identity)
    params = parse_params(args.params, args.q)
    if args.q is not None and "q" not in entry.defaults:
        params.pop("q", None)
    report = _run_case(entry.name, params, args.tol, args.max_terms, args.max_factors)
    row = _row(report)
    if args.json:
        out = _json_row(row)
        out["notes"] = list(report.notes)
        print(json.dumps(out))
    else:
        buf = io.StringIO()
        write_csv([row], buf)
        sys.stdout.write(buf.getvalue())
    return EXIT_OK if report.passed else EXIT_FAIL


# ------------------------------------------------------------------ sweep


def load_sweep(path: str, args) -> dict:
    with open(path) as fh:
        spec = json.load(fh)
    if not isinstance(spec, dict) or "identity" not in spec:
        raise UsageError("sweep spec needs an 'identity' field")
    entry = get(spec["identity"])
    axes = spec.get("axes") or {}
    if not isinstance(axes, dict):
        raise UsageError("'axes' must map parameter names to value lists")
    for name, vals in axes.items():
        if name not in entry.defaults:
            raise UsageError(f"axis {name!r} is not a parameter of {entry.name}")
        if not isinstance(vals, list) or not vals:
            raise UsageError(f"axis {name!r} needs a nonempty list of values")
    q = axes.get("q", [entry.defaults.get("q")])[0]
    axes = {k: [parse_value(v, q) if isinstance(v, str) else v for v in vals] for k, vals in axes.items()}
    size = math.prod(len(v) for v in axes.values())
    cap = args.max_cases if args.max_cases is not None else DEFAULT_MAX_CASES
    if size > cap:
        raise UsageError(f"grid has {size} cases, above the cap {cap}")
    tol = args.tol if args.tol is not None else spec.get("tol")
    fixed = {}
    trunc = spec.get("truncation")
    if trunc is not None:
        if entry.truncation is None:
            raise UsageError(f"{entry.name} has no truncation parameter")
        fixed[entry.truncation] = int(trunc)
    return dict(
        entry=entry, axes=axes, tol=tol, fixed=fixed,
        out=args.out or spec.get("out"), fmt=args.format or spec.get("format") or "csv",
    )


def _sweep_one(job):
    name, params, tol, max_terms, max_factors = job
    try:
        return _row(_run_case(name, params, tol, max_terms, max_factors))
    except QGrafError as exc:
        row = {"identity": name}
        row.update({k: v for k, v in params.items()})
        row.update(status="error", error=f"{type(exc).__name__}: {exc}")
        return row


def cmd_sweep(args) -> int:
    sw = load_sweep(args.spec, args)
    entry = sw["entry"]
    names = list(sw["axes"])
    jobs = []
    for combo in itertools.product(*(sw["axes"][n] for n in names)):
        params = dict(sw["fixed"])
        params.update(zip(names, combo))
        jobs.append((entry.name, params, sw["tol"], args.max_terms, args.max_factors))
    if args.parallel and args.parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as ex:
            rows = list(ex.map(_sweep_one, jobs, chunksize=max(1, len(jobs) // (4 * args.parallel))))
    else:
        rows = [_sweep_one(j) for j in jobs]
    header = None
    if not args.no_header:
        stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        header = f"qgraf {__version__} sweep identity={entry.name} cases={len(rows)} generated={stamp}"
    stream = open(sw["out"], "w", newline="") if sw["out"] else sys.stdout
    try:
        if sw["fmt"] == "json":
            doc = {"rows": [_json_row(r) for r in rows]}
            if header:
                doc = {"header": header, **doc}
            json.dump(doc, stream, indent=1)
            stream.write("\n")
        elif sw["fmt"] == "csv":
            write_csv(rows, stream, header)
        else:
            raise UsageError(f"unknown format {sw['fmt']!r}")
    finally:
        if stream is not sys.stdout:
            stream.close()
    passed = sum(r["status"] == "pass" for r in rows)
    scored = [r for r in rows if "abs_residual" in r]
    summary = f"{entry.name}: {passed} pass, {len(rows) - passed} fail of {len(rows)}"
    if scored:
        worst = max(scored, key=lambda r: r["abs_residual"])
        case = {}
        for k in names:
            if k in worst:
                case[k] = _jsonable(worst[k])
            elif f"{k}_re" in worst:
                case[k] = _jsonable(complex(worst[f"{k}_re"], worst[f"{k}_im"]))
        summary += f"; max abs residual {worst['abs_residual']:.3e} at {json.dumps(case)}"
    print(summary, file=sys.stderr if stream is sys.stdout else sys.stdout)
    return EXIT_OK if passed == len(rows) else EXIT_FAIL


def cmd_list(args) -> int:
    for name, entry in REGISTRY.items():
        defaults = " ".join(f"{k}={_fmt_default(v)}" for k, v in entry.defaults.items())
        print(f"{name}: {entry.summary}\n    {defaults}")
    return EXIT_OK


def _fmt_default(v):
    return repr(v) if isinstance(v, float) else str(v)


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=float, help="base q (overrides q=...)")
    common.add_argument("--tol", type=float, help="residual tolerance (verify, sweep) or series tolerance (eval)")
    common.add_argument("--max-terms", type=int, help="series term cap")
    common.add_argument("--max-factors", type=int, help="infinite product factor cap")

    p = argparse.ArgumentParser(prog="qgraf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qgraf {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", parents=[common], help="evaluate a primitive")
    e.add_argument("function", choices=EVAL_FUNCTIONS)
    e.add_argument("params", nargs="*", metavar="key=value")
    e.add_argument("--regularize", action="store_true",
                   help="phi: treat the first lower parameter q^{1-n} through the regularized series")
    e.set_defaults(func=cmd_eval)

    v = sub.add_parser("verify", parents=[common], help="verify one identity")
    v.add_argument("identity")
    v.add_argument("params", nargs="*", metavar="key=value")
    v.add_argument("--json", action="store_true", help="print the report row as JSON")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", parents=[common], help="verify an identity over a parameter grid")
    s.add_argument("spec", help="JSON sweep spec")
    s.add_argument("--out", help="report path (default: stdout)")
    s.add_argument("--format", choices=("csv", "json"))
    s.add_argument("--parallel", type=int, default=1, help="worker processes")
    s.add_argument("--no-header", action="store_true", help="omit the timestamped header line")
    s.add_argument("--max-cases", type=int, help=f"grid size cap (default {DEFAULT_MAX_CASES})")
    s.set_defaults(func=cmd_sweep)

    ls = sub.add_parser("list-identities", help="list identity names and default parameters")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (QGrafError, UsageError, ValueError, OSError) as exc:
        print(f"qgraf: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
