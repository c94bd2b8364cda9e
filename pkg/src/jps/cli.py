"""Command-line front end.

Every command writes either CSV (a ``#`` metadata line, then a header row) or
JSON (``{"meta": ..., "data": ...}``).  Output never depends on ``--threads``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from enum import Enum
from pathlib import Path

import numpy as np

from . import __version__
from .coeffs import WeightScheme, coefficient_set
from .design import JpsSample, Ranker, draw_brss, draw_jps, draw_srs
from .distcat import CATALOG, MomentError, parse_distribution, parse_g
from .efficiency import (
    TABLE_HB,
    TABLE_HJ,
    TABLE_N,
    brss_table,
    min_delta_for_dominance,
    optimal_h,
    optimal_h_table,
    re_curve,
    re_ff_vs_std,
    re_report,
    re_vs_srs,
    recommended_h,
    round2,
)
from .estimators import estimate_cdf, estimate_g_mean, estimate_variance
from .mcverify import SUITES, run_suite
from .streams import keyed_rng
from .strata import stratum_moments

# flags that do not change the content of the output
_NEUTRAL = {"threads", "out", "config", "format", "func", "command"}


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------

def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Enum):
        return str(v.value)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(_jsonable(v), separators=(",", ":"))
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Enum):
        return obj.value
    return obj


def _meta(args) -> dict:
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in _NEUTRAL and v is not None}
    return {"program": "jps", "version": __version__, "seed": args.seed,
            "command": args.command, "options": _jsonable(opts)}


def _render(args, data, extra_meta=None) -> str:
    meta = _meta(args)
    if extra_meta:
        meta.update(extra_meta)
    fmt = args.format or ("json" if isinstance(data, dict) else "csv")
    if fmt == "json":
        return json.dumps({"meta": meta, "data": _jsonable(data)}, indent=2, sort_keys=False) + "\n"
    rows = [data] if isinstance(data, dict) else data
    fields: list[str] = []
    for row in rows:
        for k in row:
            if k not in fields:
                fields.append(k)
    buf = io.StringIO()
    opts = " ".join(f"{k}={_num(v)}" for k, v in meta["options"].items())
    head = f"# jps {__version__} seed={meta['seed']} command={meta['command']}"
    extras = " ".join(f"{k}={_num(v)}" for k, v in (extra_meta or {}).items())
    buf.write(" ".join(x for x in (head, opts, extras) if x) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for row in rows:
        w.writerow([_num(row.get(k)) for k in fields])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_simulate(args):
    dist = parse_distribution(args.dist)
    ranker = Ranker.parse(args.ranker)
    rows = []
    for rep in range(args.reps):
        rng = keyed_rng(args.seed, 11, rep)
        if args.design == "srs":
            for x in draw_srs(rng, dist, args.n):
                rows.append({"replicate": rep, "x": float(x), "rank": None})
        elif args.design == "jps":
            s = draw_jps(rng, dist, args.n, args.h, ranker)
            for x, r in zip(s.x, s.rank):
                rows.append({"replicate": rep, "x": float(x), "rank": int(r)})
        else:
            m = args.m if args.m is not None else args.n // args.h
            if m < 1:
                raise ValueError("BRSS needs --m >= 1 (or --n >= --h)")
            b = draw_brss(rng, dist, m, args.h, ranker)
            for cycle in b.values:
                for r, x in enumerate(cycle, start=1):
                    rows.append({"replicate": rep, "x": float(x), "rank": r})
    h = 1 if args.design == "srs" else args.h
    return rows, {"h": h, "design": args.design}


def _read_sample(path: str) -> tuple[dict[int, tuple[list, list]], int | None]:
    h_meta = None
    body = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("h="):
                        h_meta = int(tok[2:])
                continue
            body.append(line)
    reps: dict[int, tuple[list, list]] = {}
    for row in csv.DictReader(body):
        rep = int(row.get("replicate") or 0)
        xs, rs = reps.setdefault(rep, ([], []))
        xs.append(float(row["x"]))
        rs.append(int(row["rank"]) if row.get("rank") not in (None, "") else 1)
    if not reps:
        raise ValueError(f"no observations in {path}")
    return reps, h_meta


def cmd_estimate(args):
    reps, h_meta = _read_sample(args.input)
    H = args.h or h_meta or max(max(r) for _, r in reps.values())
    g = parse_g(args.g)
    out = []
    for rep, (xs, rs) in sorted(reps.items()):
        sample = JpsSample(H, np.array(xs), np.array(rs))
        if args.target == "mean":
            res = estimate_g_mean(sample, g, args.scheme).as_dict()
        elif args.target == "var":
            res = estimate_variance(sample, args.scheme).as_dict()
        else:
            if not args.grid:
                raise ValueError("--target cdf needs --grid")
            grid = [float(v) for v in args.grid.split(",")]
            cdf = estimate_cdf(sample, args.scheme, grid)
            res = {"values": [c.value for c in cdf], "grid": grid,
                   "weights_used": list(cdf[0].weights_used), "h_n": cdf[0].h_n,
                   "full_rank": cdf[0].full_rank}
        out.append({"replicate": rep, **res})
    return {"h": H, "target": args.target, "estimates": out}, None


def cmd_coeffs(args):
    method = {"enum": "enumerate", "enumerate": "enumerate", "mc": "mc", None: None}[args.method]
    co = coefficient_set(WeightScheme.parse(args.scheme), args.n, args.h, method=method,
                         reps=args.reps, seed=args.seed)
    return co.as_dict(), None


def cmd_moments(args):
    dist = parse_distribution(args.dist)
    sm = stratum_moments(dist, parse_g(args.g), args.h)
    rows = [{"h": sm.H, "r": r, "mu_r": m, "sigma2_r": s, "delta_g": None}
            for r, (m, s) in enumerate(zip(sm.mu_r, sm.sigma2_r), start=1)]
    rows.append({"h": sm.H, "r": "all", "mu_r": sm.mu_g, "sigma2_r": sm.sigma2_g,
                 "delta_g": sm.delta_g})
    return rows, None


def cmd_re(args):
    rep = re_report(args.vs, args.scheme, parse_distribution(args.dist), args.n, args.hj,
                    args.hb, parse_g(args.g))
    return rep.as_dict(), None


def _select(names):
    if not names:
        return CATALOG
    out = {}
    for name in names.split(","):
        d = parse_distribution(name)
        out[d.name] = d
    return out


def cmd_re_table(args):
    dists = _select(args.dist)
    if args.which in ("table1", "table2"):
        n = 15 if args.which == "table1" else 60
        rows = brss_table(n, dists)
        for row in rows:
            row["re_2dp"] = round2(row["re"])
        return rows, None
    if args.which == "table3":
        return optimal_h_table(dists, h_max=args.h_max), None
    return recommended_h(h_max=args.h_max), None


def _parse_range(text: str) -> list[int]:
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(start, stop + 1, step))
    return [int(p) for p in text.split(",")]


def cmd_optimal_h(args):
    dist = parse_distribution(args.dist)
    rows = []
    for n in _parse_range(args.n_list):
        res = optimal_h(n, dist, args.scheme, args.h_max)
        rows.append({"n": n, "h_opt": res.h_opt, "mre": res.mre,
                     "re_at_h_opt": res.re_curve[res.h_opt - 1]})
    return rows, None


def cmd_curves(args):
    """Curve data behind the efficiency figures."""
    dists = _select(args.dist)
    fig = args.figure
    rows = []
    if fig in (1, 4):
        for name, d in dists.items():
            for H in (2, 5):
                sm = stratum_moments(d, parse_g("identity"), H)
                for n in range(2, 61):
                    re = re_vs_srs(coefficient_set("jps", n, H), sm.delta_g)
                    if fig == 4:
                        re *= 1.0 - sm.delta_g
                    rows.append({"dist": name, "h": H, "n": n, "re": re})
    elif fig in (2, 5):
        for name, d in dists.items():
            for n in (10, 30):
                for H, re in enumerate(re_curve(n, d, "jps", 25), start=1):
                    if fig == 5:
                        re *= 1.0 - stratum_moments(d, parse_g("identity"), H).delta_g
                    rows.append({"dist": name, "n": n, "h": H, "re": re})
    elif fig == 3:
        for H in (2, 5):
            for n in range(3, 61):
                rows.append({"h": H, "n": n,
                             "min_delta": min_delta_for_dominance(coefficient_set("jps", n, H))})
    elif fig == 6:
        for name, d in dists.items():
            for H in (2, 5):
                sm = stratum_moments(d, parse_g("identity"), H)
                for n in range(2, 61):
                    rows.append({"dist": name, "h": H, "n": n, "re": 1.0 / re_ff_vs_std(n, H, sm)})
    else:
        raise ValueError("--figure must be 1..6")
    return rows, None


def cmd_verify(args):
    checks = run_suite(args.suite, seed=args.seed, reps=args.reps, threads=args.threads)
    return {"suite": args.suite, "passed": sum(c["pass"] for c in checks), "total": len(checks),
            "all_pass": all(c["pass"] for c in checks), "checks": checks}, None


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--config", help="key=value file; command-line flags win")

    p = argparse.ArgumentParser(prog="jps", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"jps {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("simulate", cmd_simulate, "draw SRS, JPS or BRSS samples")
    sp.add_argument("--design", choices=("srs", "jps", "brss"), default="jps")
    sp.add_argument("--dist", default="normal")
    sp.add_argument("--n", type=int, default=10)
    sp.add_argument("--h", type=int, default=3)
    sp.add_argument("--m", type=int)
    sp.add_argument("--ranker", default="perfect")
    sp.add_argument("--reps", type=int, default=1)

    sp = add("estimate", cmd_estimate, "estimate mean, variance or CDF from a sample file")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--scheme", default="jps", type=WeightScheme.parse)
    sp.add_argument("--target", choices=("mean", "var", "cdf"), default="mean")
    sp.add_argument("--grid")
    sp.add_argument("--g", default="identity")
    sp.add_argument("--h", type=int)

    sp = add("coeffs", cmd_coeffs, "weight-scheme variance coefficients")
    sp.add_argument("--scheme", default="jps")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--h", type=int, required=True)
    sp.add_argument("--method", choices=("enum", "enumerate", "mc"))
    sp.add_argument("--reps", type=int, default=1_000_000)

    sp = add("moments", cmd_moments, "stratum moments of g(X)")
    sp.add_argument("--dist", required=True)
    sp.add_argument("--h", type=int, required=True)
    sp.add_argument("--g", default="identity")

    sp = add("re", cmd_re, "relative efficiency report")
    sp.add_argument("--vs", choices=("srs", "brss", "ff"), default="srs")
    sp.add_argument("--scheme", default="jps")
    sp.add_argument("--dist", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--hj", type=int, required=True)
    sp.add_argument("--hb", type=int)
    sp.add_argument("--g", default="identity")

    sp = add("re-table", cmd_re_table, "efficiency tables")
    sp.add_argument("--which", choices=("table1", "table2", "table3", "table4"), required=True)
    sp.add_argument("--dist", help="comma-separated subset of the catalog")
    sp.add_argument("--h-max", type=int, default=25)

    sp = add("optimal-h", cmd_optimal_h, "optimal ranking class size over n")
    sp.add_argument("--dist", required=True)
    sp.add_argument("--n-list", default="5:50:5")
    sp.add_argument("--scheme", default="jps")
    sp.add_argument("--h-max", type=int, default=25)

    sp = add("curves", cmd_curves, "curve data for the efficiency figures")
    sp.add_argument("--figure", type=int, required=True)
    sp.add_argument("--dist", help="comma-separated subset of the catalog")

    sp = add("verify", cmd_verify, "Monte Carlo verification suites")
    sp.add_argument("--suite", choices=SUITES, default="all")
    sp.add_argument("--reps", type=int)
    return p


def _read_config(path: str) -> dict[str, str]:
    cfg = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"config line without '=': {line!r}")
        cfg[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return cfg


def _config_argv(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Splice key=value config entries in front of the explicit flags."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config or not argv or argv[0].startswith("-"):
        return argv
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sub = subparsers.choices.get(argv[0])
    if sub is None:
        return argv
    options = {a.dest: a.option_strings[-1] for a in sub._actions if a.option_strings}
    cfg = _read_config(known.config)
    cfg.pop("config", None)
    unknown = sorted(set(cfg) - set(options))
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    injected = [tok for key, value in cfg.items() for tok in (options[key], value)]
    # argparse keeps the last occurrence, so explicit flags override the file
    return [argv[0], *injected, *argv[1:]]


def run(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _config_argv(parser, argv)
    except (ValueError, OSError) as exc:
        print(f"jps: error: {exc}", file=sys.stderr)
        return 1
    args = parser.parse_args(argv)
    try:
        if args.threads < 1:
            raise ValueError("--threads must be at least 1")
        data, extra = args.func(args)
        text = _render(args, data, extra)
    except (ValueError, MomentError, ArithmeticError, OSError, RuntimeError) as exc:
        print(f"jps {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())
