"""Command-line front end: lvalue, havg, gavg, table, diag and verify."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import verify
from .averages import (
    DEFAULT_CAP,
    DEFAULT_TOL,
    Context,
    FamilyData,
    ToleranceError,
    average_report,
    central_value,
    relation_residuals,
    short_sum_diag,
)
from .heckechar import HypothesisError
from .newform import CURVES, SeedError, read_seeds

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_TOL = 0, 1, 2, 3

HAVG_HEADER = ["p", "alpha", "beta", "k", "H_direct", "H_formula", "residual", "main_term", "verdict"]
GAVG_HEADER = ["p", "alpha", "beta", "k", "tame", "h_star", "delta_re", "delta_im", "certificate", "verdict"]
TABLE_HEADER = [
    "p", "alpha", "beta", "k", "H_direct", "H_formula", "residual", "certificate",
    "D", "Dt", "E", "H_own", "main_term", "R1", "R2", "R3", "relation_certificate",
    "difference", "difference_certificate", "nonvanishing", "clamped", "verdict",
]
DIAG_HEADER = ["x", "S_x"]

# keys echoed into output headers; threads and paths do not change results
ECHO_KEYS = ("curve", "seeds", "disc", "prime", "alpha", "beta", "k", "tol", "depletion", "convention",
             "n_cap", "on_cap", "rho", "chi", "b", "x_max", "no_main", "format")


class InputError(ValueError):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def jsonable(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def parse_range(text: str, name: str) -> list[int]:
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise InputError(f"--{name}: expected an integer or A..B, got {text!r}") from None
    if lo < 0 or hi < lo:
        raise InputError(f"--{name}: bad range {text!r}")
    return list(range(lo, hi + 1))


def parse_ks(text: str) -> list[int]:
    ks = parse_range(text, "k")
    if any(k not in (0, 1) for k in ks):
        raise InputError("--k must lie in {0, 1}")
    return ks


def read_config(path) -> dict[str, str]:
    """``key = value`` lines; '#' starts a comment; dashes and underscores are interchangeable."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _common(sp: argparse.ArgumentParser, grid: bool = True) -> None:
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--seeds", help="seed file: 'N,<level>' then 'p,a_p' lines")
    src.add_argument("--curve", help="curve label (%s) or a1,a2,a3,a4,a6" % ", ".join(sorted(CURVES)))
    sp.add_argument("--disc", type=int, default=-7, help="fundamental discriminant D < 0")
    sp.add_argument("--prime", type=int, default=3, help="odd prime p")
    if grid:
        sp.add_argument("--alpha", default="0", help="A or A..B")
        sp.add_argument("--beta", default="0", help="A or A..B")
        sp.add_argument("--k", default="0", help="0, 1 or 0..1")
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sp.add_argument("--n-cap", dest="n_cap", type=int, default=DEFAULT_CAP, help="largest truncation length")
    sp.add_argument("--on-cap", dest="on_cap", choices=("raise", "clamp"), default="raise")
    sp.add_argument("--threads", type=int, default=None, help="worker threads (env RSAVG_THREADS)")
    sp.add_argument("--out", help="output path (default stdout)")
    sp.add_argument("--config", help="key = value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rsavg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("lvalue", help="one central value (JSON)")
    _common(sp)
    sp.add_argument("--rho", type=int, default=0, help="ring class character index")
    sp.add_argument("--chi", type=int, default=0, help="Dirichlet character index")
    sp.add_argument("--depletion", choices=("top", "own", "both"), default="top")

    for name, text in (("havg", "harmonic averages, both routes"), ("gavg", "Galois averages per tame class"),
                       ("table", "grid sweep with all diagnostics")):
        sp = sub.add_parser(name, help=text)
        _common(sp)
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--convention", choices=("exact", "literal"), default="exact", help="E-term convention")
        sp.add_argument("--no-main", dest="no_main", action="store_true", help="leave main_term empty")
        if name == "table":
            sp.add_argument("--depletion", choices=("top", "own", "both"), default="top")

    sp = sub.add_parser("diag", help="short-sum diagnostic")
    _common(sp, grid=False)
    sp.add_argument("--b", type=int, default=1)
    sp.add_argument("--x-max", dest="x_max", type=int, default=10**4)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("verify", help="run a self-check suite")
    sp.add_argument("suite", choices=verify.SUITES)
    _common(sp, grid=False)
    return parser


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(unknown)}")
        # reparse with file values as defaults so explicit flags win
        defaults = {}
        for a in sub._actions:
            if a.dest in cfg:
                val = cfg[a.dest]
                if isinstance(a, argparse._StoreTrueAction):
                    defaults[a.dest] = val.lower() in ("1", "true", "yes", "on")
                else:
                    defaults[a.dest] = a.type(val) if a.type else val
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def make_context(args) -> Context:
    if args.threads is not None:
        threads = args.threads
    else:
        try:
            threads = int(os.environ.get("RSAVG_THREADS", "1"))
        except ValueError:
            raise InputError("RSAVG_THREADS must be an integer") from None
    if threads < 1:
        raise InputError("thread count must be positive")
    if args.seeds:
        form = read_seeds(args.seeds)
    else:
        curve = args.curve or "11a1"
        if curve in CURVES:
            form = curve
        else:
            try:
                form = tuple(int(t) for t in curve.split(","))
            except ValueError:
                raise InputError(f"unknown curve {curve!r}") from None
            if len(form) != 5:
                raise InputError("--curve needs five coefficients a1,a2,a3,a4,a6")
    return Context(args.disc, form, args.prime, tol=args.tol, n_cap=args.n_cap, on_cap=args.on_cap, threads=threads)


def config_echo(args) -> dict:
    d = vars(args)
    out = {"command": args.command}
    for key in ECHO_KEYS:
        if key in d and d[key] is not None:
            out[key] = d[key]
    if "curve" not in out and "seeds" not in out:
        out["curve"] = "11a1"
    return out


class Writer:
    def __init__(self, args, header: list[str]):
        self.fmt = getattr(args, "format", "json")
        self.header = header
        self.lines: list[str] = []
        cfg = config_echo(args)
        if self.fmt == "csv":
            self.lines += [f"# {k} = {v}" for k, v in cfg.items()]
            self.lines.append(",".join(header))
        else:
            self.lines.append(json.dumps({"config": cfg}, sort_keys=True))

    def comment(self, text: str) -> None:
        if self.fmt == "csv":
            self.lines.append(f"# {text}")
        else:
            self.lines.append(json.dumps({"comment": text}))

    def row(self, values: dict) -> None:
        if self.fmt == "csv":
            self.lines.append(",".join(fmt(values.get(h)) for h in self.header))
        else:
            self.lines.append(json.dumps({h: jsonable(values.get(h)) for h in self.header}))

    def record(self, obj: dict) -> None:
        self.lines.append(json.dumps({k: jsonable(v) for k, v in obj.items()}))

    def flush(self, out_path) -> None:
        text = "\n".join(self.lines) + "\n"
        if out_path:
            Path(out_path).write_text(text)
        else:
            sys.stdout.write(text)


def grid(args):
    for a in parse_range(args.alpha, "alpha"):
        for b in parse_range(args.beta, "beta"):
            yield a, b


# -- commands ----------------------------------------------------------------------


def cmd_lvalue(args) -> int:
    ctx = make_context(args)
    (a,), (b,), ks = parse_range(args.alpha, "alpha"), parse_range(args.beta, "beta"), parse_ks(args.k)
    fam = ctx.family(a, b)
    if not (0 <= args.rho < len(fam.rhos) and 0 <= args.chi < len(fam.chis)):
        raise InputError(f"selector out of range: {len(fam.rhos)} ring class and {len(fam.chis)} Dirichlet characters")
    modes = ("top", "own") if args.depletion == "both" else (args.depletion,)
    w = Writer(args, [])
    for k in ks:
        rec = {}
        for mode in modes:
            cv = central_value(ctx, a, b, args.rho, args.chi, k, mode)
            if cv.forced_zero:
                verdict = "forced-zero"
            else:
                verdict = "nonzero" if abs(cv.value) > cv.certificate else "indeterminate"
            rec[mode] = cv
            w.record({
                "label": cv.label, "alpha": a, "beta": b, "k": k, "depletion": mode,
                "depletion_modulus": cv.depletion, "value_re": cv.value.real, "value_im": cv.value.imag,
                "certificate": cv.certificate, "n_max": cv.n_max, "classification": cv.classification,
                "root_number_re": cv.root_number.real, "root_number_im": cv.root_number.imag, "verdict": verdict,
            })
        if len(rec) == 2 and rec["own"].value != 0:
            ratio = rec["top"].value / rec["own"].value
            w.record({"label": rec["top"].label, "k": k, "ratio_top_own_re": ratio.real, "ratio_top_own_im": ratio.imag})
    w.flush(args.out)
    return EXIT_OK


def _main_term(ctx, args, a, b, k):
    if args.no_main:
        return None
    from .averages import main_term

    return main_term(ctx, a, b, k)


def cmd_havg(args) -> int:
    ctx = make_context(args)
    ks = parse_ks(args.k)
    w = Writer(args, HAVG_HEADER)
    for a, b in grid(args):
        ctx.prepare(a, b, ks)
        for k in ks:
            r = average_report(ctx, a, b, k, args.convention, with_main=False)
            w.row({
                "p": ctx.p, "alpha": a, "beta": b, "k": k, "H_direct": r.H_direct.real, "H_formula": r.H_formula,
                "residual": r.residual, "main_term": _main_term(ctx, args, a, b, k),
                "verdict": "ok" if r.identity_ok else "fail",
            })
    w.flush(args.out)
    return EXIT_OK


def cmd_gavg(args) -> int:
    ctx = make_context(args)
    ks = parse_ks(args.k)
    w = Writer(args, GAVG_HEADER)
    for a, b in grid(args):
        ctx.prepare(a, b, ks)
        for k in ks:
            for e in FamilyData(ctx, a, b, k).galois(a, b):
                if not e.h_star:
                    continue
                w.row({
                    "p": ctx.p, "alpha": a, "beta": b, "k": k, "tame": e.tame_label, "h_star": e.h_star,
                    "delta_re": e.delta.real, "delta_im": e.delta.imag, "certificate": e.certificate,
                    "verdict": "nonzero" if abs(e.delta) > e.certificate else "indeterminate",
                })
    w.flush(args.out)
    return EXIT_OK


def cmd_table(args) -> int:
    ctx = make_context(args)
    ks = parse_ks(args.k)
    w = Writer(args, TABLE_HEADER)
    for a, b in grid(args):
        ctx.prepare(a, b, ks)
        for k in ks:
            r = average_report(ctx, a, b, k, args.convention, with_main=False)
            own = None
            if args.depletion in ("own", "both"):
                vals = ctx.family_values(a, b, k, "own")
                own = float(np.mean([v.value.real for v in vals]))
            res, nv = r.residuals, r.nonvanishing
            w.row({
                "p": ctx.p, "alpha": a, "beta": b, "k": k, "H_direct": r.H_direct.real, "H_formula": r.H_formula,
                "residual": r.residual, "certificate": r.certificate, "D": r.D, "Dt": r.Dt, "E": r.E,
                "H_own": own, "main_term": _main_term(ctx, args, a, b, k), "R1": res.R1, "R2": res.R2, "R3": res.R3,
                "relation_certificate": res.certificate, "difference": nv.value.real,
                "difference_certificate": nv.certificate, "nonvanishing": nv.verdict, "clamped": r.clamped,
                "verdict": "ok" if r.identity_ok and max(res.R1, res.R2, res.R3) <= 2 * res.certificate else "fail",
            })
    w.flush(args.out)
    return EXIT_OK


def cmd_diag(args) -> int:
    ctx = make_context(args)
    rows, slope = short_sum_diag(ctx, args.b, args.x_max)
    w = Writer(args, DIAG_HEADER)
    for x, s in rows:
        w.row({"x": x, "S_x": s})
    w.comment(f"fitted exponent = {fmt(slope)}")
    w.flush(args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    ctx = make_context(args) if args.suite in ("afe", "haf", "mobius") else None
    checks, elapsed = verify.run_suite(args.suite, ctx)
    lines = [f"{'PASS' if c.ok else 'FAIL'} {c.name}: {c.detail}" for c in checks]
    failed = sum(not c.ok for c in checks)
    lines.append(f"{args.suite}: {len(checks) - failed}/{len(checks)} checks passed in {elapsed:.1f} s")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {"lvalue": cmd_lvalue, "havg": cmd_havg, "gavg": cmd_gavg, "table": cmd_table, "diag": cmd_diag, "verify": cmd_verify}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except ToleranceError as exc:
        print(f"rsavg: {exc}", file=sys.stderr)
        return EXIT_TOL
    except (InputError, HypothesisError, SeedError, ValueError, KeyError, OSError) as exc:
        print(f"rsavg: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
