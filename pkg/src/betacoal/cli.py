"""Command line front end: verification suites and parameter scans.

Exit codes: 0 success, 1 a check failed, 2 usage error, 3 parameter regime error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import laplace as lp
from . import verify
from ._backend import backend_name
from .laplace import format_float
from .ratefn import RateFunctionContext
from .rates import BetaParams, RateContext, RegimeError
from .simulator import SimConfig, ldp_tail_mc

OUT_DIR_ENV = "BETACOAL_OUT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_REGIME = 0, 1, 2, 3

SCAN_HELP = """\
quantities and CSV columns:
  ratefn            x, I, I_capped, beyond_knee          (a > 1; --x grid, --k)
  laplace-exponent  n, log_E_n, log_E_2n, exponent, reference
                    (--theta with psi = 1, or --ell for the special sequence)
  record            n, record_probability[, explicit_formula]   (0 < a < 1)
  kolmogorov        n, partial_sum, tail, bound, bound_times_n_pow_1_minus_a
                    (0 < a < 1, b > 1 - a; --trunc)
  lln               n, mean_tau, mean_tau_over_log_n, zeta_prime_0   (a > 1)
  ldp               x, I_capped_2, mc_exponent, hits, lower_bound_only
                    (a > 1; --n is the single start state, --replicates, --seed)

grids: "lo..hi" (integers step 1, reals 101 points), "lo..hi:step", or "v1,v2,...".
"""


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing
def parse_grid(text: str, integer: bool) -> list:
    text = str(text).strip()
    try:
        if ".." in text:
            span, _, step = text.partition(":")
            lo_s, hi_s = span.split("..")
            lo, hi = float(lo_s), float(hi_s)
            if hi < lo:
                raise UsageError(f"empty grid {text!r}")
            if integer:
                st = int(step) if step else 1
                if st < 1:
                    raise UsageError(f"grid step must be positive in {text!r}")
                return list(range(int(lo), int(hi) + 1, st))
            if step:
                st = float(step)
                if st <= 0:
                    raise UsageError(f"grid step must be positive in {text!r}")
                count = int(math.floor((hi - lo) / st + 1e-9)) + 1
                return [lo + i * st for i in range(count)]
            return list(np.linspace(lo, hi, 101))
        vals = [v for v in text.split(",") if v.strip()]
        return [int(v) if integer else float(v) for v in vals]
    except ValueError as exc:
        raise UsageError(f"cannot parse grid {text!r}: {exc}") from None


def read_config(path) -> dict:
    """key = value lines; '#' starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value file supplying defaults for any flag")
    p.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or ./betacoal-out)")
    p.add_argument("--seed", type=int, default=42, help="Monte Carlo seed (default 42)")
    p.add_argument("--replicates", type=lambda s: int(float(s)), default=None,
                   help="Monte Carlo replicate count (accepts 1e5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="betacoal", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("verify", help="run acceptance checks", allow_abbrev=False,
                        description="Run numerical acceptance checks and write a JSON report.")
    pv.add_argument("--suite", choices=sorted(verify.SUITES), default="all",
                    help="identities (1-4), asymptotics (5, 8, 9), duality (6, 7), "
                         "montecarlo (10-12) or all")
    _common(pv)

    ps = sub.add_parser("scan", help="tabulate a quantity over a grid", allow_abbrev=False,
                        formatter_class=argparse.RawDescriptionHelpFormatter, epilog=SCAN_HELP,
                        description="Evaluate a quantity over a grid and write CSV plus manifest.")
    ps.add_argument("quantity", choices=["ratefn", "laplace-exponent", "record", "kolmogorov", "lln", "ldp"])
    ps.add_argument("--a", type=float, help="first Beta parameter (> 0)")
    ps.add_argument("--b", type=float, help="second Beta parameter (> 0)")
    ps.add_argument("--n", "--n-grid", dest="n", help="grid of block counts")
    ps.add_argument("--x", help="grid of x values (ratefn, ldp)")
    ps.add_argument("--theta", type=float, help="theta for psi = 1 (laplace-exponent, default -1)")
    ps.add_argument("--ell", type=float, help="use the special sequence with this ell (laplace-exponent)")
    ps.add_argument("--k", type=int, default=2, help="capping level for I^k (ratefn, default 2)")
    ps.add_argument("--trunc", type=int, help="truncation of the Kolmogorov series")
    _common(ps)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config(known.config)
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((t for t in argv if t in sub_action.choices), None)
    if command is None:
        return
    sp = sub_action.choices[command]
    dests = {a.dest: a for a in sp._actions if a.dest not in ("config", "help", "quantity")}
    unknown = sorted(set(values) - set(dests))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    defaults = {}
    for key, raw in values.items():
        act = dests[key]
        try:
            defaults[key] = act.type(raw) if act.type else raw
        except (TypeError, ValueError):
            raise UsageError(f"bad value for {key}: {raw!r}") from None
    sp.set_defaults(**defaults)


# ---------------------------------------------------------------- output
def _out_dir(args) -> Path:
    d = Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or "betacoal-out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return format_float(v)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_manifest(path: Path, command, parameters, seed, outputs, checks) -> None:
    manifest = {
        "command": command,
        "parameters": parameters,
        "seed": seed,
        "tool_version": __version__,
        "backend": backend_name(),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "outputs": outputs,
        "checks": checks,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- verify
def cmd_verify(args, argv) -> int:
    out = _out_dir(args)
    results = verify.run_suite(args.suite, replicates=args.replicates, seed=args.seed)
    checks, failed = [], False
    for i, res in results.items():
        ok = verify.criterion_passed(res)
        failed |= not ok
        soft_warn = any(r.soft and not r.passed for r in res)
        status = "PASS" if ok else "FAIL"
        if ok and soft_warn:
            status = "PASS (soft warning)"
        print(f"criterion {i:2d}: {status}")
        for r in res:
            mark = "ok " if r.passed else ("warn" if r.soft else "FAIL")
            print(f"    [{mark}] {r.name}: measured {r.measured:.4g} (tolerance {r.tolerance:.4g})"
                  + (f"; {r.detail}" if r.detail else ""))
        checks += [r.as_dict() for r in res]
    report = out / f"verify-{args.suite}.json"
    write_manifest(report, list(argv), {"suite": args.suite, "replicates": args.replicates},
                   args.seed, {}, checks)
    print(f"report: {report}")
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------- scans
def _params(args) -> BetaParams:
    if args.a is None or args.b is None:
        raise UsageError("--a and --b are required")
    try:
        return BetaParams(args.a, args.b)
    except ValueError as exc:
        raise RegimeError(str(exc)) from None


def _scan_ratefn(args, p):
    rf = RateFunctionContext(p)
    xs = parse_grid(args.x or "0..3:0.05", integer=False)
    k = args.k
    if k < 2:
        raise UsageError("--k must be at least 2")
    xk = rf.x_threshold(k)
    rows = [(x, rf.big_I(x), rf.big_I_capped(k, x), x > xk) for x in xs]
    return ["x", "I", "I_capped", "beyond_knee"], rows, {"k": k, "x_k": xk, "lambda_k": rf.rates.total_rate(k)}


def _scan_laplace_exponent(args, p):
    ns = parse_grid(args.n or "16,32,64,128,256,512,1024,2048,4096,8192", integer=True)
    rates = RateContext(p, n_max=2 * max(ns))
    ref = None
    if args.ell is not None:
        f = lp.special_functional(rates, args.ell)
        ref = args.ell
    else:
        theta = -1.0 if args.theta is None else args.theta
        f = lp.Functional.constant(theta)
        if p.a > 1:
            ref = RateFunctionContext(rates).zeta(theta)
    s = lp.laplace_series(rates, f, 2 * max(ns))
    rows = [(n, s.log_values[n], s.log_values[2 * n], lp.scaling_exponent(s, n), ref) for n in ns]
    return ["n", "log_E_n", "log_E_2n", "exponent", "reference"], rows, {"functional": f.tag}


def _scan_record(args, p):
    ns = parse_grid(args.n or "1..500", integer=True)
    rates = RateContext(p)
    probs = lp.record_probabilities(rates, max(ns))
    explicit = p.a == 0.5 and p.b == 1.5
    header = ["n", "record_probability"] + (["explicit_formula"] if explicit else [])
    rows = [(n, probs[n]) + ((lp.record_probability_half_three_halves(n),) if explicit else ()) for n in ns]
    return header, rows, {}


def _scan_kolmogorov(args, p):
    ns = parse_grid(args.n or "10,20,50,100,200,500,1000", integer=True)
    trunc = args.trunc or max(10 * max(ns), 10_000)
    bounds = lp.kolmogorov_bounds(RateContext(p), ns, trunc)
    rows = [(kb.n, kb.partial_sum, kb.tail, kb.total, kb.total * kb.n ** (1.0 - p.a)) for kb in bounds]
    return (["n", "partial_sum", "tail", "bound", "bound_times_n_pow_1_minus_a"], rows,
            {"trunc": trunc, "tail_fit_constant": bounds[0].fit_constant})


def _scan_lln(args, p):
    rf = RateFunctionContext(p)
    ns = parse_grid(args.n or "10,100,1000,10000", integer=True)
    if min(ns) < 2:
        raise UsageError("lln grid needs n >= 2")
    mean = lp.mean_absorption_time(rf.rates, max(ns))
    z0 = rf.zeta_prime(0.0)
    rows = [(n, mean[n], mean[n] / math.log(n), z0) for n in ns]
    return ["n", "mean_tau", "mean_tau_over_log_n", "zeta_prime_0"], rows, {}


def _scan_ldp(args, p):
    rf = RateFunctionContext(p)
    ns = parse_grid(args.n or "10000", integer=True)
    if len(ns) != 1:
        raise UsageError("ldp takes a single --n")
    z0 = rf.zeta_prime(0.0)
    xs = parse_grid(args.x, integer=False) if args.x else [g * z0 for g in verify.LDP_GRID]
    cfg = SimConfig(p, ns[0], args.replicates or 100_000, args.seed)
    est = ldp_tail_mc(cfg, xs)
    rows = [(e.x, rf.big_I_capped(2, e.x), e.exponent, e.hits, e.lower_bound_only) for e in est]
    return ["x", "I_capped_2", "mc_exponent", "hits", "lower_bound_only"], rows, {"n": ns[0], "replicates": cfg.replicates}


SCANS = {
    "ratefn": _scan_ratefn,
    "laplace-exponent": _scan_laplace_exponent,
    "record": _scan_record,
    "kolmogorov": _scan_kolmogorov,
    "lln": _scan_lln,
    "ldp": _scan_ldp,
}


def cmd_scan(args, argv) -> int:
    p = _params(args)
    header, rows, extra = SCANS[args.quantity](args, p)
    text = _csv_text(header, rows)
    out = _out_dir(args)
    csv_path = out / f"{args.quantity}.csv"
    csv_path.write_text(text, encoding="utf-8", newline="")
    params = {"a": p.a, "b": p.b, "n": args.n, "x": args.x, "theta": args.theta, "ell": args.ell,
              "k": args.k, "trunc": args.trunc, "replicates": args.replicates}
    params.update(extra)
    write_manifest(out / f"{args.quantity}.manifest.json", list(argv), params, args.seed,
                   {str(csv_path): {"sha256": _sha256(text.encode("utf-8")), "rows": len(rows)}}, [])
    print(f"wrote {csv_path} ({len(rows)} rows)")
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if args.command == "verify":
            return cmd_verify(args, argv)
        return cmd_scan(args, argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"betacoal: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RegimeError, lp.AdmissibilityError) as exc:
        print(f"betacoal: regime error: {exc}", file=sys.stderr)
        return EXIT_REGIME


if __name__ == "__main__":
    sys.exit(main())
