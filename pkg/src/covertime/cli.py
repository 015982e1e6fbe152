"""Command-line front end: analytic tables, simulations and the verification suite.

Exit codes: 0 success, 1 verification failure, 2 usage or domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Iterable, Optional, Sequence

import numpy as np

from . import analytic as an
from .analytic import DomainError
from .checks import run_suite
from .simulate import SimPlan, estimate_transform, sample_cover_times, sample_switchback_counts
from .stats import chi_square_poisson, ks_test

SEED_ENV = "COVERTIME_SEED"
GRID_HELP = ("grid as start:stop:step; starts at start and steps until stop, "
             "including stop when it lands on the grid within 1e-9 steps")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers


def parse_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must look like start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"grid must be numeric, got {text!r}") from None
    if not all(map(math.isfinite, (start, stop, step))) or step <= 0 or stop < start:
        raise UsageError(f"grid needs finite start <= stop and step > 0, got {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(count)]


def _values(grid: Optional[str], values: Optional[Sequence[float]], name: str) -> list[float]:
    if grid is not None and values:
        raise UsageError(f"give either --{name} or --{name}-grid, not both")
    out = parse_grid(grid) if grid is not None else list(values or [])
    if not out:
        raise UsageError(f"no {name} values given (use --{name} or --{name}-grid)")
    if not all(math.isfinite(v) for v in out):
        raise UsageError(f"{name} values must be finite")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise UsageError(f"{name} values must be strictly increasing")
    return out


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw, 0)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


# ---------------------------------------------------------------------------
# emission


def fmt_number(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return format(x, ".17g")


def _json_value(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, (bool, int, np.integer)):
        return fmt_number(x)
    x = float(x)
    return fmt_number(x) if math.isfinite(x) else "null"


def json_object(row: dict) -> str:
    return "{" + ", ".join(f"{json.dumps(k)}: {_json_value(v)}" for k, v in row.items()) + "}"


def json_array(rows: Iterable[dict]) -> str:
    return "[" + ",\n ".join(json_object(r) for r in rows) + "]"


def csv_table(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r[c] is None else (r[c] if isinstance(r[c], str) else fmt_number(r[c]))
                    for c in columns])
    return buf.getvalue()


def render(rows: Sequence[dict], columns: Sequence[str], fmt: str,
           summary: Optional[dict] = None, rows_key: str = "rows") -> str:
    """A table, optionally followed by a one-row summary table.

    CSV puts the summary after a blank line as a second header/value pair;
    JSON wraps both as ``{rows_key: [...], "summary": {...}}``.
    """
    if fmt == "json":
        if summary is None:
            return json_array(rows) + "\n"
        return "{" + f"{json.dumps(rows_key)}: {json_array(rows)},\n \"summary\": {json_object(summary)}" + "}\n"
    text = csv_table(rows, columns) if columns else ""
    if summary is not None:
        text += ("\n" if text else "") + csv_table([summary], list(summary))
    return text


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_density(args) -> int:
    ts = _values(args.t_grid, args.t, "t")
    rows = [{"t": t, "p_theta_L": an.density_thetaL(t, args.L)} for t in ts]
    _emit(render(rows, ["t", "p_theta_L"], args.format), args.out)
    return 0


def cmd_cdf(args) -> int:
    ts = _values(args.t_grid, args.t, "t")
    rows = [{"t": t, "cdf_theta_L": an.cdf_thetaL(t, args.L)} for t in ts]
    _emit(render(rows, ["t", "cdf_theta_L"], args.format), args.out)
    return 0


def cmd_laplace(args) -> int:
    ss = _values(args.s_grid, args.s, "s")
    rows = [{"s": s, "laplace_theta_L": an.laplace_theta(s, args.L)} for s in ss]
    _emit(render(rows, ["s", "laplace_theta_L"], args.format), args.out)
    return 0


def cmd_quantile(args) -> int:
    ps = _values(args.p_grid, args.p, "p")
    L2 = an.RangeState(args.L, args.L).L ** 2
    rows = [{"p": p, "quantile_theta_L": L2 * an.quantile_theta1(p)} for p in ps]
    _emit(render(rows, ["p", "quantile_theta_L"], args.format), args.out)
    return 0


def cmd_simulate(args) -> int:
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    plan = SimPlan(n_samples=args.n, dt=args.dt, bridge_correction=not args.no_bridge,
                   base_seed=args.seed, n_streams=args.streams)
    theta = sample_cover_times(plan, args.L)
    L2 = args.L * args.L
    summary = {"n": plan.n_samples, "L": args.L, "dt": plan.dt,
               "bridge_correction": plan.bridge_correction, "seed": args.seed,
               "mean": float(theta.mean()),
               "variance": float(theta.var(ddof=1)) if theta.size > 1 else float("nan")}
    mean, var = an.moments_thetaL(args.L)
    summary["analytic_mean"] = mean
    summary["analytic_variance"] = var
    for s in args.s:
        est, se = estimate_transform(theta, s)
        summary[f"transform_s={fmt_number(s)}"] = est
        summary[f"transform_se_s={fmt_number(s)}"] = se
        summary[f"laplace_theta_L_s={fmt_number(s)}"] = an.laplace_theta(s, args.L)
    if theta.size >= 10:
        ks = ks_test(np.sort(theta), lambda t: an.cdf_theta1(t / L2))
        summary.update(ks_D=ks.statistic, ks_p_value=ks.p_value, ks_pass=ks.passed)
    else:
        summary.update(ks_D=None, ks_p_value=None, ks_pass=None)
    rows = [] if args.summary_only else [{"theta": float(t)} for t in theta]
    columns = [] if args.summary_only else ["theta"]
    _emit(render(rows, columns, args.format, summary, rows_key="samples"), args.out)
    return 0


def cmd_switchbacks(args) -> int:
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    r = an.RangeState(args.a, args.L)
    plan = SimPlan(n_samples=args.n, base_seed=args.seed, n_streams=args.streams)
    nu = sample_switchback_counts(plan, r.a, r.L)
    lam = an.poisson_rate(r.a, r.L)
    hist = np.bincount(nu)
    rows = [{"k": k, "count": int(c), "expected": args.n * an.switchback_pmf(k, r.a, r.L)}
            for k, c in enumerate(hist)]
    summary = {"n": args.n, "a": r.a, "L": r.L, "seed": args.seed, "lambda": lam,
               "mean_nu": float(nu.mean()), "p0_empirical": float(np.mean(nu == 0)), "p0_analytic": r.a / r.L}
    if args.n >= 100:
        chi = chi_square_poisson(hist, lam)
        summary.update(chi2=chi.statistic, df=chi.details["df"], chi2_p_value=chi.p_value,
                       chi2_pass=chi.passed)
    else:
        summary.update(chi2=None, df=None, chi2_p_value=None, chi2_pass=None)
    for t in (0.25, 0.5, 0.75):
        w = t ** nu.astype(float)
        se = float(w.std(ddof=1) / math.sqrt(w.size)) if w.size > 1 else float("nan")
        summary[f"pgf_t={t}"] = float(w.mean())
        summary[f"pgf_se_t={t}"] = se
        summary[f"pgf_analytic_t={t}"] = an.switchback_pgf(t, r.a, r.L)
    _emit(render(rows, ["k", "count", "expected"], args.format, summary, rows_key="histogram"), args.out)
    return 0


def cmd_verify(args) -> int:
    results = run_suite(full=args.full, seed=args.seed)
    ok = all(r.passed for r in results)
    for r in results:
        print(r.line(), file=sys.stderr)
    report = {"pass": ok, "full": bool(args.full), "seed": args.seed,
              "checks": [{"name": r.name, "pass": r.passed, "value": r.value,
                          "tolerance": r.tolerance, "detail": r.detail} for r in results]}
    _emit(json.dumps(report, indent=1, sort_keys=False, default=_jsonable) + "\n", args.out)
    return 0 if ok else 1


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"not serializable: {type(x)!r}")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="covertime", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False):
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", help="output file (default: stdout)")
        if seed:
            sp.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                            help=f"base seed (default: ${SEED_ENV} or 0)")

    for name, fn, help_ in (("density", cmd_density, "density of theta_L"),
                            ("cdf", cmd_cdf, "distribution function of theta_L")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--L", type=float, default=1.0)
        sp.add_argument("--t", type=float, nargs="+")
        sp.add_argument("--t-grid", help=GRID_HELP)
        common(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("laplace", help="E[exp(-s theta_L)]")
    sp.add_argument("--L", type=float, default=1.0)
    sp.add_argument("--s", type=float, nargs="+")
    sp.add_argument("--s-grid", help=GRID_HELP)
    common(sp)
    sp.set_defaults(func=cmd_laplace)

    sp = sub.add_parser("quantile", help="quantiles of theta_L")
    sp.add_argument("--L", type=float, default=1.0)
    sp.add_argument("--p", type=float, nargs="+")
    sp.add_argument("--p-grid", help=GRID_HELP)
    common(sp)
    sp.set_defaults(func=cmd_quantile)

    sp = sub.add_parser("simulate", help="Monte Carlo cover times")
    sp.add_argument("--L", type=float, default=1.0)
    sp.add_argument("--n", type=int, default=10_000)
    sp.add_argument("--dt", type=float, default=1e-4)
    sp.add_argument("--no-bridge", action="store_true", help="disable Brownian-bridge correction")
    sp.add_argument("--streams", type=int, default=1, help="worker threads (output unchanged)")
    sp.add_argument("--s", type=float, nargs="+", default=[0.5, 1.0],
                    help="Laplace arguments for the empirical transform")
    sp.add_argument("--summary-only", action="store_true")
    common(sp, seed=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("switchbacks", help="switchback counts and their Poisson fit")
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--L", type=float, default=1.0)
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--streams", type=int, default=1)
    common(sp, seed=True)
    sp.set_defaults(func=cmd_switchbacks)

    sp = sub.add_parser("verify", help="run the verification suite, JSON report")
    sp.add_argument("--full", action="store_true", help="include the Monte Carlo suites")
    sp.add_argument("--out")
    sp.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed()
        return args.func(args)
    except (UsageError, DomainError) as exc:
        print(f"covertime {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
