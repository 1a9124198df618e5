"""Command-line interface: ``liqsched {schedule,cost,envelope,signal,oracle,ow} ...``.

Exit status is 0 on success, 1 for invalid input (empty market, trades without
depth, malformed pattern values, ...) and 2 for unreadable or unparsable files.
All outputs are deterministic functions of the inputs.

CSV series
----------
schedule time series: ``t, delta, r, rho, lambda, lambda_tilde, kappa_tilde, frontier, X, eta``
envelope series: ``k, Lambda_tilde, Lambda_hat, density``
signal series: ``t, lambda_tilde, kappa_tilde, L_star, L_star_running_max, density_at_kappa``
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass

import numpy as np

from .cost import execution_cost, markup_path
from .envelope import compute_envelope, decreasing_envelope, signal
from .exceptions import LiquidityError, NoConvergence, PatternError
from .io import read_pattern, read_schedule, write_csv, write_json
from .oracle import brute_force, cost_matrix, ow_closed_form, projected_gradient
from .pattern import PatternKind, rho, sample_grid, trading_grid
from .scheduler import optimal_schedule
from .validation import check_positive, check_resolution, default_resolution

__all__ = ["RunConfig", "build_parser", "config_from_args", "run", "main"]

logger = logging.getLogger("liqsched")

SUBCOMMANDS = ("schedule", "cost", "envelope", "signal", "oracle", "ow")


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    pattern_path: str | None
    output_path: str | None = None
    resolution: int = 1000
    report_threshold: float = 10.0
    format: str = "json"


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _overrides(args, pattern):
    x = pattern.target if args.target is None else check_positive(args.target, "target")
    eta0 = pattern.eta0 if args.eta0 is None else check_positive(args.eta0, "eta0", allow_zero=True)
    return x, eta0


def _cell_rates(pattern, t):
    idx = np.clip(np.searchsorted(pattern.times, t, side="right") - 1, 0, pattern.n - 1)
    return pattern.resilience[idx]


def _time_series(pattern, sched, eta0, m):
    """Columns of the schedule time series on the schedule's grid."""
    grid = sample_grid(pattern, m) if pattern.zero_resilience else trading_grid(pattern, m)
    lt = decreasing_envelope(grid.lam)
    t = sched.times
    eta = markup_path(pattern, sched, eta0)(t)
    return {
        "t": t,
        "delta": grid.depth,
        "r": _cell_rates(pattern, t),
        "rho": rho(pattern, t),
        "lambda": grid.lam,
        "lambda_tilde": lt,
        "kappa_tilde": lt / grid.rho,
        "frontier": sched.frontier,
        "X": sched.path,
        "eta": np.atleast_1d(eta),
    }


def _cmd_schedule(args, m):
    pattern = read_pattern(args.pattern)
    x, eta0 = _overrides(args, pattern)
    sched = optimal_schedule(pattern, x, eta0, resolution=m, report_threshold=args.report_threshold)
    series = _time_series(pattern, sched, eta0, m)
    if args.csv:
        write_csv(series, args.csv)
    if args.format == "csv":
        return write_csv(series)
    report = execution_cost(pattern, sched, eta0)
    return write_json(
        {
            "y_star": sched.multiplier,
            "total": sched.total,
            "cost": report.total_cost,
            "atoms": [list(a) for a in sched.atoms],
            "rates": [list(r) for r in sched.rates],
            "trades": [list(p) for p in sched.nonzero()],
        }
    )


def _cmd_cost(args, m):
    pattern = read_pattern(args.pattern)
    eta0 = pattern.eta0 if args.eta0 is None else check_positive(args.eta0, "eta0", allow_zero=True)
    trades = read_schedule(args.schedule)
    report = execution_cost(pattern, trades, eta0, check_foc=args.check_foc, resolution=m)
    return write_json(report.to_dict())


def _cmd_envelope(args, m):
    pattern = read_pattern(args.pattern)
    if pattern.zero_resilience:
        raise PatternError("the envelope needs positive resilience somewhere")
    env = compute_envelope(pattern, m)
    k = env.curve_k
    series = {
        "k": k,
        "Lambda_tilde": env.curve_value,
        "Lambda_hat": env.concave_hull_at(k),
        "density": env.density(k),
    }
    if args.format == "json":
        return write_json({"l2_sq": env.l2_sq, "hull_k": env.hull_k, "hull_value": env.hull_value, **series})
    return write_csv(series)


def _cmd_signal(args, m):
    pattern = read_pattern(args.pattern)
    if pattern.zero_resilience:
        raise PatternError("the signal needs positive resilience somewhere")
    env = compute_envelope(pattern, m)
    L = signal(env.grid)
    series = {
        "t": env.grid.times,
        "lambda_tilde": env.lambda_tilde,
        "kappa_tilde": env.kappa_tilde,
        "L_star": L,
        "L_star_running_max": np.maximum.accumulate(L),
        "density_at_kappa": env.unit_frontier(),
    }
    return write_json(series) if args.format == "json" else write_csv(series)


def _cmd_oracle(args, m):
    pattern = read_pattern(args.pattern)
    if pattern.kind is not PatternKind.ATOMIC:
        raise PatternError("the oracle works on atomic patterns")
    x, eta0 = _overrides(args, pattern)
    form = cost_matrix(pattern, eta0)
    out = {"method": args.method, "times": pattern.times}
    if args.method == "lattice":
        res = brute_force(form, x, args.steps, jobs=args.jobs)
        out.update(allocation=res.allocation, cost=res.cost, bound=res.bound, steps=res.steps)
    else:
        res = projected_gradient(form, x)
        out.update(allocation=res.allocation, cost=res.cost, iterations=res.iterations, kkt=res.kkt)
    return write_json(out)


def _cmd_ow(args, m):
    depth, resilience, horizon = args.depth, args.resilience, args.horizon
    x = 1.0 if args.target is None else args.target
    eta0 = 0.0 if args.eta0 is None else args.eta0
    if args.pattern:
        p = read_pattern(args.pattern)
        if p.kind is not PatternKind.PIECEWISE_CONSTANT or p.n != 1:
            raise PatternError("ow needs a single-cell piecewise-constant pattern")
        depth, resilience, horizon = float(p.depth[0]), float(p.resilience[0]), p.horizon
        x = p.target if args.target is None else args.target
        eta0 = p.eta0 if args.eta0 is None else args.eta0
    sol = ow_closed_form(depth, resilience, horizon, x, eta0)
    if args.format == "csv":
        s = np.linspace(0.0, sol.horizon, m + 1)
        return write_csv({"t": s, "X": sol.cumulative(s)})
    return write_json(
        {
            "y_star": sol.multiplier,
            "initial_block": sol.initial_block,
            "terminal_block": sol.terminal_block,
            "rate": sol.rate,
            "start": sol.start,
            "total": sol.total,
            "cost": sol.cost,
            "atoms": [[0.0, sol.initial_block], [sol.horizon, sol.terminal_block]],
            "rates": [[sol.start, sol.horizon, sol.rate]],
        }
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liqsched", description="Optimal execution schedules for time-varying liquidity.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, fmt="json", pattern_required=True):
        if pattern_required:
            p.add_argument("pattern", help="pattern file (.json or .csv)")
        p.add_argument("-o", "--output", help="output file (default: stdout)")
        p.add_argument("--resolution", type=int, default=None, help="samples per cell (default $LIQSCHED_RESOLUTION or 1000)")
        p.add_argument("--format", choices=("json", "csv"), default=fmt)

    def volume(p):
        p.add_argument("--target", type=float, default=None, help="shares to buy (default: from pattern)")
        p.add_argument("--eta0", type=float, default=None, help="initial mark-up (default: from pattern)")

    p = sub.add_parser("schedule", help="optimal schedule")
    common(p)
    volume(p)
    p.add_argument("--report-threshold", type=float, default=10.0, help="block classification multiplier")
    p.add_argument("--csv", help="also write the time series CSV here")

    p = sub.add_parser("cost", help="cost of a given schedule")
    common(p)
    p.add_argument("schedule", help="schedule file (JSON trades/atoms/rates or CSV with t,X)")
    p.add_argument("--eta0", type=float, default=None)
    p.add_argument("--check-foc", action="store_true", help="attach first-order residuals")

    p = sub.add_parser("envelope", help="time-changed curve, concave envelope and density")
    common(p, fmt="csv")

    p = sub.add_parser("signal", help="trading signal on the sample grid")
    common(p, fmt="csv")

    p = sub.add_parser("oracle", help="brute-force or projected-gradient minimum (atomic patterns)")
    common(p)
    volume(p)
    p.add_argument("--method", choices=("lattice", "pg"), default="lattice")
    p.add_argument("--steps", type=int, default=1000, help="lattice steps per unit volume split")
    p.add_argument("--jobs", type=int, default=1, help="threads for the lattice search")

    p = sub.add_parser("ow", help="closed-form schedule for constant depth and resilience")
    common(p, pattern_required=False)
    p.add_argument("pattern", nargs="?", help="single-cell piecewise-constant pattern (overrides the flags below)")
    volume(p)
    p.add_argument("--depth", type=float, default=1.0)
    p.add_argument("--resilience", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=2.0)
    return parser


_COMMANDS = {
    "schedule": _cmd_schedule,
    "cost": _cmd_cost,
    "envelope": _cmd_envelope,
    "signal": _cmd_signal,
    "oracle": _cmd_oracle,
    "ow": _cmd_ow,
}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    m = default_resolution() if args.resolution is None else check_resolution(args.resolution)
    return RunConfig(
        subcommand=args.subcommand,
        pattern_path=args.pattern,
        output_path=args.output,
        resolution=m,
        report_threshold=getattr(args, "report_threshold", 10.0),
        format=args.format,
    )


def run(args: argparse.Namespace) -> int:
    try:
        config = config_from_args(args)
        text = _COMMANDS[config.subcommand](args, config.resolution)
        _emit(text, config.output_path)
    except OSError as exc:
        print(f"liqsched: error: {exc}", file=sys.stderr)
        return 2
    except (LiquidityError, NoConvergence) as exc:
        print(f"liqsched: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
