"""Command-line front end.

    weaktrap simulate    --system ou --scheme wt --h 1/4 --paths 100000 --seed 7
    weaktrap convergence --preset ou-orders
    weaktrap theta-sweep --mode frac --system theta-test --h 0.1 --paths 10000

Exit codes: 0 success, 1 numerical or statistical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction

from . import __version__
from .analysis import (
    SamplingDominatedError,
    collect_points,
    fit_points,
    fit_slope,
    power_law_points,
)
from .benchmarks import BENCHMARKS, FUNCTIONALS, get_benchmark
from .ensemble import EnsembleError, EnsembleSpec, degenerate_sweep, n_steps_for, run_ensemble
from .model import ModelError
from .report import ENSEMBLE_COLUMNS, FIT_COLUMNS, FRACTION_COLUMNS, Table, fmt, render
from .richardson import run_richardson
from .schemes import SCHEME_NAMES, NonFiniteStateError

log = logging.getLogger("weaktrap")


class UsageError(Exception):
    pass


def _ou_orders_runs():
    return [
        ("wt", 0.5, [1 / (4 * k) for k in range(1, 5)], 10_000_000),
        ("euler", None, [3.0**-k for k in range(1, 6)], 500_000),
        ("midpoint-drift", None, [3.0**-k for k in range(1, 6)], 500_000),
    ]


def _talay_orders_runs():
    hs = [1 / (2 * k) for k in range(1, 9)]
    return [
        ("wt", 0.5, hs, 5_000_000),
        ("euler", None, hs, 5_000_000),
        ("midpoint-drift", None, hs, 5_000_000),
    ]


# Reference experiment grids and path counts; --scale multiplies the path counts.
PRESETS = {
    "ou-orders": dict(command="convergence", system="ou", functional="x2sq", T=1.0, runs=_ou_orders_runs()),
    "talay-orders": dict(command="convergence", system="talay", functional="norm-sq", T=1.0, runs=_talay_orders_runs()),
    "theta-fraction": dict(
        command="theta-sweep", mode="frac", system="theta-test", T=1.0, h=0.1, paths=10_000,
        thetas=[round(0.02 * k, 2) for k in range(1, 50)],
    ),
    "theta-slopes": dict(
        command="theta-sweep", mode="slope", system="ou", functional="x2sq", T=1.0,
        hs=[1 / (4 * k) for k in range(1, 5)], paths=10_000_000, thetas=[0.05, 0.25, 0.5, 0.75],
    ),
}


def parse_number(text: str) -> float:
    """Accept decimals and fractions such as ``1/12``."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def parse_list(text: str) -> list[float]:
    items = [s for s in text.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    return [parse_number(s) for s in items]


def _scaled(n: int, scale: float) -> int:
    return max(2, int(round(n * scale)))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--system", choices=sorted(BENCHMARKS))
    p.add_argument("--functional", choices=sorted(FUNCTIONALS))
    p.add_argument("--T", type=parse_number, default=None, help="horizon (default 1)")
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--workers", type=int, default=1, help="worker threads; never changes results")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--scale", type=float, default=1.0, help="multiplier on preset path counts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weaktrap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one ensemble and write one row")
    _add_common(sim)
    sim.add_argument("--scheme", choices=SCHEME_NAMES, default="wt")
    sim.add_argument("--theta", type=parse_number, default=0.5)
    sim.add_argument("--h", type=parse_number)

    conv = sub.add_parser("convergence", help="error against h with log-log slope fits")
    _add_common(conv)
    conv.add_argument("--scheme", default="wt", help="comma-separated scheme names")
    conv.add_argument("--theta", type=parse_number, default=0.5)
    conv.add_argument("--h-list", type=parse_list, dest="h_list")
    conv.add_argument("--self-test", action="store_true", help="fit a synthetic h^2 law")

    sweep = sub.add_parser("theta-sweep", help="degenerate fraction or slope against theta")
    _add_common(sweep)
    sweep.add_argument("--mode", choices=("frac", "slope"), default="frac")
    sweep.add_argument("--theta-list", type=parse_list, dest="theta_list")
    sweep.add_argument("--h", type=parse_number)
    sweep.add_argument("--h-list", type=parse_list, dest="h_list")
    return parser


def _ensemble_row(table, system, scheme, theta, h, T, seed, functional, est, exact):
    error = None if exact is None else exact - est.mean
    table.add(
        system=system, scheme=scheme, theta=theta, h=h, T=T, n_paths=est.n_paths, seed=seed,
        functional=functional, mean=est.mean, stderr=est.stderr, exact=exact, error=error,
        degenerate_fraction=est.degenerate_fraction,
    )


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _apply_preset(args, command):
    if args.preset is None:
        return None
    preset = PRESETS[args.preset]
    if preset["command"] != command:
        raise UsageError(f"preset {args.preset!r} belongs to the {preset['command']!r} command")
    for key in ("system", "functional", "T", "mode"):
        if key in preset and hasattr(args, key):
            setattr(args, key, preset[key])
    return preset


def cmd_simulate(args):
    _require(args, "system", "h", "paths")
    T = args.T if args.T is not None else 1.0
    bench = get_benchmark(args.system)
    functional = args.functional or bench.functional
    theta = args.theta if args.scheme == "wt" else None
    manifest = dict(
        command="simulate", system=args.system, scheme=args.scheme, theta=theta, h=args.h, T=T,
        paths=args.paths, seed=args.seed, functional=functional,
    )
    if args.scheme == "richardson":
        n_steps_for(args.h, T)
        est = run_richardson(bench, args.h, T, args.paths, args.seed, functional, workers=args.workers)
        exact = bench.oracle(functional)(T, bench.x0) if bench.oracle(functional) else None
    else:
        spec = EnsembleSpec(bench, args.scheme, args.h, T, args.paths, args.seed, functional, theta)
        exact = spec.exact()
        est = run_ensemble(spec, workers=args.workers)
    table = Table("ensemble", ENSEMBLE_COLUMNS)
    _ensemble_row(table, args.system, args.scheme, theta, args.h, T, args.seed, functional, est, exact)
    return manifest, [table], None


def _self_test():
    pts = power_law_points([0.5, 0.25, 0.125])
    fit = fit_slope(pts)
    table = Table("fit", FIT_COLUMNS)
    table.add(scheme="synthetic", theta=None, slope=fit.slope, intercept=fit.intercept,
              r_squared=fit.r_squared, n_points=len(pts))
    return dict(command="convergence", self_test=True), [table], None


def cmd_convergence(args):
    if args.self_test:
        return _self_test()
    preset = _apply_preset(args, "convergence")
    if preset is not None:
        runs = [(s, th, hs, _scaled(n, args.scale)) for s, th, hs, n in preset["runs"]]
    else:
        _require(args, "system", "h_list", "paths")
        schemes = [s.strip() for s in args.scheme.split(",") if s.strip()]
        for s in schemes:
            if s not in SCHEME_NAMES:
                raise UsageError(f"unknown scheme {s!r}; choose from {', '.join(SCHEME_NAMES)}")
        runs = [(s, args.theta if s == "wt" else None, args.h_list, args.paths) for s in schemes]
    T = args.T if args.T is not None else 1.0
    bench = get_benchmark(args.system)
    functional = args.functional or bench.functional
    oracle = bench.oracle(functional)
    if oracle is None:
        raise UsageError(f"system {args.system!r} has no exact oracle for {functional!r}")
    exact = oracle(T, bench.x0)
    for _, _, hs, _ in runs:
        if len(hs) < 3:
            raise UsageError("a convergence study needs at least three step sizes")
        for h in hs:
            n_steps_for(h, T)

    manifest = dict(command="convergence", system=args.system, functional=functional, T=T,
                    seed=args.seed, preset=args.preset, scale=args.scale if preset else None)
    for i, (s, th, hs, n) in enumerate(runs):
        manifest[f"run{i}"] = f"scheme={s} theta={fmt(th)} paths={n} h={' '.join(fmt(h) for h in hs)}"

    points = Table("points", ENSEMBLE_COLUMNS)
    fits = Table("fit", FIT_COLUMNS)
    failures = []
    for scheme, theta, hs, n in runs:
        log.info("convergence: %s on %d step sizes, %d paths", scheme, len(hs), n)
        pts = collect_points(bench, scheme, theta, hs, T, n, args.seed, functional, exact,
                             workers=args.workers)
        for p in pts:
            _ensemble_row(points, args.system, scheme, theta, p.h, T, args.seed, functional,
                          p.estimate, exact)
        try:
            study = fit_points(scheme, theta, pts)
        except SamplingDominatedError as exc:
            failures.append(str(exc))
            continue
        fits.add(scheme=scheme, theta=theta, slope=study.slope, intercept=study.intercept,
                 r_squared=study.r_squared, n_points=len(pts))
    return manifest, [points, fits], "\n".join(failures) or None


def cmd_theta_sweep(args):
    preset = _apply_preset(args, "theta-sweep")
    if preset is not None:
        args.theta_list = args.theta_list or preset["thetas"]
        args.paths = _scaled(preset["paths"], args.scale) if args.paths is None else args.paths
        if args.mode == "frac":
            args.h = args.h or preset["h"]
        else:
            args.h_list = args.h_list or preset["hs"]
    if args.theta_list is None:
        args.theta_list = [round(0.02 * k, 2) for k in range(1, 50)]
    for th in args.theta_list:
        if not 0 < th < 1:
            raise UsageError(f"theta {th} outside (0, 1)")
    T = args.T if args.T is not None else 1.0
    manifest = dict(command="theta-sweep", mode=args.mode, system=args.system, T=T,
                    paths=args.paths, seed=args.seed, preset=args.preset,
                    thetas=" ".join(fmt(t) for t in args.theta_list))

    if args.mode == "frac":
        _require(args, "system", "h", "paths")
        n_steps_for(args.h, T)
        manifest["h"] = args.h
        table = Table("fraction", FRACTION_COLUMNS)
        for i, (th, frac) in enumerate(
            degenerate_sweep(args.system, args.theta_list, args.h, T, args.paths, args.seed,
                             workers=args.workers)
        ):
            table.add(system=args.system, theta=th, h=args.h, T=T, n_paths=args.paths,
                      seed=args.seed, degenerate_fraction=frac)
        return manifest, [table], None

    if args.h_list is None:
        args.h_list = [1 / (4 * k) for k in range(1, 5)]
    _require(args, "system", "paths")
    if len(args.h_list) < 3:
        raise UsageError("slope mode needs at least three step sizes")
    for h in args.h_list:
        n_steps_for(h, T)
    bench = get_benchmark(args.system)
    functional = args.functional or bench.functional
    oracle = bench.oracle(functional)
    if oracle is None:
        raise UsageError(f"system {args.system!r} has no exact oracle for {functional!r}")
    exact = oracle(T, bench.x0)
    manifest.update(functional=functional, h_list=" ".join(fmt(h) for h in args.h_list))
    points = Table("points", ENSEMBLE_COLUMNS)
    fits = Table("fit", FIT_COLUMNS)
    failures = []
    for th in args.theta_list:
        pts = collect_points(bench, "wt", th, args.h_list, T, args.paths, args.seed, functional,
                             exact, workers=args.workers)
        for p in pts:
            _ensemble_row(points, args.system, "wt", th, p.h, T, args.seed, functional,
                          p.estimate, exact)
        try:
            study = fit_points("wt", th, pts)
        except SamplingDominatedError as exc:
            failures.append(f"theta={th:g}: {exc}")
            continue
        fits.add(scheme="wt", theta=th, slope=study.slope, intercept=study.intercept,
                 r_squared=study.r_squared, n_points=len(pts))
    return manifest, [points, fits], "\n".join(failures) or None


COMMANDS = {
    "simulate": cmd_simulate,
    "convergence": cmd_convergence,
    "theta-sweep": cmd_theta_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        parser.error("--workers must be at least 1")
    if args.paths is not None and args.paths < 2:
        parser.error("--paths must be at least 2")
    try:
        manifest, tables, failure = COMMANDS[args.command](args)
    except (UsageError, ValueError, KeyError) as exc:
        if isinstance(exc, (EnsembleError, SamplingDominatedError, ModelError)):
            print(f"weaktrap: {exc}", file=sys.stderr)
            return 1
        parser.error(str(exc).strip("'\""))
    except (EnsembleError, NonFiniteStateError, FloatingPointError) as exc:
        print(f"weaktrap: {exc}", file=sys.stderr)
        return 1

    manifest = {"version": __version__, **manifest, "out": args.out or "-"}
    text = render({k: v for k, v in manifest.items() if v is not None}, tables)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if failure:
        print(f"weaktrap: sampling-dominated points, fit refused:\n{failure}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
