"""Command-line entry points.

Subcommands: `learn` runs an ensemble from a config file, `risk` scans the
one-coupling expected loss over evolution times, `scaling` sweeps system
sizes and reports median decay exponents, `validate` cross-checks the fast
likelihood path against the brute-force reference, and `fit` refits a decay
exponent to an existing summary CSV.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace

import numpy as np

from .config import RunConfig, parse_config_file
from .errors import HamlearnError
from .harness import fit_decay, run_ensemble, scaling_study
from .models import (
    FULL_BASIS,
    IQLE,
    TWO_OUTCOME,
    ExperimentSpec,
    InteractionGraph,
    IsingModel,
    SingleParameterModel,
    dense_oracle_distribution,
)
from .output import emit_results, format_float, write_fits_csv
from .risk import GaussianPrior1D, optimal_time, quadrature_posterior_mean_1d, posterior_mean_1d, risk_scan


def _load_config(args) -> RunConfig:
    config = parse_config_file(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.trials is not None:
        config = replace(config, trials=args.trials)
    if args.out is not None:
        config = replace(config, out=args.out)
    return config


def _cmd_learn(args) -> int:
    config = _load_config(args)
    out_dir = config.out or "results"
    result = run_ensemble(config, threads=args.threads)
    paths = emit_results(result, out_dir)
    medians = result.summary[:, 2]
    gammas = [fit.gamma for fit in result.fits if fit is not None]
    print(f"ran {config.trials} trials x {config.n_experiments} experiments")
    if medians.size:
        print(f"median loss: first {format_float(medians[0])}, last {format_float(medians[-1])}")
    if gammas:
        print(f"median decay exponent: {format_float(float(np.median(gammas)))}")
    print("wrote " + ", ".join(sorted(paths.values())))
    return 0


def _cmd_risk(args) -> int:
    prior = GaussianPrior1D(args.mu, args.sigma)
    t_opt = optimal_time(args.sigma)
    t_max = args.t_max if args.t_max is not None else 4.0 / args.sigma
    grid = np.linspace(t_max / args.points, t_max, args.points)
    strategy = args.strategy if args.strategy != "fixed" else args.x_inv
    rng = np.random.default_rng(args.seed or 0)
    points = risk_scan(prior, strategy, grid, alpha=args.alpha, rng=rng,
                       pgh_draws=args.pgh_draws)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "risk.csv")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("x_inv,t,alpha,risk,stderr\n")
        for p in points:
            handle.write(
                f"{format_float(p.x_inv)},{format_float(p.t)},{format_float(p.alpha)},"
                f"{format_float(p.risk)},{format_float(p.stderr)}\n"
            )
    best = min(points, key=lambda p: p.risk)
    print(f"optimal-envelope time for sigma={args.sigma}: {format_float(t_opt)}")
    print(f"grid minimum risk {format_float(best.risk)} at t={format_float(best.t)}")
    print(f"wrote {path}")
    return 0


def _cmd_scaling(args) -> int:
    config = _load_config(args)
    out_dir = config.out or "results"
    rows, results = scaling_study(config, args.n, threads=args.threads)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "scaling.csv")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("n,d,median_gamma,trials_fit\n")
        for row in rows:
            handle.write(
                f"{row.n},{row.dimension},{format_float(row.median_gamma)},{row.trials_fit}\n"
            )
    for row, result in zip(rows, results):
        emit_results(result, os.path.join(out_dir, f"n={row.n}"))
        print(f"n={row.n} d={row.dimension} median gamma {format_float(row.median_gamma)}")
    print(f"wrote {path}")
    return 0


def _cmd_fit(args) -> int:
    with open(args.input, "r", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or args.column not in reader.fieldnames:
            print(f"column {args.column!r} not found in {args.input}", file=sys.stderr)
            return 1
        index_col = reader.fieldnames[0]
        series = [(int(float(row[index_col])), float(row[args.column])) for row in reader]
    fit = fit_decay(series, window=args.window)
    print(
        f"A={format_float(fit.amplitude)} gamma={format_float(fit.gamma)} "
        f"r2={format_float(fit.r2)} window={fit.window[0]}..{fit.window[1]}"
    )
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_fits_csv(os.path.join(args.out, "fits.csv"), [fit])
        print(f"wrote {os.path.join(args.out, 'fits.csv')}")
    return 0


def _cmd_validate(args) -> int:
    rng = np.random.default_rng(args.seed or 0)
    failures = 0

    worst = 0.0
    for n in (2, 3, 4, 5):
        for maker in (InteractionGraph.complete, InteractionGraph.line):
            graph = maker(n)
            model = IsingModel(graph)
            for _ in range(args.instances):
                x = rng.uniform(-0.5, 0.5, graph.dimension)
                inversion = rng.uniform(-0.5, 0.5, graph.dimension)
                t = rng.uniform(0.001, 100.0)
                spec = ExperimentSpec(IQLE, t, inversion, FULL_BASIS)
                gap = np.max(np.abs(
                    model.outcome_distribution(x, spec)
                    - dense_oracle_distribution(graph, x, spec)
                ))
                worst = max(worst, float(gap))
    ok = worst < 1e-9
    failures += not ok
    print(f"{'PASS' if ok else 'FAIL'} fast path vs dense reference: max gap {worst:.3e}")

    graph = InteractionGraph.complete(4)
    model = IsingModel(graph)
    x = rng.uniform(-0.5, 0.5, graph.dimension)
    echo = model.outcome_distribution(x, ExperimentSpec(IQLE, 11.7, x, FULL_BASIS))
    ok = abs(echo[0] - 1.0) < 1e-12
    failures += not ok
    print(f"{'PASS' if ok else 'FAIL'} perfect echo at matching inversion: P = {float(echo[0])!r}")

    pair = InteractionGraph(2, ((0, 1),))
    ising2 = IsingModel(pair)
    single = SingleParameterModel()
    gap = 0.0
    for _ in range(args.instances):
        x = rng.uniform(-0.5, 0.5)
        inversion = rng.uniform(-0.5, 0.5)
        spec = ExperimentSpec(IQLE, rng.uniform(0.01, 50.0), [inversion], TWO_OUTCOME)
        gap = max(gap, abs(ising2.likelihood(0, [x], spec) - single.likelihood(0, [x], spec)))
    ok = gap < 1e-12
    failures += not ok
    print(f"{'PASS' if ok else 'FAIL'} one-coupling model vs 2-qubit pair: max gap {gap:.3e}")

    prior = GaussianPrior1D(0.5, 0.1)
    gap = 0.0
    for _ in range(max(5, args.instances // 20)):
        x_inv = rng.uniform(0.2, 0.8)
        t = rng.uniform(0.5, 20.0)
        for d in (0, 1):
            gap = max(gap, abs(
                posterior_mean_1d(d, prior, x_inv, t)
                - quadrature_posterior_mean_1d(d, prior, x_inv, t)
            ))
    ok = gap < 1e-6
    failures += not ok
    print(f"{'PASS' if ok else 'FAIL'} closed-form posterior mean vs quadrature: max gap {gap:.3e}")

    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hamlearn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    learn = sub.add_parser("learn", help="run a learning ensemble from a config file")
    learn.add_argument("--config", required=True, help="path to a JSON run config")
    learn.add_argument("--seed", type=int, default=None, help="override the master seed")
    learn.add_argument("--out", default=None, help="override the output directory")
    learn.add_argument("--trials", type=int, default=None, help="override the trial count")
    learn.add_argument("--threads", type=int, default=1,
                       help="worker processes; 0 means one per CPU")
    learn.set_defaults(func=_cmd_learn)

    risk = sub.add_parser("risk", help="scan one-coupling expected loss over times")
    risk.add_argument("--mu", type=float, default=0.5, help="prior mean")
    risk.add_argument("--sigma", type=float, default=0.1, help="prior standard deviation")
    risk.add_argument("--alpha", type=float, default=0.0, help="bit-flip rate of the data")
    risk.add_argument("--strategy", default="mean_plus_sigma",
                      choices=["none", "mean_plus_sigma", "mean_minus_sigma", "pgh", "fixed"])
    risk.add_argument("--x-inv", type=float, default=0.0,
                      help="inversion coupling for the fixed strategy")
    risk.add_argument("--t-max", type=float, default=None,
                      help="largest time on the grid (default 4/sigma)")
    risk.add_argument("--points", type=int, default=50, help="grid size")
    risk.add_argument("--pgh-draws", type=int, default=1000)
    risk.add_argument("--seed", type=int, default=0)
    risk.add_argument("--out", default="results")
    risk.set_defaults(func=_cmd_risk)

    scaling = sub.add_parser("scaling", help="median decay exponent vs system size")
    scaling.add_argument("--config", required=True)
    scaling.add_argument("--n", type=int, nargs="+", required=True,
                         help="system sizes to sweep")
    scaling.add_argument("--seed", type=int, default=None)
    scaling.add_argument("--out", default=None)
    scaling.add_argument("--trials", type=int, default=None)
    scaling.add_argument("--threads", type=int, default=1)
    scaling.set_defaults(func=_cmd_scaling)

    validate = sub.add_parser("validate", help="run built-in cross-checks")
    validate.add_argument("--seed", type=int, default=0)
    validate.add_argument("--instances", type=int, default=100,
                          help="random instances per check")
    validate.set_defaults(func=_cmd_validate)

    fit = sub.add_parser("fit", help="refit a decay exponent to an existing CSV")
    fit.add_argument("--input", required=True, help="CSV with an index column first")
    fit.add_argument("--column", default="p50", help="loss column to fit")
    fit.add_argument("--window", type=float, default=0.1,
                     help="leading fraction of experiments to drop")
    fit.add_argument("--out", default=None)
    fit.set_defaults(func=_cmd_fit)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HamlearnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
