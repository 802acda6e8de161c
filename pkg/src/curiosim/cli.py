"""Command-line interface.

Subcommands: ``bass`` (closed-form evaluation, stochastic sampling,
parameter fitting), ``dist`` (divergence between distributions),
``project`` (verified random projection of a point cloud), and ``sim``
(run and summarize configured experiments).  Exit codes: 0 success,
1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import diffusion, distance, projection, sim
from .distributions import CategoricalDist, GaussianDist
from .knowledge import StoreParseError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curiosim")
    top = parser.add_subparsers(dest="command", required=True)

    bass = top.add_parser("bass", help="diffusion-curve analytics")
    bass_sub = bass.add_subparsers(dest="subcommand", required=True)

    bass_eval = bass_sub.add_parser("eval", help="evaluate the closed forms at a time")
    bass_eval.add_argument("--p", type=float, required=True)
    bass_eval.add_argument("--q", type=float, required=True)
    bass_eval.add_argument("--m", type=float, required=True)
    bass_eval.add_argument("--t", type=float, required=True)

    bass_sample = bass_sub.add_parser("sample", help="draw a stochastic arrival series")
    bass_sample.add_argument("--p", type=float, required=True)
    bass_sample.add_argument("--q", type=float, required=True)
    bass_sample.add_argument("--m", type=float, required=True)
    bass_sample.add_argument("--dt", type=float, required=True)
    bass_sample.add_argument("--horizon", type=float, required=True)
    bass_sample.add_argument("--seed", type=int, required=True)
    bass_sample.add_argument("--out", required=True, help="series CSV to write")

    bass_fit = bass_sub.add_parser("fit", help="recover parameters from a series CSV")
    bass_fit.add_argument("--in", dest="in_path", required=True)
    bass_fit.add_argument("--dt", type=float, default=1.0,
                          help="time step behind the series (default 1.0)")

    dist = top.add_parser("dist", help="divergence between two distributions")
    dist_sub = dist.add_subparsers(dest="subcommand", required=True)

    dist_discrete = dist_sub.add_parser("discrete")
    dist_discrete.add_argument("--p", required=True, help="comma-separated probabilities")
    dist_discrete.add_argument("--q", required=True, help="comma-separated probabilities")

    dist_gaussian = dist_sub.add_parser("gaussian")
    dist_gaussian.add_argument("--mu1", type=float, required=True)
    dist_gaussian.add_argument("--sigma1", type=float, required=True)
    dist_gaussian.add_argument("--mu2", type=float, required=True)
    dist_gaussian.add_argument("--sigma2", type=float, required=True)

    project = top.add_parser("project", help="random-project a point cloud, verified")
    project.add_argument("--in", dest="in_path", required=True,
                         help="headerless CSV, one point per row")
    project.add_argument("--epsilon", type=float, required=True)
    project.add_argument("--seed", type=int, required=True)
    project.add_argument("--out", required=True, help="projected points CSV")
    project.add_argument("--report", required=True, help="verification report JSON")
    project.add_argument("--max-retries", type=int, default=16)

    simulate = top.add_parser("sim", help="run or summarize an experiment")
    sim_sub = simulate.add_subparsers(dest="subcommand", required=True)

    sim_run = sim_sub.add_parser("run")
    sim_run.add_argument("--config", required=True, help="scenario TOML")
    sim_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    sim_run.add_argument("--out", default=None, help="override the config output directory")
    sim_run.add_argument("--parallel", action="store_true",
                         help="advance agents in a thread pool (identical output)")

    sim_report = sim_sub.add_parser("report")
    sim_report.add_argument("--in", dest="in_path", required=True,
                            help="metrics.csv from a run (config.json beside it)")
    sim_report.add_argument("--out", required=True, help="summary JSON to write")
    return parser


def _cmd_bass(args: argparse.Namespace) -> int:
    params = diffusion.BassParams(p=args.p, q=args.q, m=args.m)
    if args.subcommand == "eval":
        f = diffusion.installed_fraction(params, args.t)
        print(f"F(t) = {f:.9g}")
        print(f"S(t) = {diffusion.sales_rate(params, args.t):.9g}")
        print(f"hazard = {diffusion.hazard(params, f):.9g}")
        return 0
    if args.subcommand == "sample":
        series = diffusion.sample_arrivals(
            params, args.dt, args.horizon, np.random.default_rng(args.seed))
        _write_series(args.out, series)
        if series.clamped_steps:
            print(f"warning: hazard*dt clamped on {series.clamped_steps} step(s)",
                  file=sys.stderr)
        print(f"wrote {len(series.counts)} steps "
              f"({int(series.counts.sum())} arrivals) to {args.out}")
        return 0
    raise AssertionError(args.subcommand)


def _cmd_bass_fit(args: argparse.Namespace) -> int:
    series = _read_series(args.in_path, args.dt)
    result = diffusion.fit(series)
    params = result.params
    print(f"p = {params.p:.9g}")
    print(f"q = {params.q:.9g}")
    print(f"m = {params.m:.9g}")
    print(f"residual_norm = {result.residual_norm:.9g}")
    return 0


def _write_series(path: str, series: diffusion.AdoptionSeries) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["step_index", "arrivals"])
        for i, count in enumerate(series.counts):
            writer.writerow([i, int(count)])


def _read_series(path: str, dt: float) -> diffusion.AdoptionSeries:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["step_index", "arrivals"]:
            raise ValueError(f"expected header step_index,arrivals in {path}, got {header}")
        rows = sorted((int(r[0]), float(r[1])) for r in reader if r)
    counts = np.zeros(rows[-1][0] + 1 if rows else 0)
    for index, arrivals in rows:
        counts[index] = arrivals
    return diffusion.AdoptionSeries(dt=dt, counts=counts)


def _cmd_dist(args: argparse.Namespace) -> int:
    if args.subcommand == "discrete":
        p = _parse_probs(args.p, "--p")
        q = _parse_probs(args.q, "--q")
        div = distance.bc_discrete(p, q)
    else:
        div = distance.bc_gaussian(GaussianDist(mu=args.mu1, sigma=args.sigma1),
                                   GaussianDist(mu=args.mu2, sigma=args.sigma2))
    print(f"rho = {div.rho:.9g}")
    print(f"distance = {div.distance:.9g}")
    return 0


def _parse_probs(text: str, flag: str) -> CategoricalDist:
    try:
        probs = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ValueError(f"{flag} must be comma-separated numbers, got {text!r}") from None
    return CategoricalDist(vocab_size=len(probs), probs=probs)


def _cmd_project(args: argparse.Namespace) -> int:
    points = np.loadtxt(args.in_path, delimiter=",", ndmin=2)
    search = projection.find_valid_map(points, args.epsilon,
                                       max_retries=args.max_retries,
                                       rng=np.random.default_rng(args.seed))
    projected = projection.apply_rows(search.map, points)
    np.savetxt(args.out, projected, delimiter=",")
    verdict = projection.verify(search.map, points)
    with open(args.report, "w") as handle:
        json.dump({
            "ok": verdict.ok,
            "worst_ratio_low": verdict.worst_ratio_low,
            "worst_ratio_high": verdict.worst_ratio_high,
            "pairs_checked": verdict.pairs_checked,
            "pairs_skipped": verdict.pairs_skipped,
            "d": search.map.d,
            "k": search.map.k,
            "epsilon": search.map.epsilon,
            "identity": search.map.is_identity,
            "attempts": search.attempts,
        }, handle, indent=2)
        handle.write("\n")
    print(f"projected {points.shape[0]} points from d={search.map.d} to k={search.map.k} "
          f"in {search.attempts} attempt(s)")
    return 0


def _cmd_sim(args: argparse.Namespace) -> int:
    if args.subcommand == "run":
        config = sim.SimConfig.from_toml(args.config)
        if args.seed is not None or args.out is not None:
            doc = config.to_dict()
            if args.seed is not None:
                doc["seed"] = args.seed
            if args.out is not None:
                doc["out_dir"] = args.out
            config = sim.SimConfig.from_dict(doc)
        result = sim.run(config, parallel=args.parallel)
        paths = sim.write_outputs(result, config.out_dir)
        print(f"wrote {paths['metrics']}")
        return 0

    rows = sim.metrics_from_csv(_read_text(args.in_path))
    config_path = os.path.join(os.path.dirname(os.path.abspath(args.in_path)), "config.json")
    if not os.path.exists(config_path):
        raise sim.ConfigError(f"config.json not found next to {args.in_path}")
    with open(config_path) as handle:
        config = sim.SimConfig.from_dict(json.load(handle))
    summary = sim.summarize(rows, config)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    with open(args.out, "w") as handle:
        json.dump(summary, handle, indent=2)
        handle.write("\n")
    print(f"wrote {args.out}")
    return 0


def _read_text(path: str) -> str:
    with open(path) as handle:
        return handle.read()


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "bass":
            if args.subcommand == "fit":
                return _cmd_bass_fit(args)
            return _cmd_bass(args)
        if args.command == "dist":
            return _cmd_dist(args)
        if args.command == "project":
            return _cmd_project(args)
        return _cmd_sim(args)
    except (ValueError, StoreParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (diffusion.FitConvergenceError, projection.MapSearchError,
            distance.QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"unexpected error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
