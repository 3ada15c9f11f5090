"""Command-line entry point: ``clutterem {simulate,fit,benchmark,tables}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import io
from .em import run_em
from .evaluation import classification_error, monte_carlo
from .initialization import init_params
from .numerics import make_rng
from .scenario import ConfigError, generate
from .validation import check_snapshots

LOG_ENV = "CLUTTEREM_LOG_LEVEL"

logger = logging.getLogger("clutterem")


class FlaggedFailure(Exception):
    """Computation finished but some part of it was flagged as failed."""


def _require(bundle, section, command):
    if getattr(bundle, section) is None:
        raise ConfigError(section, f"section required by the {command!r} command")


def cmd_simulate(args, bundle):
    _require(bundle, "scenario", "simulate")
    scenario = bundle.scenario
    if args.seed is not None:
        scenario = type(scenario).from_dict({**scenario.to_dict(), "seed": args.seed})
    data = generate(scenario)
    io.write_range_profile(args.out / "snapshots.csv", data.snapshots)
    io.write_labels(args.out / "truth.csv", data.labels)
    io.write_json(args.out / "scenario.json", scenario.to_dict())
    logger.info("wrote %d snapshots of %d channels to %s", *data.snapshots.shape, args.out)


def cmd_fit(args, bundle):
    _require(bundle, "fit", "fit")
    cfg = bundle.fit
    x = check_snapshots(io.load_range_profile(args.data))
    truth = io.load_labels(args.truth) if args.truth else None
    if truth is not None and truth.shape[0] != x.shape[0]:
        raise ValueError(f"truth file has {truth.shape[0]} labels for {x.shape[0]} snapshots")
    seed = bundle.init_seed if args.seed is None else args.seed
    init = init_params(x, cfg.L, cfg.model_kind, make_rng(seed, "init", 0))
    result = run_em(x, cfg, init)
    doc = io.fit_result_to_dict(result)
    doc["fit_config"] = io.fit_config_to_dict(cfg)
    doc["init_seed"] = seed
    if truth is not None:
        doc["classification_error"] = classification_error(result.labels, truth, "power_order")
        doc["classification_error_best_permutation"] = classification_error(
            result.labels, truth, "best_permutation", max(cfg.L, int(truth.max()) + 1))
    io.write_json(args.out / "fit_result.json", doc)
    io.write_label_comparison(args.out / "labels.csv", result.labels, truth)
    logger.info("fit finished after %d iterations, final log-likelihood %.6g",
                result.iterations_run, result.ll_trace[-1])


def cmd_benchmark(args, bundle):
    _require(bundle, "scenario", "benchmark")
    _require(bundle, "fit", "benchmark")
    settings = bundle.benchmark
    trials = settings.trials if args.trials is None else args.trials
    seed = settings.master_seed if args.seed is None else args.seed
    n_jobs = settings.n_jobs if args.n_jobs is None else args.n_jobs
    report = monte_carlo(bundle.scenario, bundle.fit, trials, seed, settings.matching, n_jobs)
    io.write_json(args.out / "report.json", report.to_dict(canonical=True))
    io.write_histogram(args.out / "histogram.csv", report.error_histogram)
    io.write_json(args.out / "timing.json", {"mean_runtime_ms": report.mean_runtime_ms})
    logger.info("RMSCE %.4f over %d trials", report.rmsce, trials)
    if report.failed_trials:
        raise FlaggedFailure(f"{len(report.failed_trials)} trial(s) failed: {report.failed_trials}")


def cmd_tables(args, bundle):
    _require(bundle, "tables", "tables")
    table = bundle.tables
    trials = table.settings.trials if args.trials is None else args.trials
    seed = table.settings.master_seed if args.seed is None else args.seed
    n_jobs = table.settings.n_jobs if args.n_jobs is None else args.n_jobs
    grid, rows, timing, failed = {}, [], {}, 0
    for sname, scenario in table.scenarios:
        grid[sname] = {}
        for mname, fit in table.methods:
            report = monte_carlo(scenario, fit, trials, seed, table.settings.matching, n_jobs)
            grid[sname][mname] = report.rmsce
            timing[f"{sname}/{mname}"] = report.mean_runtime_ms
            failed += len(report.failed_trials)
            rows.append([sname, mname, repr(report.rmsce), repr(report.rmsce_best_permutation),
                         len(report.failed_trials)])
            logger.info("%s / %s: RMSCE %.4f", sname, mname, report.rmsce)
    doc = {"trials": trials, "master_seed": seed, "matching": table.settings.matching,
           "scenarios": [n for n, _ in table.scenarios], "methods": [n for n, _ in table.methods],
           "rmsce": grid}
    io.write_json(args.out / "tables.json", doc)
    with open(args.out / "tables.csv", "w", encoding="utf-8") as fh:
        fh.write("scenario,method,rmsce,rmsce_best_permutation,failed_trials\n")
        for r in rows:
            fh.write(",".join(str(v) for v in r) + "\n")
    io.write_json(args.out / "timing.json", {"mean_runtime_ms": timing})
    if failed:
        raise FlaggedFailure(f"{failed} trial(s) failed across the table")


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "benchmark": cmd_benchmark, "tables": cmd_tables}


def build_parser():
    parser = argparse.ArgumentParser(prog="clutterem", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help=f"more logging (the {LOG_ENV} environment variable also sets the level)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--seed", type=int, default=None)
        return p

    common(sub.add_parser("simulate", help="draw a labeled synthetic range profile"))
    p = common(sub.add_parser("fit", help="classify the snapshots of a range-profile file"))
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--truth", type=Path, default=None)
    for name, help_ in (("benchmark", "Monte Carlo RMSCE for one scenario and method"),
                        ("tables", "RMSCE grid over scenarios x methods")):
        p = common(sub.add_parser(name, help=help_))
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--n-jobs", type=int, default=None)
    return parser


def _configure_logging(verbosity):
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    if verbosity:
        level = "INFO" if verbosity == 1 else "DEBUG"
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    start = time.perf_counter()
    error = None
    status = 0
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed", "must be a 64-bit unsigned integer")
        bundle = io.parse_config(args.config)
        args.out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, bundle)
    except FlaggedFailure as exc:
        error, status = {"error": "flagged_failure", "message": str(exc)}, 3
    except ConfigError as exc:
        error, status = {"error": "config", "key": exc.key, "message": str(exc)}, 2
    except Exception as exc:  # noqa: BLE001 - every failure becomes a machine-readable record
        error, status = {"error": type(exc).__name__, "message": str(exc)}, 1
    if error is not None:
        error["command"] = args.command
        text = json.dumps(error, sort_keys=True)
        print(text, file=sys.stderr)
        try:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "error.json").write_text(text + "\n", encoding="utf-8")
        except OSError:
            pass
    else:
        (args.out / "error.json").unlink(missing_ok=True)
        logger.info("%s finished in %.1f s", args.command, time.perf_counter() - start)
    return status


if __name__ == "__main__":
    sys.exit(main())
