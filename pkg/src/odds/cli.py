"""Command-line runner: ``odds <experiment> --config FILE`` and ``odds sweep``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .config import FORMATS, ExperimentConfig, parse_config
from .errors import ConfigError, OddsError
from .experiments import EXPERIMENTS, run_experiment, summary_row
from .report import ReportRow, render, write_atomic
from .rng import RngStream


class ExperimentError(OddsError, RuntimeError):
    pass


def _task(args) -> list[ReportRow]:
    name, params, seed, replicate = args
    try:
        return run_experiment(name, params, RngStream(seed, replicate))
    except Exception as exc:  # add context; the pool re-raises in the parent
        raise ExperimentError(f"{name}: {type(exc).__name__}: {exc}") from exc


def _execute(tasks, workers: int) -> list[list[ReportRow]]:
    if workers <= 1 or len(tasks) <= 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_task, tasks))


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get("ODDS_WORKERS", "1")
        try:
            workers = int(env)
        except ValueError:
            raise ConfigError(f"ODDS_WORKERS must be an integer (got {env!r})") from None
    if workers < 1:
        raise ConfigError("workers must be ≥ 1")
    return workers


def _replicate_rows(config: ExperimentConfig, results) -> list[ReportRow]:
    rows = []
    for r, res in enumerate(results):
        rows += [row.with_prefix("replicate", str(r)) if config.replicates > 1 else row for row in res]
    return rows


def run(config: ExperimentConfig, workers: int | None = None) -> list[ReportRow]:
    """All rows for ``config``; replicate ``r`` draws from stream ``(seed, r)``."""
    workers = resolve_workers(workers)
    tasks = [(config.experiment, config.params, config.seed, r) for r in range(config.replicates)]
    return _replicate_rows(config, _execute(tasks, workers))


def parse_ladder(text: str) -> tuple[str, list]:
    key, sep, values = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError("ladder must look like KEY=v1,v2,...")
    items = [v.strip() for v in values.split(",") if v.strip()]
    if not items:
        raise ConfigError(f"ladder for {key!r} is empty")
    out = []
    for v in items:
        try:
            out.append(json.loads(v))
        except json.JSONDecodeError:
            out.append(v)
    return key, out


def sweep(config: ExperimentConfig, key: str, values: list, workers: int | None = None) -> list[ReportRow]:
    """Rows for every ladder point plus a monotonicity summary of the primary statistic."""
    if not values:
        raise ConfigError("ladder must be nonempty")
    exp = EXPERIMENTS[config.experiment]
    if key not in exp.params:
        raise ConfigError(f"unknown parameter {key!r} for experiment {config.experiment!r}")
    if isinstance(exp.params[key].default, list):
        # a scalar ladder over a list-valued parameter runs one entry per point
        values = [v if isinstance(v, list) else [v] for v in values]
    # validate every point before running anything
    points = [config.replace(params={**config.params, key: v}) for v in values]
    workers = resolve_workers(workers)
    tasks = [(p.experiment, p.params, p.seed, r) for p in points for r in range(config.replicates)]
    results = _execute(tasks, workers)
    rows, primary = [], []
    for i, (v, p) in enumerate(zip(values, points)):
        chunk = _replicate_rows(config, results[i * config.replicates:(i + 1) * config.replicates])
        rows += [row if key in row.param_key.split(";") else row.with_prefix(key, json.dumps(v, separators=(",", ":")))
                 for row in chunk]
        stats = [row.value for row in chunk if row.statistic == exp.primary]
        primary.append(sum(stats) / len(stats) if stats else float("nan"))
    rows.append(summary_row(config.experiment, key, values, primary))
    return rows


def report_text(config: ExperimentConfig, rows, ladder: str | None = None) -> str:
    meta = {"odds_version": __version__, "config_sha256": config.sha256, "seed": config.seed}
    if ladder is not None:
        meta["ladder"] = ladder
    return render(rows, config.format, meta)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--replicates", type=int, help="override the replicate count")
    common.add_argument("--workers", type=int, help="worker processes (default $ODDS_WORKERS or 1)")
    common.add_argument("--out", help="report path ('-' for stdout)")
    common.add_argument("--format", choices=FORMATS, help="report format")
    ap = argparse.ArgumentParser(prog="odds", description="Reproducible probability experiments.")
    ap.add_argument("--version", action="version", version=f"odds {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    sw = sub.add_parser("sweep", parents=[common], help="run a parameter ladder")
    sw.add_argument("--ladder", required=True, help="KEY=v1,v2,...")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = parse_config(args.config)
        if args.command != "sweep" and args.command != config.experiment:
            raise ConfigError(f"config is for experiment {config.experiment!r}, not {args.command!r}")
        config = config.replace(seed=args.seed, replicates=args.replicates, output=args.out, format=args.format)
        if args.command == "sweep":
            key, values = parse_ladder(args.ladder)
            rows = sweep(config, key, values, args.workers)
        else:
            rows = run(config, args.workers)
        ladder = args.ladder.replace(" ", "") if args.command == "sweep" else None
        write_atomic(report_text(config, rows, ladder), config.output)
    except (ConfigError, ExperimentError) as exc:
        print(f"odds: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"odds: error: cannot write report: {exc}", file=sys.stderr)
        return 2
    failed = [r for r in rows if not r.passed]
    for r in failed:
        print(f"odds: FAIL {r.experiment} {r.param_key}={r.param_value} {r.statistic}={r.value!r}", file=sys.stderr)
    return 0 if not failed else 1


if __name__ == "__main__":
    sys.exit(main())
