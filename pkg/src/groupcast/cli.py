"""Command-line entry point.

    groupcast run <config.json> [--seed N] [--out DIR] [--trials N] [--quiet]
    groupcast validate <config.json>
    groupcast list-experiments

`run` writes `<stem>.csv` (one header row, one row per parameter point)
and `<stem>.json` (parameters, metrics, seed, version) into the output
directory, which is resolved from --out, the config's `output` field, or
the GROUPCAST_OUT environment variable, in that order (default: current
directory).  Identical config and seed produce byte-identical files.

Exit codes: 0 success; 2 invalid configuration (messages carry line
numbers or field paths); 1 numeric failure (e.g. an infeasible program),
naming the instance.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .config import Config, ConfigError, load
from .experiments import EXPERIMENTS, render_csv, validate_params


def _resolve_out_dir(args_out, cfg: Config) -> Path:
    if args_out:
        return Path(args_out)
    if cfg.output:
        base = cfg.path.parent if cfg.path else Path(".")
        return base / cfg.output
    env = os.environ.get("GROUPCAST_OUT")
    if env:
        return Path(env)
    return Path(".")


def _load_and_validate(path):
    cfg = load(path)
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(
            [f"experiment: unknown kind {cfg.experiment!r}; see `groupcast list-experiments`"]
        )
    parsed, errors = validate_params(cfg.experiment, cfg.params)
    if errors:
        raise ConfigError(errors)
    return cfg, parsed


def _cmd_validate(args) -> int:
    try:
        _load_and_validate(args.config)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"{args.config}: {msg}", file=sys.stderr)
        return 2
    print("ok")
    return 0


def _cmd_run(args) -> int:
    try:
        cfg, parsed = _load_and_validate(args.config)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"{args.config}: {msg}", file=sys.stderr)
        return 2

    seed = args.seed if args.seed is not None else cfg.seed
    exp = EXPERIMENTS[cfg.experiment]
    if args.trials is not None:
        if exp.uses_trials:
            parsed["trials"] = args.trials
        elif not args.quiet:
            print(f"note: --trials has no effect on {cfg.experiment}", file=sys.stderr)

    try:
        result = exp.run(parsed, seed)
    except (RuntimeError, ValueError) as exc:
        print(f"{cfg.experiment} failed: {exc}", file=sys.stderr)
        return 1

    out_dir = _resolve_out_dir(args.out, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{cfg.stem}.csv"
    csv_path.write_text(render_csv(result.header, result.rows))
    written = [csv_path]
    for name, header, rows in result.extra_files:
        extra_path = out_dir / f"{cfg.stem}_{name}"
        extra_path.write_text(render_csv(header, rows))
        written.append(extra_path)

    summary = {
        "experiment": cfg.experiment,
        "name": cfg.stem,
        "seed": seed,
        "version": __version__,
        "parameters": parsed,
        "metrics": result.metrics,
        "outputs": [p.name for p in written],
    }
    json_path = out_dir / f"{cfg.stem}.json"
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n")
    written.append(json_path)

    if not args.quiet:
        for p in written:
            print(f"wrote {p}")
    return 0


def _cmd_list(_args) -> int:
    width = max(len(name) for name in EXPERIMENTS)
    for name in sorted(EXPERIMENTS):
        print(f"{name:<{width}}  {EXPERIMENTS[name].description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupcast",
        description="Reciprocal local sharing experiments: closed forms, LP optima, simulations.",
    )
    parser.add_argument("--version", action="version", version=f"groupcast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to a JSON experiment config")
    p_run.add_argument("--seed", type=int, default=None, help="override the config's seed")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--trials", type=int, default=None, help="override simulation trial count")
    p_run.add_argument("--quiet", action="store_true", help="suppress progress output")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config", help="path to a JSON experiment config")
    p_val.set_defaults(func=_cmd_validate)

    p_list = sub.add_parser("list-experiments", help="list available experiment kinds")
    p_list.set_defaults(func=_cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
