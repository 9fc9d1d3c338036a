"""Command-line interface.

Subcommands:
  run        one experiment (config file + overrides) -> run CSVs + aggregate
  sweep      algorithms x noise levels matrix -> one output directory per cell
  reference  print the certified reference optimum of a problem

Configs are declarative INI files; see README for the sections and keys.
"""
from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

from .core import ConfigurationError, ReferenceSolveError, RunConfig, reference_optimum
from .harness import (Experiment, build_problem, emit_csv, run_experiment,
                      write_metadata)

_INT_KEYS = {"n", "m", "d", "iterations", "seed", "repeats", "p", "label_column",
             "data_seed", "workers"}
_FLOAT_KEYS = {"mu", "L", "sigma_eta", "delta", "rho", "radius", "gamma", "ratio",
               "noise_level", "positive_class"}
_BOOL_KEYS = {"sigma_known"}


def _coerce(key: str, value: str):
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _BOOL_KEYS:
        return value.strip().lower() in ("1", "true", "yes", "on")
    return value


def load_config(path) -> tuple[RunConfig, dict]:
    """Parse an INI config into (RunConfig, run-section extras)."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigurationError(f"cannot read config file {path}")
    sections = {name: {k: _coerce(k, v) for k, v in parser[name].items()}
                for name in parser.sections()}
    problem = sections.get("problem", {})
    oracle = sections.get("oracle", {})
    schedule = sections.get("schedule", {})
    run = sections.get("run", {})
    name = problem.pop("name", "hard_instance")
    noise = oracle.pop("noise", "exact")
    sched_kind = schedule.pop("kind", "accelerated")
    cfg = RunConfig(
        problem=name, problem_params=problem,
        algorithm=run.pop("algorithm", "agdp"),
        schedule=sched_kind, schedule_params=schedule,
        noise=noise, noise_params=oracle,
        iterations=int(run.pop("iterations", 1000)),
        seed=int(run.pop("seed", 0)),
        restart=run.pop("restart", "none"),
        thin=run.pop("thin", "none"),
    )
    return cfg, run


def _apply_overrides(cfg: RunConfig, extras: dict, args) -> tuple[RunConfig, dict]:
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "iterations", None) is not None:
        cfg.iterations = args.iterations
    if getattr(args, "algorithm", None) is not None:
        cfg.algorithm = args.algorithm
    if getattr(args, "restart", None) is not None:
        cfg.restart = args.restart
    for item in getattr(args, "set", None) or []:
        key, _, value = item.partition("=")
        section, _, name = key.partition(".")
        if not name or not value:
            raise ConfigurationError(f"--set expects section.key=value, got {item!r}")
        target = {"problem": cfg.problem_params, "oracle": cfg.noise_params,
                  "schedule": cfg.schedule_params, "run": extras}.get(section)
        if target is None:
            raise ConfigurationError(f"unknown config section {section!r}")
        if section == "run" and name == "algorithm":
            cfg.algorithm = value
        elif section == "oracle" and name == "noise":
            cfg.noise = value
        elif section == "schedule" and name == "kind":
            cfg.schedule = value
        elif section == "problem" and name == "name":
            cfg.problem = value
        else:
            target[name] = _coerce(name, value)
    if args.repeats is not None:
        extras["repeats"] = args.repeats
    return cfg, extras


def cmd_run(args) -> int:
    cfg, extras = load_config(args.config)
    cfg, extras = _apply_overrides(cfg, extras, args)
    exp = Experiment(config=cfg, repeats=int(extras.get("repeats", 1)),
                     seed_base=cfg.seed)
    out_dir = Path(args.out_dir)
    records, agg = run_experiment(exp, workers=args.workers)
    emit_csv(records, out_dir, agg)
    write_metadata(agg, out_dir)
    print(f"wrote {len(records)} run trace(s) and aggregate to {out_dir}")
    return 0


def cmd_sweep(args) -> int:
    cfg, extras = load_config(args.config)
    cfg, extras = _apply_overrides(cfg, extras, args)
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    sigmas = [float(s) for s in args.sigmas.split(",")]
    out_root = Path(args.out_dir)
    manifest = {"sigmas": sigmas, "algorithms": algorithms, "cells": []}
    for sigma in sigmas:
        for algo in algorithms:
            cell = RunConfig.from_dict(cfg.to_dict())
            cell.algorithm = algo
            cell.seed = cfg.seed
            if algo == "to_agdp":
                cell.schedule = "theoretically_optimal"
            if algo in ("gd", "magdp"):
                cell.restart = "none"  # no dual state to monitor
            if sigma == 0.0:
                cell.noise, cell.noise_params = "exact", {}
            else:
                cell.noise = "gaussian"
                cell.noise_params = {"sigma_eta": sigma}
            exp = Experiment(config=cell, repeats=int(extras.get("repeats", 1)),
                             seed_base=cell.seed)
            cell_dir = out_root / f"sigma_{sigma:g}" / algo
            records, agg = run_experiment(exp, workers=args.workers)
            emit_csv(records, cell_dir, agg)
            write_metadata(agg, cell_dir)
            manifest["cells"].append({"sigma": sigma, "algorithm": algo,
                                      "dir": str(cell_dir.relative_to(out_root))})
            print(f"sigma={sigma:g} {algo}: done")
    out_root.mkdir(parents=True, exist_ok=True)
    (out_root / "sweep.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"sweep manifest: {out_root / 'sweep.json'}")
    return 0


def cmd_reference(args) -> int:
    cfg, _ = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    problem = build_problem(cfg)
    xstar, fstar = reference_optimum(problem)
    print(f"problem: {problem.name}")
    print(f"f* = {fstar!r}")
    if args.verbose:
        print(f"x* = {xstar.tolist()}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="accopt",
                                     description="seeded first-order method experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="INI config file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--repeats", type=int, default=None)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override a config entry")

    p_run = sub.add_parser("run", parents=[common], help="run one experiment")
    p_run.add_argument("--out-dir", required=True)
    p_run.add_argument("--iterations", type=int, default=None)
    p_run.add_argument("--algorithm", default=None)
    p_run.add_argument("--restart", default=None)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="algorithms x noise levels matrix")
    p_sweep.add_argument("--out-dir", required=True)
    p_sweep.add_argument("--algorithms", default="gd,agd,axgd,agdp")
    p_sweep.add_argument("--sigmas", default="0,1e-5,1e-3,1e-1")
    p_sweep.add_argument("--iterations", type=int, default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_ref = sub.add_parser("reference", parents=[common],
                           help="print the certified reference optimum")
    p_ref.add_argument("--verbose", action="store_true")
    p_ref.set_defaults(func=cmd_reference)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ReferenceSolveError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
