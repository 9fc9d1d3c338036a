"""Experiment runner: builds problems/oracles/schedules from a RunConfig,
executes seeded repeats, aggregates them, and reads/writes the CSV traces.

CSV contracts (consumed by the plotting component):
  run trace:  header "k,gap,z_energy,restart", one row per iteration,
              floats in shortest round-trip decimal form, restart as 0/1
  aggregate:  header "k,median,q25,q75,mean,var"
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (ConfigurationError, Problem, RunConfig, RunRecord, Schedule,
                   reference_optimum)
from .geometry import Regularizer, canonical_point
from .methods import make_schedule, run_method
from .oracles import GradientOracle, NoiseModel


# ---------------------------------------------------------------------------
# Config -> objects
# ---------------------------------------------------------------------------

def build_problem(cfg: RunConfig) -> Problem:
    from . import problems
    name = cfg.problem
    p = cfg.problem_params
    if name == "hard_instance":
        return problems.make_hard_instance(int(p.get("n", 100)),
                                           constraint=p.get("constraint", "all_space"))
    if name == "sc_quadratic":
        return problems.make_sc_quadratic(int(p.get("n", 50)),
                                          float(p.get("mu", 1.0)),
                                          float(p.get("L", 100.0)))
    if name == "lasso":
        data = _regression_data(p)
        return problems.make_lasso(data, float(p.get("radius", 1.0)))
    if name == "logistic":
        data = _regression_data(p, binary=True)
        return problems.make_logistic(data)
    raise ConfigurationError(f"unknown problem family {name!r}")


def _regression_data(p: dict, binary: bool = False):
    from . import problems
    if "csv" in p:
        return problems.load_csv(p["csv"],
                                 label_column=int(p.get("label_column", -1)),
                                 positive_class=(float(p["positive_class"])
                                                 if "positive_class" in p else None))
    data = problems.synth_data(int(p.get("m", 200)), int(p.get("d", 20)),
                               seed=int(p.get("data_seed", 0)),
                               noise_level=float(p.get("noise_level", 0.1)),
                               binary=binary)
    return data.standardize()


def build_noise(cfg: RunConfig, dim: int) -> NoiseModel:
    kind = cfg.noise
    p = cfg.noise_params
    if kind == "exact":
        return NoiseModel.exact()
    if kind == "gaussian":
        return NoiseModel.gaussian(float(p.get("sigma_eta", 0.0)), dim)
    if kind == "adversarial_inner_product":
        return NoiseModel.adversarial_inner_product(float(p.get("delta", 0.0)))
    if kind == "devolder_inexact":
        return NoiseModel.devolder_inexact(float(p.get("delta", 0.0)))
    if kind == "seeded_stochastic":
        return NoiseModel.seeded_stochastic(p.get("generator", "sphere"),
                                            float(p.get("rho", 0.0)))
    raise ConfigurationError(f"unknown noise model {kind!r}")


def default_initial_point(problem: Problem) -> np.ndarray:
    return canonical_point(problem.feasible_set, problem.dim)


def build_schedule(cfg: RunConfig, problem: Problem, noise: NoiseModel) -> Schedule:
    mu_psi = problem.smoothness_L  # default regularizer (L/2)||x||^2
    p = dict(cfg.schedule_params)
    kind = cfg.schedule
    if cfg.algorithm == "to_agdp":
        kind = "theoretically_optimal"
    if kind == "theoretically_optimal":
        sm = None if not p.get("sigma_known", True) else noise.second_moment_bound
        return make_schedule(kind, mu_psi=mu_psi, L=problem.smoothness_L,
                             horizon=cfg.iterations, second_moment=sm)
    if kind == "sc_geometric":
        ratio = p.get("ratio")
        if ratio is None:
            if problem.strong_convexity_mu <= 0:
                raise ConfigurationError(
                    "sc_geometric needs strong_convexity_mu > 0")
            ratio = math.sqrt(problem.strong_convexity_mu / problem.smoothness_L)
        return make_schedule(kind, ratio=float(ratio))
    if kind == "poly":
        return make_schedule(kind, p=int(p.get("p", 1)))
    gamma = float(p.get("gamma", mu_psi / problem.smoothness_L))
    return make_schedule(kind, gamma=gamma)


def run_single(cfg: RunConfig, problem: Problem, fstar: float) -> RunRecord:
    """One seeded run of a validated config against a prebuilt problem."""
    started = time.perf_counter()
    noise = build_noise(cfg, problem.dim)
    oracle = GradientOracle(problem, noise, seed=cfg.seed)
    schedule = build_schedule(cfg, problem, noise)
    reg = Regularizer.quadratic(problem.smoothness_L, problem.feasible_set)
    record = run_method(problem, oracle, schedule, algorithm=cfg.algorithm,
                        iterations=cfg.iterations, fstar=fstar,
                        x0=default_initial_point(problem), regularizer=reg,
                        restart=cfg.restart)
    record.metadata.update(config=cfg.to_dict(), fstar=fstar,
                           wall_time=time.perf_counter() - started)
    if cfg.thin == "log":
        record = thin_log(record)
    return record


def thin_log(record: RunRecord, points: int = 500) -> RunRecord:
    """Keep a log-spaced subset of iterations (always including the last)."""
    n = len(record.k)
    if n <= points:
        return record
    keep = np.unique(np.round(np.logspace(0, math.log10(n), points)).astype(int)) - 1
    return RunRecord(k=record.k[keep], gap=record.gap[keep],
                     z_energy=record.z_energy[keep], restart=record.restart[keep],
                     metadata=dict(record.metadata))


# ---------------------------------------------------------------------------
# Experiments: repeats + aggregation
# ---------------------------------------------------------------------------

@dataclass
class Experiment:
    """A config run ``repeats`` times with seeds seed_base, seed_base+1, ..."""

    config: RunConfig
    repeats: int = 1
    seed_base: int = 0
    aggregation: str = "median"  # "none" | "median" | "mean_var"

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigurationError("repeats must be >= 1")
        if self.aggregation not in ("none", "median", "mean_var"):
            raise ConfigurationError(f"unknown aggregation {self.aggregation!r}")


@dataclass
class AggregateRecord:
    """Pointwise statistics of the gap across repeats."""

    k: np.ndarray
    median: np.ndarray
    q25: np.ndarray
    q75: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    metadata: dict = field(default_factory=dict)


def aggregate(records: list[RunRecord]) -> AggregateRecord:
    """Order-independent pointwise stats; records must share the k grid."""
    ks = records[0].k
    for r in records[1:]:
        if not np.array_equal(r.k, ks):
            raise ValueError("records do not share an iteration grid")
    # sorting first makes mean/var bit-identical under repeat reordering
    gaps = np.sort(np.stack([r.gap for r in records]), axis=0)
    return AggregateRecord(
        k=ks.copy(),
        median=np.median(gaps, axis=0),
        q25=np.quantile(gaps, 0.25, axis=0),
        q75=np.quantile(gaps, 0.75, axis=0),
        mean=np.mean(gaps, axis=0),
        var=np.var(gaps, axis=0),
    )


def _run_repeat(args) -> RunRecord:
    cfg_dict, seed, fstar = args
    cfg = RunConfig.from_dict(cfg_dict)
    cfg.seed = seed
    problem = build_problem(cfg)
    return run_single(cfg, problem, fstar)


def run_experiment(exp: Experiment, workers: int = 1
                   ) -> tuple[list[RunRecord], AggregateRecord]:
    """Execute all repeats (repeat r uses seed seed_base + r) plus the
    aggregate.  Deterministic for a fixed seed_base regardless of workers."""
    cfg = exp.config
    cfg.validate()
    problem = build_problem(cfg)
    build_noise(cfg, problem.dim)  # pre-flight: fail before any iteration runs
    if cfg.algorithm == "magdp" and problem.strong_convexity_mu <= 0:
        raise ConfigurationError(
            "the strongly convex method needs strong_convexity_mu > 0")
    started = time.perf_counter()
    _, fstar = reference_optimum(problem)
    seeds = [exp.seed_base + r for r in range(exp.repeats)]
    if workers > 1 and exp.repeats > 1:
        jobs = [(cfg.to_dict(), s, fstar) for s in seeds]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_repeat, jobs))
    else:
        records = []
        for s in seeds:
            run_cfg = RunConfig.from_dict(cfg.to_dict())
            run_cfg.seed = s
            records.append(run_single(run_cfg, problem, fstar))
    agg = aggregate(records)
    agg.metadata = {"config": cfg.to_dict(), "repeats": exp.repeats,
                    "seed_base": exp.seed_base, "fstar": fstar,
                    "wall_time": time.perf_counter() - started}
    return records, agg


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))  # shortest decimal that round-trips


def write_run_csv(record: RunRecord, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["k,gap,z_energy,restart"]
    for k, gap, ze, rs in zip(record.k, record.gap, record.z_energy, record.restart):
        lines.append(f"{int(k)},{_fmt(gap)},{_fmt(ze)},{int(rs)}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_run_csv(path) -> RunRecord:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != "k,gap,z_energy,restart":
        raise ValueError(f"{path}: not a run trace CSV")
    rows = [ln.split(",") for ln in lines[1:]]
    return RunRecord(
        k=np.array([int(r[0]) for r in rows], dtype=int),
        gap=np.array([float(r[1]) for r in rows]),
        z_energy=np.array([float(r[2]) for r in rows]),
        restart=np.array([bool(int(r[3])) for r in rows]),
    )


def write_aggregate_csv(agg: AggregateRecord, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["k,median,q25,q75,mean,var"]
    for i in range(len(agg.k)):
        lines.append(",".join([str(int(agg.k[i]))] + [
            _fmt(col[i]) for col in (agg.median, agg.q25, agg.q75, agg.mean, agg.var)]))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_aggregate_csv(path) -> AggregateRecord:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != "k,median,q25,q75,mean,var":
        raise ValueError(f"{path}: not an aggregate CSV")
    cols = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]])
    if cols.size == 0:
        cols = np.empty((0, 6))
    return AggregateRecord(k=cols[:, 0].astype(int), median=cols[:, 1],
                           q25=cols[:, 2], q75=cols[:, 3], mean=cols[:, 4],
                           var=cols[:, 5])


def emit_csv(records: list[RunRecord], out_dir,
             aggregate_record: AggregateRecord | None = None) -> list[Path]:
    """Write one CSV per run (run_000.csv, ...) plus aggregate.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [write_run_csv(r, out_dir / f"run_{i:03d}.csv")
             for i, r in enumerate(records)]
    if aggregate_record is not None:
        paths.append(write_aggregate_csv(aggregate_record, out_dir / "aggregate.csv"))
    return paths


def write_metadata(agg: AggregateRecord, out_dir) -> Path:
    path = Path(out_dir) / "meta.json"
    path.write_text(json.dumps(agg.metadata, indent=2, default=str) + "\n")
    return path
