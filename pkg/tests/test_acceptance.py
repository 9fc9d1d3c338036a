"""Acceptance suite: one test per required behavior, each printing a
[PASS]/[FAIL] line.  Run with `pytest tests/test_acceptance.py -v -s`.
"""
import math
import time

import numpy as np
import pytest

from accopt import (Experiment, GradientOracle, NoiseModel, Regularizer,
                    RunConfig, Schedule, bregman_divergence, emit_csv,
                    make_hard_instance, make_sc_quadratic, noise_energy_proxy,
                    reference_optimum, run_experiment, run_method)
from accopt.methods import devolder_gap_bound


def check(name, fn):
    try:
        fn()
    except AssertionError as exc:
        print(f"[FAIL] {name}: {exc}")
        raise
    print(f"[PASS] {name}")


@pytest.fixture(scope="module")
def hard100():
    problem = make_hard_instance(100)
    xstar, fstar = reference_optimum(problem)
    return problem, xstar, fstar


@pytest.fixture(scope="module")
def agdp_hard_run(hard100):
    """Shared exact-oracle run: 2000 iterations, a_k = (k+1)/2 (gamma = 1)."""
    problem, xstar, fstar = hard100
    reg = Regularizer.quadratic(problem.smoothness_L, problem.feasible_set)
    schedule = Schedule.accelerated(1.0)
    oracle = GradientOracle(problem, NoiseModel.exact(), seed=0)
    started = time.perf_counter()
    record = run_method(problem, oracle, schedule, algorithm="agdp",
                        iterations=2000, fstar=fstar, x0=np.zeros(100),
                        regularizer=reg)
    elapsed = time.perf_counter() - started
    dpsi = bregman_divergence(reg, xstar, np.zeros(100))
    return record, dpsi, elapsed


def test_noiseless_agdp_bound(agdp_hard_run):
    def body():
        record, dpsi, elapsed = agdp_hard_run
        _, A = Schedule.accelerated(1.0).weights(2000)
        excess = np.max(record.gap - dpsi / A)
        assert excess <= 1e-9, f"bound violated by {excess:.3e}"
        assert elapsed < 5.0, f"runtime {elapsed:.2f}s"
    check("noiseless certified bound (2000 iterations, slack 1e-9)", body)


def test_inverse_square_rate(agdp_hard_run):
    def body():
        record, dpsi, _ = agdp_hard_run
        k = np.arange(1, 2001)
        lhs = k * k * record.gap
        cap = 4.0 * dpsi * (1.0 + 10.0 / k)  # 4 L Dpsi / mu_psi with mu_psi = L
        worst = np.max((lhs / cap)[49:])
        assert worst <= 1.0, f"k^2-scaled gap ratio {worst:.3f}"
    check("1/k^2 rate envelope for k >= 50", body)


def test_agd_agdp_equivalence(hard100):
    def body():
        problem, _, fstar = hard100
        reg = Regularizer.quadratic(problem.smoothness_L, problem.feasible_set)
        gaps = {}
        iterates = {}
        for algorithm in ("agd", "agdp"):
            oracle = GradientOracle(problem, NoiseModel.exact(), seed=1)
            from accopt.methods import _DUAL_STEPS, init_dual_state
            schedule = Schedule.matched(1.0)
            state = init_dual_state(np.zeros(100), reg, schedule.kind)
            step = _DUAL_STEPS[algorithm]
            ys = []
            for _ in range(100):
                state = step(state, oracle, schedule, reg)
                ys.append(state.y_prev.copy())
            iterates[algorithm] = np.array(ys)
        deviation = np.abs(iterates["agd"] - iterates["agdp"]).max()
        assert deviation <= 1e-9, f"max iterate deviation {deviation:.3e}"
    check("gradient-step and dual-averaging variants coincide (<= 1e-9)", body)


def test_magdp_geometric_rate():
    def body():
        problem = make_sc_quadratic(50, 1.0, 100.0)
        xstar, fstar = reference_optimum(problem)
        q = math.sqrt(1.0 / 100.0)
        x0 = np.ones(50)
        oracle = GradientOracle(problem, NoiseModel.exact(), seed=0)
        started = time.perf_counter()
        record = run_method(problem, oracle, Schedule.sc_geometric(q),
                            algorithm="magdp", iterations=500, fstar=fstar, x0=x0)
        elapsed = time.perf_counter() - started
        envelope = ((1.0 - q) ** np.arange(1, 501)
                    * 0.5 * (100.0 - 1.0) * float((x0 - xstar) @ (x0 - xstar))
                    * (1.0 + 1e-9))
        worst = np.max(record.gap / envelope)
        assert worst <= 1.0, f"geometric envelope ratio {worst:.4f}"
        assert elapsed < 2.0, f"runtime {elapsed:.2f}s"
    check("strongly convex geometric envelope (500 iterations)", body)


def test_magdp_polynomial_noise_proxy():
    def body():
        k = 1000
        for p in (1, 2, 3):
            proxy = noise_energy_proxy(Schedule.poly(p), k)
            target = (p + 1) ** 2 / (p * k)
            ratio = proxy / target
            assert 0.5 <= ratio <= 2.0, f"p={p}: proxy/target = {ratio:.3f}"
    check("polynomial-weight noise proxy decays as (p+1)^2/(p k)", body)


def _median_gap(algorithm, restart, constraint, sigma, repeats=50, iterations=1000):
    cfg = RunConfig(problem="hard_instance",
                    problem_params={"n": 100, "constraint": constraint},
                    algorithm=algorithm, iterations=iterations, seed=0,
                    noise="gaussian", noise_params={"sigma_eta": sigma},
                    restart=restart)
    _, agg = run_experiment(Experiment(config=cfg, repeats=repeats, seed_base=11))
    return agg


def test_noise_accumulation_vs_averaging():
    def body():
        started = time.perf_counter()
        accel = _median_gap("agdp", "none", "all_space", 0.1)
        plain = _median_gap("gd", "none", "all_space", 0.1)
        slowed = _median_gap("agdp", "rsd2_chain", "all_space", 0.1)
        elapsed = time.perf_counter() - started
        m_accel, m_gd, m_slow = accel.median[-1], plain.median[-1], slowed.median[-1]
        assert m_accel > m_gd, f"accelerated {m_accel:.4f} <= gd {m_gd:.4f}"
        assert m_slow <= 1.5 * m_gd, f"restarted {m_slow:.4f} > 1.5*gd {1.5 * m_gd:.4f}"
        assert elapsed < 120.0, f"runtime {elapsed:.1f}s"
    check("noise accumulates without restart, averages out with it (50 seeds)", body)


def test_constrained_boundedness():
    def body():
        agg = _median_gap("agdp", "none", "simplex", 0.1)
        problem = make_hard_instance(100, constraint="simplex")
        xstar, _ = reference_optimum(problem)
        x0 = np.full(100, 0.01)
        reg = Regularizer.quadratic(problem.smoothness_L, problem.feasible_set)
        dpsi = bregman_divergence(reg, xstar, x0)
        A_k = Schedule.accelerated(1.0).A(1000)
        # Monte-Carlo mean of the noise norm
        rng = np.random.Generator(np.random.Philox(key=np.uint64(2024)))
        noise = NoiseModel.gaussian(0.1, 100)
        mhat = float(np.mean([np.linalg.norm(noise.draw(rng, 100))
                              for _ in range(100_000)]))
        radius = max(float(np.linalg.norm(np.eye(100)[i] - xstar)) for i in range(100))
        assert radius <= math.sqrt(2.0) + 1e-12
        bound = 1.2 * (dpsi / A_k + radius * mhat)
        assert agg.median[-1] <= bound, (
            f"median {agg.median[-1]:.4f} > bound {bound:.4f}")
    check("bounded-set error stays within diameter * mean noise norm", body)


def test_devolder_slack_accumulation(hard100):
    def body():
        problem, xstar, fstar = hard100
        delta = 1e-4
        reg = Regularizer.quadratic(problem.smoothness_L, problem.feasible_set)
        oracle = GradientOracle(problem, NoiseModel.devolder_inexact(delta), seed=0)
        record = run_method(problem, oracle, Schedule.accelerated(1.0),
                            algorithm="agdp", iterations=1000, fstar=fstar,
                            regularizer=reg)
        dpsi = bregman_divergence(reg, xstar, np.zeros(100))
        bound = devolder_gap_bound(Schedule.accelerated(1.0), dpsi, delta, 1000)
        assert np.all(record.gap <= bound), "gap exceeded the slack-aware bound"
        _, A = Schedule.accelerated(1.0).weights(1000)
        slack_term = np.cumsum(A) / A * delta
        ratio = slack_term[999] / slack_term[499]
        assert abs(ratio - 2.0) <= 0.05, f"slack term not linear: ratio {ratio:.3f}"
    check("per-query smoothness slack accumulates linearly", body)


def test_oracle_complexity_audit(hard100):
    def body():
        problem, _, fstar = hard100
        counts = {}
        for algorithm in ("gd", "agd", "agdp", "axgd"):
            oracle = GradientOracle(problem, NoiseModel.exact(), seed=0)
            run_method(problem, oracle, Schedule.accelerated(1.0),
                       algorithm=algorithm, iterations=100, fstar=fstar)
            counts[algorithm] = oracle.query_count
        sc = make_sc_quadratic(20, 1.0, 25.0)
        oracle = GradientOracle(sc, NoiseModel.exact(), seed=0)
        run_method(sc, oracle, Schedule.sc_geometric(0.2), algorithm="magdp",
                   iterations=100, fstar=0.0)
        counts["magdp"] = oracle.query_count
        expected = {"gd": 100, "agd": 100, "agdp": 100, "magdp": 100, "axgd": 200}
        assert counts == expected, f"query counts {counts}"
    check("oracle complexity: one query per step, two for the extra-gradient method", body)


def test_byte_identical_reruns(tmp_path):
    def body():
        cfg = RunConfig(problem="hard_instance", problem_params={"n": 30},
                        algorithm="agdp", iterations=200, seed=5,
                        noise="gaussian", noise_params={"sigma_eta": 0.01},
                        restart="rsd2_chain")
        blobs = []
        for tag in ("a", "b"):
            records, agg = run_experiment(Experiment(config=cfg, repeats=3,
                                                     seed_base=5))
            paths = emit_csv(records, tmp_path / tag, agg)
            blobs.append(b"".join(sorted(p.read_bytes() for p in paths)))
        assert blobs[0] == blobs[1], "reruns produced different CSV bytes"
    check("seeded experiments rerun to byte-identical CSVs", body)
