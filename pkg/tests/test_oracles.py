import numpy as np
import pytest

from accopt import (ConfigurationError, FeasibleSet, GradientOracle, NoiseModel,
                    Problem, make_hard_instance, sample_point)


def quadratic_problem(dim, constraint="all_space"):
    fs = {"all_space": FeasibleSet.all_space(),
          "simplex": FeasibleSet.simplex()}[constraint]
    return Problem(dim=dim, objective=lambda x: 0.5 * float(x @ x),
                   gradient=lambda x: x.copy(), smoothness_L=1.0,
                   strong_convexity_mu=1.0, feasible_set=fs)


class TestNoiseModelBounds:
    def test_exact_is_zero(self):
        m = NoiseModel.exact()
        assert m.second_moment_bound == 0.0
        assert m.mean_norm_bound == 0.0

    def test_gaussian_second_moment_analytic(self):
        assert NoiseModel.gaussian(0.1, 100).second_moment_bound == pytest.approx(1.0)
        assert NoiseModel.gaussian(1e-3, 100).second_moment_bound == pytest.approx(1e-4)

    def test_gaussian_mean_norm_is_chi_mean(self):
        m = NoiseModel.gaussian(0.1, 100)
        # chi mean for n = 100 sits just under sigma*sqrt(n)
        assert 0.99 < m.mean_norm_bound <= 1.0

    def test_stochastic_moments_exact(self):
        m = NoiseModel.seeded_stochastic("sphere", 0.5)
        assert m.second_moment_bound == pytest.approx(0.25)
        assert m.mean_norm_bound == pytest.approx(0.5)

    def test_unknown_generator(self):
        with pytest.raises(ConfigurationError):
            NoiseModel.seeded_stochastic("bogus", 1.0)


class TestQuery:
    def test_exact_passthrough(self):
        p = quadratic_problem(2)
        o = GradientOracle(p, NoiseModel.exact(), seed=0)
        out = o.query(np.array([1.0, 2.0]))
        assert np.array_equal(out, [1.0, 2.0])
        assert o.query_count == 1

    def test_zero_sigma_gaussian_equals_exact(self):
        p = quadratic_problem(3)
        o1 = GradientOracle(p, NoiseModel.gaussian(0.0, 3), seed=5)
        o2 = GradientOracle(p, NoiseModel.exact(), seed=5)
        for _ in range(20):
            x = np.random.default_rng(1).normal(size=3)
            assert np.array_equal(o1.query(x), o2.query(x))

    def test_devolder_leaves_queries_exact(self):
        p = quadratic_problem(3)
        o = GradientOracle(p, NoiseModel.devolder_inexact(1e-4), seed=0)
        x = np.array([1.0, -1.0, 0.5])
        assert np.array_equal(o.query(x), x)
        assert o.second_moment() == 0.0

    def test_chi_square_concentration(self):
        # sample mean of ||eta||^2 over 1e4 queries lands within 5% of n*sigma^2
        p = quadratic_problem(100)
        o = GradientOracle(p, NoiseModel.gaussian(0.1, 100), seed=7)
        x = np.zeros(100)
        sq = np.array([np.sum(o.query(x) ** 2) for _ in range(10_000)])
        assert 0.95 <= sq.mean() <= 1.05

    def test_zero_mean_empirical(self):
        p = quadratic_problem(50)
        sigma = 0.2
        o = GradientOracle(p, NoiseModel.gaussian(sigma, 50), seed=11)
        x = np.zeros(50)
        total = np.zeros(50)
        n_queries = 100_000
        for _ in range(n_queries):
            total += o.query(x)
        bound = 3.0 * np.sqrt(50 * sigma**2 / n_queries)
        assert np.linalg.norm(total / n_queries) <= bound

    def test_sphere_generator_norm_exact(self):
        p = quadratic_problem(10)
        o = GradientOracle(p, NoiseModel.seeded_stochastic("sphere", 0.3), seed=2)
        x = np.zeros(10)
        for _ in range(100):
            assert np.linalg.norm(o.query(x)) == pytest.approx(0.3, abs=1e-12)

    def test_rademacher_generator_norm_exact(self):
        p = quadratic_problem(16)
        o = GradientOracle(p, NoiseModel.seeded_stochastic("rademacher", 0.3), seed=2)
        x = np.zeros(16)
        for _ in range(100):
            assert np.linalg.norm(o.query(x)) == pytest.approx(0.3, abs=1e-12)


class TestAdversarialModel:
    def test_rejected_on_unbounded_set(self):
        p = quadratic_problem(4)
        with pytest.raises(ConfigurationError):
            GradientOracle(p, NoiseModel.adversarial_inner_product(0.1), seed=0)

    def test_inner_product_bound_on_feasible_pairs(self):
        p = quadratic_problem(5, constraint="simplex")
        delta = 0.05
        o = GradientOracle(p, NoiseModel.adversarial_inner_product(delta), seed=0)
        rng = np.random.default_rng(3)
        x = sample_point(p.feasible_set, 5, rng)
        eta = o.query(x) - p.gradient(x)
        for _ in range(1000):
            y = sample_point(p.feasible_set, 5, rng)
            z = sample_point(p.feasible_set, 5, rng)
            assert abs(eta @ (y - z)) <= delta + 1e-12

    def test_declared_moments(self):
        p = quadratic_problem(5, constraint="simplex")
        o = GradientOracle(p, NoiseModel.adversarial_inner_product(0.2), seed=0)
        norm = 0.2 / p.feasible_set.diameter
        assert o.second_moment() == pytest.approx(norm**2)
        assert o.mean_norm() == pytest.approx(norm)


class TestDeterminismAndStreams:
    def test_equal_seeds_bit_identical(self):
        p = make_hard_instance(20)
        x = np.zeros(20)
        outs = []
        for _ in range(2):
            o = GradientOracle(p, NoiseModel.gaussian(0.1, 20), seed=321)
            outs.append(np.stack([o.query(x) for _ in range(50)]))
        assert np.array_equal(outs[0], outs[1])

    def test_different_seeds_differ(self):
        p = make_hard_instance(20)
        x = np.zeros(20)
        a = GradientOracle(p, NoiseModel.gaussian(0.1, 20), seed=1).query(x)
        b = GradientOracle(p, NoiseModel.gaussian(0.1, 20), seed=2).query(x)
        assert not np.array_equal(a, b)

    def test_queries_consume_disjoint_stream_segments(self):
        p = quadratic_problem(8)
        o = GradientOracle(p, NoiseModel.gaussian(0.1, 8), seed=9)
        x = np.zeros(8)
        positions = [o.stream_position()]
        for _ in range(100):
            o.query(x)
            positions.append(o.stream_position())
        assert all(positions[i] < positions[i + 1] for i in range(100))

    def test_query_count_increments_by_one(self):
        p = quadratic_problem(4)
        o = GradientOracle(p, NoiseModel.gaussian(0.1, 4), seed=0)
        for i in range(10):
            assert o.query_count == i
            o.query(np.zeros(4))
