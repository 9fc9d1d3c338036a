import numpy as np
import pytest

from accopt import (RegressionData, load_csv, make_hard_instance, make_lasso,
                    make_logistic, make_sc_quadratic, power_iteration_lmax,
                    reference_optimum, synth_data)
from accopt.problems import cycle_laplacian_dense, cycle_laplacian_matvec


class TestHardInstance:
    def test_minimum_size(self):
        with pytest.raises(ValueError):
            make_hard_instance(2)

    def test_n4_reference_values(self):
        p = make_hard_instance(4)
        x, f = reference_optimum(p)
        assert np.allclose(x, [3 / 8, 1 / 8, -1 / 8, -3 / 8], atol=1e-12)
        assert f == pytest.approx(-0.375, abs=1e-12)

    def test_n4_largest_eigenvalue(self):
        p = make_hard_instance(4)
        assert p.smoothness_L == pytest.approx(4.0, rel=1e-10)

    def test_value_and_gradient_at_origin(self):
        for n in (3, 10, 101):
            p = make_hard_instance(n)
            zero = np.zeros(n)
            assert p.objective(zero) == 0.0
            expected = np.zeros(n)
            expected[0], expected[-1] = -1.0, 1.0
            assert np.array_equal(p.gradient(zero), expected)

    def test_matvec_matches_dense(self):
        rng = np.random.default_rng(0)
        for n in (3, 7, 32):
            A = cycle_laplacian_dense(n)
            x = rng.normal(size=n)
            assert np.allclose(cycle_laplacian_matvec(x), A @ x, atol=1e-12)

    def test_laplacian_structure(self):
        for n in (3, 5, 16):
            A = cycle_laplacian_dense(n)
            assert np.allclose(A, A.T)
            assert np.allclose(A.sum(axis=1), 0.0)  # row sums zero
            assert np.allclose(cycle_laplacian_matvec(np.ones(n)), 0.0, atol=1e-14)
            assert np.min(np.linalg.eigvalsh(A)) >= -1e-12  # PSD

    def test_b_sums_to_zero(self):
        p = make_hard_instance(9)
        assert p.quadratic.linear.sum() == 0.0

    @pytest.mark.parametrize("n", [3, 4, 17, 33, 64])
    def test_lmax_matches_dense_eigensolve(self, n):
        p = make_hard_instance(n)
        dense = np.max(np.linalg.eigvalsh(cycle_laplacian_dense(n)))
        assert abs(p.smoothness_L - dense) <= 1e-8 * dense


class TestPowerIteration:
    def test_general_symmetric_operator(self):
        rng = np.random.default_rng(1)
        M = rng.normal(size=(40, 12))
        gram = M.T @ M
        est = power_iteration_lmax(lambda v: gram @ v, 12)
        assert est == pytest.approx(np.max(np.linalg.eigvalsh(gram)), rel=1e-8)

    def test_zero_operator(self):
        assert power_iteration_lmax(lambda v: np.zeros_like(v), 5) == 0.0


class TestScQuadratic:
    def test_spectrum_and_optimum(self):
        p = make_sc_quadratic(50, 1.0, 100.0)
        assert p.smoothness_L == 100.0
        assert p.strong_convexity_mu == 1.0
        x, f = reference_optimum(p)
        assert np.allclose(x, 0.0, atol=1e-12)
        assert f == 0.0

    def test_invalid_interval(self):
        with pytest.raises(ValueError):
            make_sc_quadratic(4, 2.0, 1.0)
        with pytest.raises(ValueError):
            make_sc_quadratic(4, 0.0, 1.0)


class TestLasso:
    def test_identity_interpolation(self):
        data = RegressionData(np.eye(2), np.array([1.0, 0.0]))
        p = make_lasso(data, radius=10.0)
        x, f = reference_optimum(p)
        assert np.allclose(x, [1.0, 0.0], atol=1e-9)
        assert f == pytest.approx(0.0, abs=1e-12)

    def test_identity_boundary_solution(self):
        data = RegressionData(np.eye(2), np.array([2.0, 0.0]))
        p = make_lasso(data, radius=1.0)
        x, f = reference_optimum(p)
        assert np.allclose(x, [1.0, 0.0], atol=1e-9)
        assert f == pytest.approx(0.25, abs=1e-12)
        # brute force over the ball
        rng = np.random.default_rng(2)
        w = rng.dirichlet(np.ones(2), size=100_000) * np.where(
            rng.random((100_000, 2)) < 0.5, -1, 1)
        vals = 0.25 * ((w - data.labels) ** 2).sum(axis=1)
        assert f <= vals.min() + 1e-9

    def test_invalid_radius(self):
        data = RegressionData(np.eye(2), np.array([1.0, 0.0]))
        with pytest.raises(ValueError):
            make_lasso(data, radius=0.0)

    def test_smoothness_constant(self):
        data = synth_data(120, 10, seed=4, noise_level=0.2)
        p = make_lasso(data, 1.0)
        D = data.design
        assert p.smoothness_L == pytest.approx(
            np.max(np.linalg.eigvalsh(D.T @ D)) / 120, rel=1e-8)


class TestLogistic:
    def test_value_and_gradient_at_zero(self):
        data = synth_data(90, 7, seed=5, noise_level=0.5, binary=True)
        p = make_logistic(data)
        zero = np.zeros(7)
        assert p.objective(zero) == pytest.approx(np.log(2.0), rel=1e-12)
        s = 2.0 * data.labels - 1.0
        expected = -(data.design.T @ s) / (2 * 90)
        assert np.allclose(p.gradient(zero), expected, atol=1e-12)

    def test_single_sample_scalar(self):
        data = RegressionData(np.array([[1.0]]), np.array([1.0]))
        p = make_logistic(data)
        x = np.array([0.7])
        assert p.objective(x) == pytest.approx(np.log1p(np.exp(-0.7)), rel=1e-12)
        assert p.gradient(np.zeros(1)) == pytest.approx([-0.5])

    def test_non_binary_labels_rejected(self):
        data = RegressionData(np.eye(3), np.array([0.0, 1.0, 2.0]))
        with pytest.raises(ValueError):
            make_logistic(data)

    def test_smoothness_constant(self):
        data = synth_data(64, 6, seed=6, noise_level=0.4, binary=True)
        p = make_logistic(data)
        D = data.design
        assert p.smoothness_L == pytest.approx(
            np.max(np.linalg.eigvalsh(D.T @ D)) / (4 * 64), rel=1e-8)


class TestRegressionData:
    def test_standardize_moments(self):
        data = synth_data(300, 5, seed=7, noise_level=1.0)
        std = data.standardize()
        assert np.allclose(std.design.mean(axis=0), 0.0, atol=1e-9)
        assert np.allclose(std.design.var(axis=0), 1.0, atol=1e-9)
        assert std.standardized

    def test_constant_column_rejected(self):
        design = np.column_stack([np.ones(5), np.arange(5.0)])
        data = RegressionData(design, np.zeros(5))
        with pytest.raises(ValueError, match="column 0"):
            data.standardize()

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            RegressionData(np.zeros((3, 2)), np.zeros(4))
        with pytest.raises(ValueError):
            RegressionData(np.zeros((0, 2)), np.zeros(0))


class TestLoadCsv:
    def test_hand_written_values(self, tmp_path):
        f = tmp_path / "toy.csv"
        f.write_text("a,b,label\n1,10,0\n2,20,1\n3,30,0\n")
        data = load_csv(f, label_column=-1, standardize=True)
        assert data.design.shape == (3, 2)
        assert np.allclose(data.design.mean(axis=0), 0.0, atol=1e-9)
        assert np.allclose(data.design.var(axis=0), 1.0, atol=1e-9)
        assert np.array_equal(data.labels, [0.0, 1.0, 0.0])

    def test_headerless_and_unstandardized(self, tmp_path):
        f = tmp_path / "raw.csv"
        f.write_text("1,10,5\n2,20,6\n")
        data = load_csv(f, label_column=0, standardize=False)
        assert np.array_equal(data.design, [[10.0, 5.0], [20.0, 6.0]])
        assert np.array_equal(data.labels, [1.0, 2.0])

    def test_binarize_rule(self, tmp_path):
        f = tmp_path / "multi.csv"
        f.write_text("1,5\n2,3\n3,5\n4,2\n")
        data = load_csv(f, label_column=1, positive_class=5.0, standardize=False)
        assert np.array_equal(data.labels, [1.0, 0.0, 1.0, 0.0])

    def test_ragged_row_named(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("1,2,3\n4,5\n")
        with pytest.raises(ValueError, match="row 1"):
            load_csv(f)

    def test_non_numeric_field_named(self, tmp_path):
        f = tmp_path / "bad2.csv"
        f.write_text("1,2,3\n4,oops,6\n")
        with pytest.raises(ValueError, match="row 1, column 1"):
            load_csv(f)

    def test_constant_column_error(self, tmp_path):
        f = tmp_path / "const.csv"
        f.write_text("1,7,0\n2,7,1\n3,7,0\n")
        with pytest.raises(ValueError, match="column 1"):
            load_csv(f)


class TestSynthData:
    def test_reproducible(self):
        a = synth_data(100, 10, seed=42, noise_level=0.3)
        b = synth_data(100, 10, seed=42, noise_level=0.3)
        assert np.array_equal(a.design, b.design)
        assert np.array_equal(a.labels, b.labels)
        c = synth_data(100, 10, seed=43, noise_level=0.3)
        assert not np.array_equal(a.design, c.design)

    def test_noiseless_planted_weights_interpolate(self):
        data = synth_data(50, 8, seed=8, noise_level=0.0)
        # exact interpolation: the least-squares residual is zero
        w, res, *_ = np.linalg.lstsq(data.design, data.labels, rcond=None)
        assert np.linalg.norm(data.design @ w - data.labels) <= 1e-10
        p = make_lasso(data, radius=1.5 * np.abs(w).sum())
        _, f = reference_optimum(p)
        assert f == pytest.approx(0.0, abs=1e-10)

    def test_binary_labels(self):
        data = synth_data(200, 5, seed=9, noise_level=0.2, binary=True)
        assert set(np.unique(data.labels)) <= {0.0, 1.0}
