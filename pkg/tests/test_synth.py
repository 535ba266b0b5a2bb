import numpy as np
import pytest

from arfa.arpoly import ArPolynomial
from arfa.errors import DomainError
from arfa.rng import stream
from arfa.synth import (
    ArFactorModel,
    default_burn_in,
    random_decomposition,
    random_model,
    random_stable_poly,
    simulate,
)

from helpers import ar_autocovariance


def scalar_model(a_coeffs):
    """Single channel driven by unit idiosyncratic noise only."""
    return ArFactorModel(ArPolynomial(a_coeffs), np.zeros((1, 1)), np.eye(1))


class TestRandomStablePoly:
    def test_order_one_bounded(self):
        a = random_stable_poly(1, stream(0))
        assert abs(a.coeffs[0]) < 0.9

    @pytest.mark.parametrize("method", ["reflection", "poles", "boundary"])
    def test_stability_guarantee(self, method):
        for seed in range(30):
            assert random_stable_poly(5, stream(seed), method=method).is_stable()

    def test_deterministic(self):
        a1 = random_stable_poly(4, stream(1))
        a2 = random_stable_poly(4, stream(1))
        np.testing.assert_array_equal(a1.coeffs, a2.coeffs)

    def test_order_must_be_positive(self):
        with pytest.raises(DomainError):
            random_stable_poly(0, stream(0))

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            random_stable_poly(3, stream(0), method="magic")

    def test_poles_method_odd_order(self):
        assert random_stable_poly(3, stream(7), method="poles").order == 3


class TestRandomDecomposition:
    def test_structure(self):
        W_L, W_D = random_decomposition(2, 1, stream(0))
        L = W_L @ W_L.T
        assert np.linalg.matrix_rank(L) == 1
        assert np.all(np.diag(W_D) > 0)

    @pytest.mark.parametrize("m,r", [(5, 1), (10, 3), (40, 10)])
    def test_frobenius_ratio(self, m, r):
        W_L, W_D = random_decomposition(m, r, stream(m + r))
        ratio = np.linalg.norm(W_D @ W_D.T) / np.linalg.norm(W_L @ W_L.T)
        assert 0.99 <= ratio <= 1.01

    def test_requested_ratio(self):
        W_L, W_D = random_decomposition(12, 3, stream(3), ratio=0.22)
        ratio = np.linalg.norm(W_D @ W_D.T) / np.linalg.norm(W_L @ W_L.T)
        np.testing.assert_allclose(ratio, 0.22, rtol=1e-12)

    def test_sum_positive_definite(self):
        W_L, W_D = random_decomposition(40, 10, stream(42))
        eig_min = np.linalg.eigvalsh(W_L @ W_L.T + W_D @ W_D.T)[0]
        assert eig_min > 0

    def test_gaussian_spectrum_full_rank(self):
        W_L, _ = random_decomposition(8, 3, stream(5), spectrum="gaussian")
        assert np.linalg.matrix_rank(W_L) == 3

    def test_rank_bounds(self):
        with pytest.raises(DomainError):
            random_decomposition(4, 4, stream(0))
        with pytest.raises(DomainError):
            random_decomposition(4, 0, stream(0))


class TestSimulate:
    def test_ar1_stationary_variance(self):
        # var = 1 / (1 - 0.25) for a = -0.5 driven by unit noise
        y = simulate(scalar_model([-0.5]), 100_000, stream(11))
        assert abs(y.var() - 4.0 / 3.0) / (4.0 / 3.0) < 0.05

    def test_degenerate_filter_iid(self):
        model = ArFactorModel(ArPolynomial(), np.zeros((3, 1)), np.eye(3))
        y = simulate(model, 100_000, stream(12))
        cov = y.T @ y / y.shape[0]
        np.testing.assert_allclose(cov, np.eye(3), atol=0.02)

    def test_deterministic(self):
        model = random_model(4, 2, 2, stream(13))
        y1 = simulate(model, 100, stream(14))
        y2 = simulate(model, 100, stream(14))
        np.testing.assert_array_equal(y1, y2)

    def test_autocovariance_matches_yule_walker_oracle(self):
        coeffs = ArPolynomial.from_reflection([0.6, -0.4, 0.3]).coeffs
        n = 100_000
        y = simulate(scalar_model(coeffs), n, stream(15)).ravel()
        gamma = ar_autocovariance(coeffs, 3)
        for lag in range(4):
            emp = np.dot(y[lag:], y[: n - lag]) / n
            assert abs(emp - gamma[lag]) / abs(gamma[lag]) < 0.05

    def test_sample_count_positive(self):
        with pytest.raises(DomainError):
            simulate(scalar_model([-0.5]), 0, stream(0))

    def test_unstable_model_rejected_at_construction(self):
        with pytest.raises(DomainError):
            ArFactorModel(ArPolynomial([-1.5]), np.zeros((1, 1)), np.eye(1))

    def test_default_burn_in(self):
        assert default_burn_in(5) == 150


class TestArFactorModel:
    def test_generated_models_valid(self):
        for seed in range(20):
            model = random_model(8, 3, 4, stream(seed))
            assert model.a.is_stable()
            assert np.linalg.eigvalsh(model.L + model.D)[0] > 0

    def test_dimensions(self):
        model = random_model(6, 2, 3, stream(1))
        assert (model.m, model.r) == (6, 2)
        assert model.L.shape == (6, 6)
        assert model.D.shape == (6, 6)

    def test_nondiagonal_wd_rejected(self):
        with pytest.raises(Exception):
            ArFactorModel(ArPolynomial([-0.5]), np.zeros((2, 1)), np.array([[1.0, 0.5], [0.5, 1.0]]))
