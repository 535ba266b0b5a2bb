import numpy as np
import pytest

from arfa.errors import DomainError, InvalidInputError
from arfa.rng import stream
from arfa.staticfa import FactorDecomposition, project_diag_nonneg, project_low_rank, static_fa
from arfa.synth import random_decomposition

from helpers import random_spd


class TestProjectLowRank:
    def test_truncates_spectrum(self):
        np.testing.assert_allclose(project_low_rank(np.diag([2.0, 1.0]), 1), np.diag([2.0, 0.0]))

    def test_negative_eigenvalues_clamped(self):
        np.testing.assert_allclose(project_low_rank(np.diag([-1.0, -2.0]), 1), np.zeros((2, 2)))

    def test_fixed_point_on_feasible_input(self):
        rng = stream(0)
        G = rng.standard_normal((5, 2))
        M = G @ G.T
        np.testing.assert_allclose(project_low_rank(M, 2), M, atol=1e-10)

    def test_idempotent(self):
        M = random_spd(6, stream(1)) - 3.0 * np.eye(6)
        P = project_low_rank(M, 2)
        np.testing.assert_allclose(project_low_rank(P, 2), P, atol=1e-10)

    def test_asymmetric_rejected(self):
        M = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(InvalidInputError):
            project_low_rank(M, 1)

    def test_rank_bounds(self):
        with pytest.raises(DomainError):
            project_low_rank(np.eye(3), 0)
        with pytest.raises(DomainError):
            project_low_rank(np.eye(3), 4)

    def test_optimality_against_random_candidates(self):
        # Frobenius distance of the projection must not exceed any feasible
        # G G^T candidate; brute-force oracle over 10^6 random G.
        rng = stream(2)
        M = random_spd(4, rng) - 4.5 * np.eye(4)
        best = np.linalg.norm(M - project_low_rank(M, 2))
        worst_gap = np.inf
        for _ in range(10):
            G = rng.standard_normal((100_000, 4, 2))
            cand = np.einsum("nik,njk->nij", G, G)
            dists = np.linalg.norm(cand - M, axis=(1, 2))
            worst_gap = min(worst_gap, dists.min())
        assert worst_gap >= best - 1e-9


class TestProjectDiagNonneg:
    def test_clamps_diagonal(self):
        M = np.array([[1.0, 5.0], [5.0, -2.0]])
        np.testing.assert_allclose(project_diag_nonneg(M), np.diag([1.0, 0.0]))

    def test_fixed_point(self):
        np.testing.assert_allclose(project_diag_nonneg(np.diag([3.0, 4.0])), np.diag([3.0, 4.0]))

    def test_zero(self):
        np.testing.assert_allclose(project_diag_nonneg(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_idempotent(self):
        M = random_spd(5, stream(3)) - 4.0 * np.eye(5)
        P = project_diag_nonneg(M)
        np.testing.assert_allclose(project_diag_nonneg(P), P)


class TestStaticFa:
    def test_two_by_two_exact(self):
        sigma = np.array([[2.0, 1.0], [1.0, 2.0]])
        # the known zero-residual fixed point
        L_star = np.ones((2, 2))
        D_star = np.eye(2)
        np.testing.assert_allclose(L_star + D_star, sigma)
        assert np.linalg.matrix_rank(L_star) == 1
        np.testing.assert_allclose(project_low_rank(sigma - D_star, 1), L_star, atol=1e-12)
        np.testing.assert_allclose(project_diag_nonneg(sigma - L_star), D_star, atol=1e-12)
        report = static_fa(sigma, 1, rng=stream(4))
        assert report.relative_residual <= 1e-6
        assert report.converged

    def test_diagonal_sigma(self):
        report = static_fa(np.diag([3.0, 1.0, 2.0]), 1, rng=stream(5))
        assert report.relative_residual <= 1e-6

    def test_recovers_generated_decomposition(self):
        W_L, W_D = random_decomposition(10, 2, stream(6))
        sigma = W_L @ W_L.T + W_D @ W_D.T
        report = static_fa(sigma, 2, rng=stream(7))
        assert report.relative_residual <= 1e-6
        assert report.converged

    def test_objective_monotone(self):
        rng = stream(8)
        for r in (1, 3):
            sigma = random_spd(8, rng)
            report = static_fa(sigma, r, eps_s=1e-12, rng=rng)
            hist = report.objective_history
            assert np.all(np.diff(hist) <= 1e-12 * hist[0])

    def test_infeasible_target_exits_unconverged(self):
        sigma = random_spd(6, stream(9))
        report = static_fa(sigma, 1, eps_s=1e-30, i_max=500, rng=stream(10))
        assert not report.converged
        assert report.iterations <= 500

    def test_iteration_cap(self):
        sigma = random_spd(6, stream(11))
        report = static_fa(sigma, 1, eps_s=1e-30, i_max=3, rng=stream(12))
        assert report.iterations == 3
        assert not report.converged

    def test_not_pd_rejected(self):
        with pytest.raises(InvalidInputError):
            static_fa(np.diag([1.0, 0.0]), 1, rng=stream(13))

    def test_output_feasibility(self):
        rng = stream(14)
        for _ in range(10):
            sigma = random_spd(7, rng)
            dec = static_fa(sigma, 3, rng=rng).decomposition
            w = np.linalg.eigvalsh(dec.L)
            scale = np.linalg.norm(dec.L)
            assert w[0] >= -1e-10
            assert np.all(w[: 7 - 3] <= 1e-10 * max(scale, 1.0))
            np.testing.assert_allclose(dec.L, dec.L.T)
            assert np.all(np.diag(dec.D) >= 0)
            np.testing.assert_array_equal(dec.D, np.diag(np.diag(dec.D)))

    def test_decomposition_validates(self):
        with pytest.raises(InvalidInputError):
            FactorDecomposition(np.eye(2), np.array([[1.0, 0.2], [0.2, 1.0]]), 1)
        with pytest.raises(InvalidInputError):
            FactorDecomposition(np.eye(2), -np.eye(2), 1)
