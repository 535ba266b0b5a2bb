"""The full AR factor analysis loop and KL-based rank selection.

For a fixed number of factors the estimation alternates: filter the data
with the current polynomial, decompose the resulting sample covariance
into low-rank plus diagonal, whiten the raw data with the Cholesky factor
of that sum, and re-estimate the polynomial from the whitened trajectory.
The number of factors is then chosen as the smallest rank whose fitted
covariance is within sampling distance of the sample covariance, measured
by a Gaussian Kullback-Leibler divergence against a Monte Carlo calibrated
threshold (the divergence between a covariance and its N-sample estimate
has a distribution depending only on the dimension and N).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg as sla

from .arest import biased_autocovariances, yule_walker
from .arpoly import ArPolynomial, as_trajectory
from .errors import (
    ArfaError,
    DecompositionError,
    DomainError,
    InsufficientDataError,
    InvalidInputError,
)
from .rng import CALIBRATION_KEY, stream
from .staticfa import FactorDecomposition, static_fa

# Quantile probes stored with each calibration, for reporting.
SUMMARY_QUANTILES = (0.25, 0.5, 0.75, 0.9, 0.95, 0.99)


def sample_covariance(u) -> np.ndarray:
    """Zero-mean sample covariance ``(1/N) sum_t u(t) u(t)'``."""
    u = as_trajectory(u)
    return u.T @ u / u.shape[0]


def cholesky_factor(sigma) -> np.ndarray:
    """Lower-triangular Cholesky factor of a positive definite matrix."""
    sigma = np.asarray(sigma, dtype=float)
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"matrix is not positive definite: {exc}") from exc


def disentangle(L_sigma, y) -> np.ndarray:
    """Whiten each sample through the triangular solve ``L_sigma^-1 y(t)``."""
    L_sigma = np.asarray(L_sigma, dtype=float)
    y = as_trajectory(y)
    if np.min(np.abs(np.diag(L_sigma))) == 0.0:
        raise DecompositionError("whitening factor is singular")
    return sla.solve_triangular(L_sigma, y.T, lower=True).T


def convergence_error(L, L_old, D, D_old, a, a_old) -> float:
    """Mean-square parameter change between consecutive iterations.

    ``e = ||L - L_old||_F^2 / m^2 + ||D - D_old||_F^2 / m + ||a - a_old|| / p``
    (the polynomial term is intentionally unsquared).
    """
    L, L_old = np.asarray(L, dtype=float), np.asarray(L_old, dtype=float)
    D, D_old = np.asarray(D, dtype=float), np.asarray(D_old, dtype=float)
    a, a_old = np.atleast_1d(np.asarray(a, dtype=float)), np.atleast_1d(np.asarray(a_old, dtype=float))
    m = L.shape[0]
    p = a.shape[0]
    return (
        np.linalg.norm(L - L_old) ** 2 / m**2
        + np.linalg.norm(D - D_old) ** 2 / m
        + np.linalg.norm(a - a_old) / p
    )


def kl_gaussian(sigma_model, sigma_hat) -> float:
    """KL divergence between zero-mean Gaussians with the given covariances.

    ``0.5 (-log|A| + log|B| + tr(A B^-1) - m)`` with ``A = sigma_model``
    and ``B = sigma_hat``; nonnegative, zero iff the matrices coincide.
    """
    A = np.asarray(sigma_model, dtype=float)
    B = np.asarray(sigma_hat, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"covariances must be square with equal shape, got {A.shape} and {B.shape}")
    m = A.shape[0]
    try:
        chol_A = np.linalg.cholesky(A)
        chol_B = np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise DomainError(f"KL divergence requires positive definite covariances: {exc}") from exc
    logdet_A = 2.0 * np.sum(np.log(np.diag(chol_A)))
    logdet_B = 2.0 * np.sum(np.log(np.diag(chol_B)))
    trace_term = np.trace(sla.cho_solve((chol_B, True), A))
    return 0.5 * (-logdet_A + logdet_B + trace_term - m)


@dataclass(frozen=True)
class KlCalibration:
    """Monte Carlo quantile of the covariance-estimation KL divergence."""

    m: int
    n: int
    alpha: float
    n_mc: int
    delta_alpha: float
    empirical_quantiles: tuple[tuple[float, float], ...]


def calibrate_delta(m: int, n: int, alpha: float, n_mc: int,
                    rng: np.random.Generator) -> KlCalibration:
    """Calibrate the selection threshold ``delta_alpha`` for (m, N).

    Draws ``n_mc`` sample covariances ``Q`` of N i.i.d. standard normal
    m-vectors, computes ``d = 0.5 (log|Q| + tr(Q^-1) - m)`` for each (the
    scale-invariant form of the divergence between a true covariance and
    its sample estimate) and returns the empirical ``alpha``-quantile.
    """
    if n < m:
        raise DomainError(f"need N >= m for an invertible sample covariance, got N={n}, m={m}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if n_mc < 100:
        raise DomainError(f"need at least 100 Monte Carlo draws, got {n_mc}")
    ds = np.empty(n_mc)
    eye = np.eye(m)
    for i in range(n_mc):
        x = rng.standard_normal((n, m))
        Q = x.T @ x / n
        chol = np.linalg.cholesky(Q)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        trace_inv = np.trace(sla.cho_solve((chol, True), eye))
        ds[i] = 0.5 * (logdet + trace_inv - m)
    quantiles = tuple((q, float(np.quantile(ds, q))) for q in SUMMARY_QUANTILES)
    return KlCalibration(
        m=m, n=n, alpha=alpha, n_mc=n_mc,
        delta_alpha=float(np.quantile(ds, alpha)),
        empirical_quantiles=quantiles,
    )


@functools.lru_cache(maxsize=32)
def cached_calibration(m: int, n: int, alpha: float, n_mc: int, seed: int) -> KlCalibration:
    """Calibration memoized on (m, N, alpha, n_mc, seed).

    The distribution depends only on (m, N), so one calibration serves the
    whole rank loop and every Monte Carlo trial of a study; the dedicated
    stream ``(seed, 0)`` keeps it independent of the fitting draws.
    """
    return calibrate_delta(m, n, alpha, n_mc, stream(seed, *CALIBRATION_KEY))


@dataclass(frozen=True)
class FixedRankFit:
    """Outputs of the fixed-rank alternating loop."""

    a: ArPolynomial
    decomposition: FactorDecomposition
    sigma_hat: np.ndarray
    iterations: int
    final_e: float
    converged: bool
    #: iterations where the factor sum needed a diagonal jitter before Cholesky
    jitter_count: int = 0


class RankResult(NamedTuple):
    r: int
    fit: FixedRankFit
    kl: float


@dataclass(frozen=True)
class Fit:
    """Rank-selected model with per-rank diagnostics."""

    selected_rank: int
    per_rank: tuple[RankResult, ...]
    delta: float
    alpha: float
    selection_exhausted: bool

    @property
    def selected(self) -> FixedRankFit:
        for entry in self.per_rank:
            if entry.r == self.selected_rank:
                return entry.fit
        raise KeyError(self.selected_rank)


@dataclass(frozen=True)
class FitOptions:
    """Tuning knobs of the estimation loop; defaults mirror the benchmark setup."""

    alpha: float = 0.99
    eps: float = 0.03
    eps_s: float = 1e-6
    l_max: int = 200
    i_max: int = 200
    n_mc: int = 2000
    r_max: int | None = None
    seed: int = 0
    #: Order of the covariances inside the selection divergence. The default
    #: (False) puts the sample covariance first, which penalizes a model
    #: missing a factor linearly rather than logarithmically and is what the
    #: benchmark efficiencies require; True puts the fitted model first.
    kl_model_first: bool = False
    calibration: KlCalibration | None = None


def default_r_max(m: int) -> int:
    """Cap for the rank search; the model is only meaningful for r << m."""
    return min(m - 1, m // 2 + 10)


def _safe_cholesky(L: np.ndarray, D: np.ndarray) -> tuple[np.ndarray, bool]:
    """Cholesky of L + D with a diagonal jitter when near-singular."""
    S = L + D
    m = S.shape[0]
    floor = 1e-10 * np.trace(S) / m
    jittered = False
    if np.linalg.eigvalsh(S)[0] < floor:
        S = S + floor * np.eye(m)
        jittered = True
    return cholesky_factor(S), jittered


def fit_fixed_rank(y, p: int, r: int, eps: float = 0.03, l_max: int = 200,
                   eps_s: float = 1e-6, i_max: int = 200,
                   rng: np.random.Generator | None = None) -> FixedRankFit:
    """Estimate (a, L, D) for a fixed number of factors ``r``.

    One iteration: filter y with the current polynomial, take the sample
    covariance of the residual, split it into low-rank plus diagonal,
    whiten y with the Cholesky factor of the sum, re-estimate the
    polynomial from the whitened data. Stops when the parameter change
    drops to ``eps`` or after ``l_max`` iterations.

    The polynomial starts at zero (first pass is a pure static factor
    analysis of the raw sample covariance); the previous-iterate baseline
    is L = 0, D = I.
    """
    y = as_trajectory(y)
    n, m = y.shape
    if n <= p:
        raise InsufficientDataError(f"need N > p, got N={n}, p={p}")
    if not 1 <= r < m:
        raise DomainError(f"need 1 <= r < m, got r={r}, m={m}")
    if rng is None:
        rng = np.random.default_rng()

    a = ArPolynomial(np.zeros(p))
    L = np.zeros((m, m))
    D = np.eye(m)

    sigma_hat = None
    decomposition = None
    jitter_count = 0
    converged = False
    e = np.inf
    iterations = 0
    for iteration in range(1, l_max + 1):
        a_old, L_old, D_old = a, L, D
        u = a.filter(y)
        sigma_hat = sample_covariance(u)
        try:
            report = static_fa(sigma_hat, r, eps_s=eps_s, i_max=i_max, rng=rng)
            decomposition = report.decomposition
            L, D = decomposition.L, decomposition.D
            L_sigma, jittered = _safe_cholesky(L, D)
        except ArfaError as exc:
            raise type(exc)(f"fixed-rank iteration {iteration}: {exc}") from exc
        jitter_count += jittered
        ybar = disentangle(L_sigma, y)
        a = yule_walker(biased_autocovariances(ybar, p))
        e = convergence_error(L, L_old, D, D_old, a.coeffs, a_old.coeffs)
        iterations = iteration
        if e <= eps:
            converged = True
            break

    return FixedRankFit(
        a=a,
        decomposition=decomposition,
        sigma_hat=sigma_hat,
        iterations=iterations,
        final_e=float(e),
        converged=converged,
        jitter_count=jitter_count,
    )


def fit(y, p: int, opts: FitOptions | None = None,
        rng: np.random.Generator | None = None) -> Fit:
    """Estimate the model and the number of factors.

    Runs :func:`fit_fixed_rank` for r = 1, 2, ... and selects the first
    rank whose fitted covariance is within the calibrated KL threshold of
    the sample covariance. If no rank passes before ``r_max``, the rank
    with minimal divergence is returned with ``selection_exhausted=True``.
    """
    y = as_trajectory(y)
    n, m = y.shape
    if m < 2:
        raise DomainError(f"rank selection needs m >= 2 channels, got m={m}")
    if n <= p:
        raise InsufficientDataError(f"need N > p, got N={n}, p={p}")
    if opts is None:
        opts = FitOptions()
    if rng is None:
        rng = stream(opts.seed)

    calibration = opts.calibration
    if calibration is None:
        calibration = cached_calibration(m, n, opts.alpha, opts.n_mc, opts.seed)
    delta = calibration.delta_alpha
    r_max = opts.r_max if opts.r_max is not None else default_r_max(m)

    per_rank: list[RankResult] = []
    selected = None
    for r in range(1, r_max + 1):
        try:
            fr = fit_fixed_rank(y, p, r, eps=opts.eps, l_max=opts.l_max,
                                eps_s=opts.eps_s, i_max=opts.i_max, rng=rng)
            sigma_model = fr.decomposition.sum
            if opts.kl_model_first:
                kl = kl_gaussian(sigma_model, fr.sigma_hat)
            else:
                kl = kl_gaussian(fr.sigma_hat, sigma_model)
        except ArfaError as exc:
            raise type(exc)(f"rank {r}: {exc}") from exc
        per_rank.append(RankResult(r, fr, float(kl)))
        if kl <= delta:
            selected = r
            break

    exhausted = selected is None
    if exhausted:
        selected = min(per_rank, key=lambda entry: entry.kl).r
    return Fit(
        selected_rank=selected,
        per_rank=tuple(per_rank),
        delta=delta,
        alpha=opts.alpha,
        selection_exhausted=exhausted,
    )
