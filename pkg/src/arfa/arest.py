"""AR coefficient estimation from whitened multichannel trajectories.

All channels of the whitened process share one scalar AR description, so
the lagged moments are pooled across channels and time. The default
estimator solves the Yule-Walker system built from biased autocovariance
estimates, whose Toeplitz structure makes the result automatically stable;
the exact conditional ML estimator (no stability guarantee) is kept as a
diagnostic, and a max-entropy certificate checks the Yule-Walker output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .arpoly import ArPolynomial, as_trajectory
from .errors import DegenerateDataError, DomainError, InsufficientDataError, InvalidInputError

# Linear systems with condition numbers beyond this are refused.
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class AutocovarianceSequence:
    """Pooled biased autocovariances ``[tau_0, ..., tau_p]`` and their provenance."""

    taus: np.ndarray
    m: int
    n: int
    p: int

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float).copy()
        if taus.shape != (self.p + 1,):
            raise InvalidInputError(f"expected {self.p + 1} lags, got shape {taus.shape}")
        taus.setflags(write=False)
        object.__setattr__(self, "taus", taus)

    def toeplitz(self) -> np.ndarray:
        """The (p+1) x (p+1) symmetric Toeplitz matrix with first column ``taus``."""
        return sla.toeplitz(self.taus)


@dataclass(frozen=True)
class ArFitDiagnostics:
    a_me: ArPolynomial
    sigma2_certificate: float
    certificate_holds: bool
    stable_me: bool
    a_ml: ArPolynomial | None = None


def biased_autocovariances(ybar, p: int) -> AutocovarianceSequence:
    """Lag 0..p autocovariances pooled over channels, normalized by m*N.

    ``tau_l = (1 / (m N)) sum_k sum_{t=l+1..N} ybar_k(t) ybar_k(t-l)``.
    The biased normalization (full N, not the number of summands) is what
    makes the implied Toeplitz matrix positive semidefinite.
    """
    y = as_trajectory(ybar)
    n, m = y.shape
    if p < 1:
        raise DomainError(f"order must be >= 1, got {p}")
    if n <= p:
        raise InsufficientDataError(f"need N > p, got N={n}, p={p}")
    taus = np.empty(p + 1)
    for lag in range(p + 1):
        taus[lag] = np.sum(y[lag:] * y[: n - lag]) / (m * n)
    return AutocovarianceSequence(taus, m=m, n=n, p=p)


def yule_walker(acov: AutocovarianceSequence) -> ArPolynomial:
    """Solve the Yule-Walker system for the AR coefficients.

    With ``T_b`` the biased Toeplitz estimate partitioned as
    ``[[tau_0, z'], [z, T_22]]``, returns ``a = -T_22^-1 z``. Stability of
    the result is guaranteed by the Toeplitz structure whenever ``T_b`` is
    positive definite.
    """
    p = acov.p
    T22 = sla.toeplitz(acov.taus[:p])
    z = acov.taus[1:]
    if not np.all(np.isfinite(T22)) or np.linalg.cond(T22) >= MAX_CONDITION:
        raise DegenerateDataError("Yule-Walker system is singular or ill-conditioned")
    return ArPolynomial(-sla.solve(T22, z, assume_a="sym"))


def _lag_windows(y: np.ndarray, p: int) -> np.ndarray:
    """Stacked vectors ``[y_k(t), y_k(t-1), ..., y_k(t-p)]`` for t = p+1..N.

    Shape (N-p, m, p+1); the window axis is time-reversed so index 0 is the
    current sample.
    """
    w = np.lib.stride_tricks.sliding_window_view(y, p + 1, axis=0)
    return w[:, :, ::-1]


def ml_estimate(ybar, p: int) -> ArPolynomial:
    """Exact conditional maximum-likelihood AR estimate.

    Pools the lagged outer products over channels and the last N-p times,
    partitions the resulting (p+1) x (p+1) moment matrix and solves
    ``a = -T_22^-1 z``. Unlike :func:`yule_walker` the moment matrix is not
    Toeplitz, so the estimate is not guaranteed stable.
    """
    y = as_trajectory(ybar)
    n, m = y.shape
    if p < 1:
        raise DomainError(f"order must be >= 1, got {p}")
    if n <= p:
        raise InsufficientDataError(f"need N > p, got N={n}, p={p}")
    W = _lag_windows(y, p)
    T = np.einsum("tki,tkj->ij", W, W) / (m * (n - p))
    T22 = T[1:, 1:]
    z = T[1:, 0]
    if np.linalg.cond(T22) >= MAX_CONDITION:
        raise DegenerateDataError("ML moment matrix is singular or ill-conditioned")
    return ArPolynomial(-sla.solve(T22, z, assume_a="sym"))


def max_entropy_certificate(a: ArPolynomial, acov: AutocovarianceSequence,
                            tol: float) -> tuple[bool, float]:
    """Check that ``a`` solves the rescaled Yule-Walker system exactly.

    Forms ``T_check = (v' T_b^-1 v) T_b`` with ``v = e_1`` and evaluates
    ``T_check @ [1; a]``; for the true Yule-Walker solution the result is
    ``[sigma^2; 0]`` with ``sigma^2 = 1`` (the leading scale cancels
    against the Schur complement of the trailing block). Returns the
    boolean verdict at tolerance ``tol`` and the recovered ``sigma^2``.
    """
    if a.order != acov.p:
        raise InvalidInputError(f"polynomial order {a.order} != autocovariance order {acov.p}")
    Tb = acov.toeplitz()
    if np.linalg.cond(Tb) >= MAX_CONDITION:
        raise DegenerateDataError("Toeplitz matrix is singular or ill-conditioned")
    leading_inv = sla.solve(Tb, np.eye(acov.p + 1, 1), assume_a="sym")[0, 0]
    residual = leading_inv * (Tb @ a.taps)
    sigma2 = float(residual[0])
    holds = bool(np.max(np.abs(residual[1:]), initial=0.0) <= tol and abs(sigma2 - 1.0) <= tol)
    return holds, sigma2


def fit_ar(ybar, p: int, include_ml: bool = False, tol: float = 1e-8) -> ArFitDiagnostics:
    """Estimate the AR polynomial and bundle the diagnostics."""
    acov = biased_autocovariances(ybar, p)
    a_me = yule_walker(acov)
    holds, sigma2 = max_entropy_certificate(a_me, acov, tol)
    a_ml = ml_estimate(ybar, p) if include_ml else None
    return ArFitDiagnostics(
        a_me=a_me,
        sigma2_certificate=sigma2,
        certificate_holds=holds,
        stable_me=a_me.is_stable(),
        a_ml=a_ml,
    )
