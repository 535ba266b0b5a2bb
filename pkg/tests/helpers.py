"""Shared test oracles, independent of the library's computation paths."""

import numpy as np


def ar_autocovariance(coeffs, nlags: int) -> np.ndarray:
    """Theoretical autocovariances gamma_0..gamma_nlags of a stable AR process.

    Solves the linear system sum_k a_k gamma_{|l-k|} = delta_{l0} (unit
    innovation variance, a_0 = 1) directly; brute-force oracle, no
    recursions shared with the package.
    """
    a = np.asarray(coeffs, dtype=float)
    p = a.shape[0]
    taps = np.concatenate(([1.0], a))
    size = max(nlags + 1, p + 1)
    M = np.zeros((size, size))
    for l in range(size):
        for k in range(p + 1):
            M[l, abs(l - k)] += taps[k]
    rhs = np.zeros(size)
    rhs[0] = 1.0
    return np.linalg.solve(M, rhs)[: nlags + 1]


def random_spd(m: int, rng: np.random.Generator) -> np.ndarray:
    """A generic well-conditioned random symmetric positive definite matrix."""
    A = rng.standard_normal((m, m))
    return A @ A.T + m * np.eye(m)
