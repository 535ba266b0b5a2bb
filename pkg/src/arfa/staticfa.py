"""Static factor analysis by alternating projections.

Decomposes a covariance as low-rank-plus-diagonal by alternating the
Frobenius-nearest projections onto the rank-constrained PSD cone and onto
the nonnegative diagonal matrices. Each half step is an exact projection,
so the residual is non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidInputError

# Asymmetry beyond this relative tolerance is an error, below it we symmetrize.
SYMMETRY_RTOL = 1e-8
# Relative objective decrease below this for STALL_PATIENCE consecutive
# iterations exits early (infeasible targets would otherwise spin to i_max).
STALL_RTOL = 1e-14
STALL_PATIENCE = 10


def _symmetrized(M, what: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"{what} must be a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{what} contains non-finite entries")
    scale = np.linalg.norm(M)
    if np.linalg.norm(M - M.T) > SYMMETRY_RTOL * max(scale, 1e-300):
        raise InvalidInputError(f"{what} is not symmetric")
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class FactorDecomposition:
    """Low-rank PSD part ``L``, nonnegative diagonal part ``D``, target rank ``r``."""

    L: np.ndarray
    D: np.ndarray
    r: int

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float).copy()
        D = np.asarray(self.D, dtype=float).copy()
        if L.shape != D.shape or L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise InvalidInputError("L and D must be square matrices of equal size")
        if np.any(D != np.diag(np.diag(D))) or np.any(np.diag(D) < 0):
            raise InvalidInputError("D must be diagonal with nonnegative entries")
        L.setflags(write=False)
        D.setflags(write=False)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "D", D)

    @property
    def sum(self) -> np.ndarray:
        return self.L + self.D


@dataclass(frozen=True)
class StaticFaReport:
    decomposition: FactorDecomposition
    iterations: int
    relative_residual: float
    converged: bool
    #: squared Frobenius residual after each full (L, D) sweep
    objective_history: np.ndarray


def project_low_rank(M, r: int) -> np.ndarray:
    """Frobenius-nearest PSD matrix of rank at most ``r``.

    Keeps the ``r`` largest eigenvalues clamped at zero and drops the rest.
    """
    M = _symmetrized(M, "matrix")
    m = M.shape[0]
    if not 1 <= r <= m:
        raise DomainError(f"need 1 <= r <= m, got r={r}, m={m}")
    w, V = np.linalg.eigh(M)
    w_top = np.maximum(w[m - r:], 0.0)
    V_top = V[:, m - r:]
    L = (V_top * w_top) @ V_top.T
    return 0.5 * (L + L.T)


def project_diag_nonneg(M) -> np.ndarray:
    """Frobenius-nearest nonnegative diagonal matrix (clamp the diagonal)."""
    M = _symmetrized(M, "matrix")
    return np.diag(np.maximum(np.diag(M), 0.0))


def static_fa(sigma, r: int, eps_s: float = 1e-6, i_max: int = 200,
              rng: np.random.Generator | None = None) -> StaticFaReport:
    """Decompose PD ``sigma`` into low-rank ``L`` plus diagonal ``D``.

    Starting from a random diagonal ``D`` (entries uniform on (0, 1) scaled
    by the mean diagonal of ``sigma``), alternates
    ``L <- project_low_rank(sigma - D, r)`` and
    ``D <- project_diag_nonneg(sigma - L)`` until the relative squared
    residual ``||sigma - L - D||_F^2 / ||sigma||_F^2`` drops to ``eps_s``
    or ``i_max`` sweeps run out. ``converged`` reports which exit fired.
    """
    sigma = _symmetrized(sigma, "sigma")
    m = sigma.shape[0]
    if not 1 <= r < m:
        raise DomainError(f"need 1 <= r < m, got r={r}, m={m}")
    if eps_s <= 0:
        raise DomainError(f"eps_s must be positive, got {eps_s}")
    if i_max < 1:
        raise DomainError(f"i_max must be >= 1, got {i_max}")
    if np.linalg.eigvalsh(sigma)[0] <= 0:
        raise InvalidInputError("sigma must be positive definite")
    if rng is None:
        rng = np.random.default_rng()

    sigma_norm2 = np.linalg.norm(sigma) ** 2
    D = np.diag(rng.uniform(0.0, 1.0, size=m) * np.mean(np.diag(sigma)))
    L = np.zeros_like(sigma)

    history: list[float] = []
    converged = False
    stalled = 0
    iterations = 0
    for _ in range(i_max):
        L = project_low_rank(sigma - D, r)
        D = project_diag_nonneg(sigma - L)
        iterations += 1
        obj = np.linalg.norm(sigma - L - D) ** 2
        if history:
            rel_drop = (history[-1] - obj) / max(history[-1], 1e-300)
            stalled = stalled + 1 if rel_drop < STALL_RTOL else 0
        history.append(obj)
        if obj / sigma_norm2 <= eps_s:
            converged = True
            break
        if stalled >= STALL_PATIENCE:
            break

    objective_history = np.asarray(history)
    objective_history.setflags(write=False)
    return StaticFaReport(
        decomposition=FactorDecomposition(L, D, r),
        iterations=iterations,
        relative_residual=history[-1] / sigma_norm2,
        converged=converged,
        objective_history=objective_history,
    )
