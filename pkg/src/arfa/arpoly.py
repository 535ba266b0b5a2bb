"""Monic AR polynomials and moving-average filtering of trajectories.

The polynomial ``a(z) = 1 + a_1 z^-1 + ... + a_p z^-p`` is stored through
its ``p`` free coefficients; the leading 1 is implicit. Multichannel
trajectories are plain ``(N, m)`` float arrays: row ``t`` is the sample at
time ``t+1`` in 1-based notation, column ``k`` is channel ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import DomainError, InvalidInputError

# Roots must lie strictly inside the unit circle with this margin.
STABILITY_MARGIN = 1e-10


def as_trajectory(y) -> np.ndarray:
    """Validate and return ``y`` as an (N, m) float array.

    A 1-D input is treated as a single channel. Raises
    :class:`InvalidInputError` on empty or non-finite data.
    """
    arr = np.asarray(y, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"trajectory must be (N, m) with N, m >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("trajectory contains non-finite entries")
    return arr


@dataclass(frozen=True)
class ArPolynomial:
    """Coefficients ``[a_1, ..., a_p]`` of a monic AR polynomial."""

    coeffs: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float)).copy()
        if c.ndim != 1:
            raise InvalidInputError("coeffs must be one-dimensional")
        if not np.all(np.isfinite(c)):
            raise InvalidInputError("coeffs contain non-finite entries")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0]

    @property
    def taps(self) -> np.ndarray:
        """Full tap vector ``[1, a_1, ..., a_p]``."""
        return np.concatenate(([1.0], self.coeffs))

    @classmethod
    def from_reflection(cls, k) -> "ArPolynomial":
        """Build a stable polynomial from reflection coefficients.

        Runs the Levinson-Durbin step-up recursion; each ``|k_i| < 1`` is
        required and guarantees a stable result.
        """
        k = np.atleast_1d(np.asarray(k, dtype=float))
        if k.size and np.max(np.abs(k)) >= 1.0:
            raise DomainError("reflection coefficients must satisfy |k_i| < 1")
        a = np.empty(0)
        for ki in k:
            a = np.concatenate((a + ki * a[::-1], [ki]))
        return cls(a)

    def roots(self) -> np.ndarray:
        """Zeros of ``z^p + a_1 z^(p-1) + ... + a_p`` (companion eigenvalues)."""
        if self.order == 0:
            return np.empty(0, dtype=complex)
        return np.roots(self.taps)

    def is_stable(self) -> bool:
        """True iff all roots lie strictly inside the unit circle."""
        if self.order == 0:
            return True
        return bool(np.max(np.abs(self.roots())) < 1.0 - STABILITY_MARGIN)

    def filter(self, y) -> np.ndarray:
        """Apply the moving-average filter ``u(t) = y(t) + sum_k a_k y(t-k)``.

        Zero initial conditions: samples before the start of the trajectory
        are taken as 0, so the output keeps all N rows including the
        transient first ``p``.
        """
        y = as_trajectory(y)
        if self.order == 0:
            return y.copy()
        return signal.lfilter(self.taps, [1.0], y, axis=0)

    def spectrum(self, thetas) -> np.ndarray:
        """AR spectral density ``1 / |a(e^{j theta})|^2`` at the given angles."""
        if not self.is_stable():
            raise DomainError("spectrum requires a stable polynomial")
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        # a(e^{j theta}) = sum_k a_k e^{-j k theta}, a_0 = 1
        ks = np.arange(self.order + 1)
        response = np.exp(-1j * np.outer(thetas, ks)) @ self.taps
        return 1.0 / np.abs(response) ** 2
