"""Ground-truth AR factor models and trajectory simulation.

A model is the stable polynomial ``a`` together with loading matrices
``W_L`` (m x r factor loadings) and ``W_D`` (m x m diagonal idiosyncratic
loadings); the driving noise covariance decomposes as
``Sigma = L + D = W_L W_L' + W_D W_D'``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .arpoly import ArPolynomial
from .errors import DomainError, InvalidInputError


def default_burn_in(p: int) -> int:
    """Warm-up length used to wash out the zero initial state."""
    return 10 * p + 100


@dataclass(frozen=True)
class ArFactorModel:
    """Generative AR factor model: ``y(t) = a(z)^-1 [W_L v(t) + W_D w(t)]``."""

    a: ArPolynomial
    W_L: np.ndarray
    W_D: np.ndarray

    def __post_init__(self):
        W_L = np.atleast_2d(np.asarray(self.W_L, dtype=float)).copy()
        W_D = np.atleast_2d(np.asarray(self.W_D, dtype=float)).copy()
        m = W_L.shape[0]
        if W_D.shape != (m, m):
            raise InvalidInputError(f"W_D must be {m}x{m}, got {W_D.shape}")
        if np.any(W_D != np.diag(np.diag(W_D))):
            raise InvalidInputError("W_D must be diagonal")
        if np.any(np.diag(W_D) < 0):
            raise InvalidInputError("W_D entries must be nonnegative")
        if not self.a.is_stable():
            raise DomainError("model polynomial must be stable")
        for name, mat in (("W_L", W_L), ("W_D", W_D)):
            mat.setflags(write=False)
            object.__setattr__(self, name, mat)
        if np.linalg.eigvalsh(self.L + self.D)[0] <= 0:
            raise DomainError("L + D must be positive definite")

    @property
    def m(self) -> int:
        return self.W_L.shape[0]

    @property
    def r(self) -> int:
        return self.W_L.shape[1]

    @property
    def L(self) -> np.ndarray:
        return self.W_L @ self.W_L.T

    @property
    def D(self) -> np.ndarray:
        return self.W_D @ self.W_D.T


def random_stable_poly(p: int, rng: np.random.Generator, method: str = "reflection") -> ArPolynomial:
    """Draw a random stable AR polynomial of order ``p``.

    ``method="reflection"`` draws reflection coefficients i.i.d. uniform on
    (-0.9, 0.9) and steps them up, which is stable for any ``p``.
    ``method="poles"`` instead places conjugate pole pairs with moduli
    uniform on (0.3, 0.9) and uniform phases (plus one real pole when
    ``p`` is odd). ``method="boundary"`` draws moderate reflections for
    lags below ``p`` and puts the last one near the stability boundary;
    this shape keeps the Yule-Walker system well conditioned while the
    large trailing coefficient makes the relative estimation error small,
    which is what the benchmark studies assume.
    """
    if p < 1:
        raise DomainError(f"order must be >= 1, got {p}")
    if method == "reflection":
        return ArPolynomial.from_reflection(rng.uniform(-0.9, 0.9, size=p))
    if method == "boundary":
        k = rng.uniform(-0.3, 0.3, size=p)
        k[-1] = rng.choice([-1.0, 1.0]) * rng.uniform(0.88, 0.96)
        return ArPolynomial.from_reflection(k)
    if method == "poles":
        n_pairs, odd = divmod(p, 2)
        moduli = rng.uniform(0.3, 0.9, size=n_pairs)
        phases = rng.uniform(0.0, np.pi, size=n_pairs)
        poles = moduli * np.exp(1j * phases)
        roots = np.concatenate([poles, poles.conj()])
        if odd:
            real = rng.uniform(0.3, 0.9) * rng.choice([-1.0, 1.0])
            roots = np.concatenate([roots, [real]])
        return ArPolynomial(np.poly(roots)[1:].real)
    raise DomainError(f"unknown pole sampling method: {method!r}")


def random_decomposition(m: int, r: int, rng: np.random.Generator, ratio: float = 1.0,
                         spectrum: str = "flat") -> tuple[np.ndarray, np.ndarray]:
    """Draw loading matrices ``(W_L, W_D)`` with ``||D||_F == ratio * ||L||_F``.

    ``spectrum="flat"`` takes ``W_L`` as a random orthonormal frame scaled
    by ``sqrt(m)``, so all factors have equal strength; ``"gaussian"``
    uses i.i.d. standard normal entries instead (Wishart spectrum, whose
    smallest factor can drown in the idiosyncratic noise). ``W_D`` is
    diagonal with entries uniform on (0.5, 1.5), then rescaled by the
    exact scalar matching the requested Frobenius ratio.
    """
    if not 1 <= r < m:
        raise DomainError(f"need 1 <= r < m, got r={r}, m={m}")
    if ratio <= 0:
        raise DomainError(f"ratio must be positive, got {ratio}")
    G = rng.standard_normal((m, r))
    if spectrum == "flat":
        Q, _ = np.linalg.qr(G)
        W_L = Q * np.sqrt(m)
    elif spectrum == "gaussian":
        W_L = G
    else:
        raise DomainError(f"unknown factor spectrum: {spectrum!r}")
    d = rng.uniform(0.5, 1.5, size=m)
    L = W_L @ W_L.T
    # D = diag(d)^2; scale so ||c*D||_F = ratio * ||L||_F exactly.
    c = ratio * np.linalg.norm(L) / np.linalg.norm(d**2)
    return W_L, np.diag(d * np.sqrt(c))


def random_model(m: int, r: int, p: int, rng: np.random.Generator,
                 method: str = "reflection", ratio: float = 1.0,
                 spectrum: str = "flat") -> ArFactorModel:
    """Draw a complete ground-truth model (polynomial plus loadings)."""
    a = random_stable_poly(p, rng, method=method)
    W_L, W_D = random_decomposition(m, r, rng, ratio=ratio, spectrum=spectrum)
    return ArFactorModel(a, W_L, W_D)


def simulate(model: ArFactorModel, n: int, rng: np.random.Generator,
             burn_in: int | None = None) -> np.ndarray:
    """Simulate ``n`` samples of the model as an (n, m) trajectory.

    Draws independent standard Gaussian factor and idiosyncratic noises,
    forms ``u(t) = W_L v(t) + W_D w(t)`` and runs the AR recursion
    ``y(t) = -sum_k a_k y(t-k) + u(t)`` from zero state for
    ``burn_in + n`` steps, returning the last ``n``.
    """
    if n < 1:
        raise DomainError(f"sample count must be >= 1, got {n}")
    if not model.a.is_stable():
        raise DomainError("cannot simulate an unstable model")
    if burn_in is None:
        burn_in = default_burn_in(model.a.order)
    total = burn_in + n
    v = rng.standard_normal((total, model.r))
    w = rng.standard_normal((total, model.m))
    u = v @ model.W_L.T + w @ model.W_D.T
    y = signal.lfilter([1.0], model.a.taps, u, axis=0)
    return y[burn_in:]
