"""Exception hierarchy shared across the package.

Every failure raised by arfa derives from :class:`ArfaError`, so callers
(the Monte Carlo harness in particular) can catch one base class and
record the concrete kind.
"""


class ArfaError(Exception):
    """Base class for all arfa errors."""


class InvalidInputError(ArfaError, ValueError):
    """Malformed input: non-finite entries, wrong shape, asymmetric matrix."""


class DomainError(ArfaError, ValueError):
    """Input outside the mathematical domain of the operation."""


class InsufficientDataError(ArfaError, ValueError):
    """Too few samples for the requested order."""


class DegenerateDataError(ArfaError, ValueError):
    """Data produced a singular or numerically unusable system."""


class DecompositionError(ArfaError):
    """A matrix factorization (e.g. Cholesky) failed."""
