"""Identification of auto-regressive factor models from multichannel time series."""

from .arpoly import ArPolynomial, as_trajectory
from .arest import (
    ArFitDiagnostics,
    AutocovarianceSequence,
    biased_autocovariances,
    fit_ar,
    max_entropy_certificate,
    ml_estimate,
    yule_walker,
)
from .bench import StudyConfig, StudyReport, TrialResult, metrics, run_study
from .errors import (
    ArfaError,
    DecompositionError,
    DegenerateDataError,
    DomainError,
    InsufficientDataError,
    InvalidInputError,
)
from .pipeline import (
    Fit,
    FitOptions,
    FixedRankFit,
    KlCalibration,
    calibrate_delta,
    cholesky_factor,
    convergence_error,
    disentangle,
    fit,
    fit_fixed_rank,
    kl_gaussian,
    sample_covariance,
)
from .rng import stream
from .staticfa import (
    FactorDecomposition,
    StaticFaReport,
    project_diag_nonneg,
    project_low_rank,
    static_fa,
)
from .synth import (
    ArFactorModel,
    random_decomposition,
    random_model,
    random_stable_poly,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "ArPolynomial",
    "ArFactorModel",
    "ArFitDiagnostics",
    "AutocovarianceSequence",
    "FactorDecomposition",
    "StaticFaReport",
    "Fit",
    "FitOptions",
    "FixedRankFit",
    "KlCalibration",
    "StudyConfig",
    "StudyReport",
    "TrialResult",
    "ArfaError",
    "DecompositionError",
    "DegenerateDataError",
    "DomainError",
    "InsufficientDataError",
    "InvalidInputError",
    "as_trajectory",
    "biased_autocovariances",
    "calibrate_delta",
    "cholesky_factor",
    "convergence_error",
    "disentangle",
    "fit",
    "fit_ar",
    "fit_fixed_rank",
    "kl_gaussian",
    "max_entropy_certificate",
    "metrics",
    "ml_estimate",
    "project_diag_nonneg",
    "project_low_rank",
    "random_decomposition",
    "random_model",
    "random_stable_poly",
    "run_study",
    "sample_covariance",
    "simulate",
    "static_fa",
    "stream",
    "yule_walker",
]
