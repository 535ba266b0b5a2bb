"""Monte Carlo experiment harness.

Generates random ground-truth models, runs the full estimator on simulated
trajectories, and aggregates the relative errors on the polynomial and on
the covariance parts together with a histogram of the selected ranks.
Reports are written as one JSON document (config echo, summary, histogram)
plus a per-trial CSV; all randomness is derived from the study seed so a
repeated run reproduces the JSON byte for byte. Wall-clock timings are
inherently non-reproducible and therefore live only in the CSV.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ArfaError, InvalidInputError
from .pipeline import Fit, FitOptions, KlCalibration, calibrate_delta, fit
from .rng import CALIBRATION_KEY, TRIAL_KEY, stream
from .synth import ArFactorModel, random_model, simulate

REPORT_NAME = "report.json"
TRIALS_NAME = "trials.csv"

_CSV_COLUMNS = ("trial", "r_est", "e_a", "e_L", "e_D",
                "iterations", "converged", "wall_time_ms", "error")


@dataclass(frozen=True)
class StudyConfig:
    """One Monte Carlo study; defaults mirror the reference experiments."""

    m: int
    r_true: int
    p: int
    n: int
    n_trials: int
    alpha: float = 0.99
    eps: float = 0.03
    eps_s: float = 1e-6
    l_max: int = 200
    i_max: int = 200
    n_mc: int = 2000
    seed: int = 0
    output_dir: str = "arfa-study"
    r_max: int | None = None
    burn_in: int | None = None
    pole_method: str = "boundary"
    dl_ratio: float = 0.22
    factor_spectrum: str = "flat"
    workers: int = 1
    make_plots: bool = True

    def __post_init__(self):
        for name in ("m", "r_true", "p", "n", "n_trials", "l_max", "i_max", "n_mc"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"config field {name} must be positive")
        if not self.r_true < self.m:
            raise InvalidInputError(f"need r_true < m, got r_true={self.r_true}, m={self.m}")
        if not self.n > self.p:
            raise InvalidInputError(f"need n > p, got n={self.n}, p={self.p}")
        if not (self.alpha > 0 and self.eps > 0 and self.eps_s > 0 and self.dl_ratio > 0):
            raise InvalidInputError("alpha, eps, eps_s and dl_ratio must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "StudyConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        missing = {"m", "r_true", "p", "n", "n_trials"} - set(data)
        if missing:
            raise InvalidInputError(f"missing config keys: {sorted(missing)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "StudyConfig":
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise InvalidInputError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def fit_options(self, calibration: KlCalibration | None = None) -> FitOptions:
        return FitOptions(
            alpha=self.alpha, eps=self.eps, eps_s=self.eps_s,
            l_max=self.l_max, i_max=self.i_max, n_mc=self.n_mc,
            r_max=self.r_max, seed=self.seed, calibration=calibration,
        )


@dataclass(frozen=True)
class TrialResult:
    """Per-trial metrics; failed trials carry the error kind and NaN metrics."""

    trial: int
    e_a: float
    e_L: float
    e_D: float
    r_est: int
    iterations: int
    wall_time_ms: float
    converged: bool
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


@dataclass(frozen=True)
class StudyReport:
    config: StudyConfig
    delta_alpha: float
    trials: tuple[TrialResult, ...]
    summary: dict
    rank_histogram: dict[str, int]
    efficiency: float

    @property
    def n_failed(self) -> int:
        return sum(1 for t in self.trials if not t.ok)

    def to_json_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "delta_alpha": self.delta_alpha,
            "n_trials": self.config.n_trials,
            "n_failed": self.n_failed,
            "efficiency": self.efficiency,
            "rank_histogram": self.rank_histogram,
            "summary": self.summary,
        }


def metrics(truth: ArFactorModel, result: Fit, wall_time_ms: float = 0.0,
            trial: int = 0) -> TrialResult:
    """Relative errors of the selected model against the ground truth."""
    selected = result.selected
    a_true = truth.a.coeffs
    e_a = np.linalg.norm(a_true - selected.a.coeffs) / np.linalg.norm(a_true)
    e_L = np.linalg.norm(truth.L - selected.decomposition.L) / np.linalg.norm(truth.L)
    e_D = np.linalg.norm(truth.D - selected.decomposition.D) / np.linalg.norm(truth.D)
    return TrialResult(
        trial=trial,
        e_a=float(e_a), e_L=float(e_L), e_D=float(e_D),
        r_est=result.selected_rank,
        iterations=selected.iterations,
        wall_time_ms=wall_time_ms,
        converged=selected.converged,
    )


def run_trial(config: StudyConfig, calibration: KlCalibration, trial: int) -> TrialResult:
    """Run one seeded trial: generate, simulate, fit, score."""
    rng = stream(config.seed, TRIAL_KEY, trial)
    start = time.perf_counter()
    try:
        truth = random_model(config.m, config.r_true, config.p, rng,
                             method=config.pole_method, ratio=config.dl_ratio,
                             spectrum=config.factor_spectrum)
        y = simulate(truth, config.n, rng, burn_in=config.burn_in)
        result = fit(y, config.p, config.fit_options(calibration), rng=rng)
    except ArfaError as exc:
        elapsed_ms = (time.perf_counter() - start) * 1e3
        return TrialResult(
            trial=trial, e_a=float("nan"), e_L=float("nan"), e_D=float("nan"),
            r_est=-1, iterations=0, wall_time_ms=elapsed_ms, converged=False,
            error=f"{type(exc).__name__}: {exc}",
        )
    elapsed_ms = (time.perf_counter() - start) * 1e3
    return metrics(truth, result, wall_time_ms=elapsed_ms, trial=trial)


def _quartiles(values: list[float]) -> dict | None:
    if not values:
        return None
    q1, med, q3 = np.quantile(values, [0.25, 0.5, 0.75])
    return {"q1": float(q1), "median": float(med), "q3": float(q3)}


def summarize(trials) -> tuple[dict, dict[str, int]]:
    """Summary block and rank histogram from trial results."""
    ok = [t for t in trials if t.ok]
    summary = {
        "e_a": _quartiles([t.e_a for t in ok]),
        "e_L": _quartiles([t.e_L for t in ok]),
        "e_D": _quartiles([t.e_D for t in ok]),
        "iterations": _quartiles([float(t.iterations) for t in ok]),
    }
    histogram: dict[str, int] = {}
    for t in trials:
        key = str(t.r_est) if t.ok else "failed"
        histogram[key] = histogram.get(key, 0) + 1
    ordered = dict(sorted(
        histogram.items(),
        key=lambda kv: (kv[0] == "failed", int(kv[0]) if kv[0] != "failed" else 0),
    ))
    return summary, ordered


def _efficiency(trials, r_true: int) -> float:
    if not trials:
        return 0.0
    hits = sum(1 for t in trials if t.ok and t.r_est == r_true)
    return hits / len(trials)


def run_study(config: StudyConfig, progress=None) -> StudyReport:
    """Run the full study, write reports (and figures) to the output dir.

    Every trial owns the derived stream ``(seed, 1, trial)``; the KL
    calibration is computed once on stream ``(seed, 0)`` and shared. With
    ``config.workers > 1`` trials run in a process pool; results are
    assembled in trial order either way, so the report does not depend on
    the worker count.
    """
    calibration = calibrate_delta(config.m, config.n, config.alpha, config.n_mc,
                                  stream(config.seed, *CALIBRATION_KEY))
    indices = range(config.n_trials)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(run_trial, config, calibration, i) for i in indices]
            trials = []
            for fut in futures:
                trials.append(fut.result())
                if progress:
                    progress(trials[-1])
    else:
        trials = []
        for i in indices:
            trials.append(run_trial(config, calibration, i))
            if progress:
                progress(trials[-1])

    summary, histogram = summarize(trials)
    report = StudyReport(
        config=config,
        delta_alpha=calibration.delta_alpha,
        trials=tuple(trials),
        summary=summary,
        rank_histogram=histogram,
        efficiency=_efficiency(trials, config.r_true),
    )
    write_report_files(report)
    return report


def write_report_files(report: StudyReport) -> list[Path]:
    """Write report.json, trials.csv and (optionally) the figures."""
    out = Path(report.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / REPORT_NAME
    with open(json_path, "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2)
        fh.write("\n")
    csv_path = out / TRIALS_NAME
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for t in report.trials:
            if t.ok:
                writer.writerow([t.trial, t.r_est, repr(t.e_a), repr(t.e_L), repr(t.e_D),
                                 t.iterations, t.converged, repr(t.wall_time_ms), ""])
            else:
                writer.writerow([t.trial, "", "", "", "", "", "", repr(t.wall_time_ms), t.error])
    written = [json_path, csv_path]
    if report.config.make_plots:
        from . import plots

        written.extend(plots.render_study_figures(report, out))
    return written
