"""Command line interface.

Subcommands: ``generate`` (simulate a trajectory from a random model),
``fit`` (rank selection or fixed-rank estimation on a CSV trajectory),
``static-fa`` (one low-rank plus diagonal decomposition), ``calibrate``
(print the KL selection threshold) and ``study`` (Monte Carlo harness).
Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import io
from .bench import StudyConfig, run_study
from .errors import ArfaError
from .pipeline import FitOptions, calibrate_delta, fit, fit_fixed_rank, sample_covariance
from .rng import CALIBRATION_KEY, stream
from .staticfa import static_fa
from .synth import random_model, simulate


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="arfa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="simulate a trajectory from a random model")
    gen.add_argument("--config", required=True, help="JSON with m, r_true, p, n (seed, burn_in optional)")
    gen.add_argument("--out", required=True, help="output trajectory CSV")
    gen.add_argument("--model-out", help="also write the ground-truth model as JSON")
    gen.add_argument("--seed", type=int, help="override the config seed")

    fit_p = sub.add_parser("fit", help="estimate an AR factor model from a CSV trajectory")
    fit_p.add_argument("--data", required=True, help="trajectory CSV")
    fit_p.add_argument("--p", required=True, type=int, help="AR order")
    fit_p.add_argument("--r", type=int, help="fixed-rank mode: skip rank selection")
    fit_p.add_argument("--alpha", type=float, default=0.99)
    fit_p.add_argument("--seed", type=int, default=0)
    fit_p.add_argument("--out", help="write the report JSON here instead of stdout")

    sfa = sub.add_parser("static-fa", help="low-rank plus diagonal decomposition")
    sfa.add_argument("--data", required=True, help="trajectory CSV (or covariance CSV with --cov)")
    sfa.add_argument("--r", required=True, type=int)
    sfa.add_argument("--cov", action="store_true", help="treat --data as a covariance matrix")
    sfa.add_argument("--seed", type=int, default=0)
    sfa.add_argument("--out", help="write the report JSON here instead of stdout")

    cal = sub.add_parser("calibrate", help="print the KL selection threshold delta_alpha")
    cal.add_argument("--m", required=True, type=int)
    cal.add_argument("--n", required=True, type=int)
    cal.add_argument("--alpha", type=float, default=0.99)
    cal.add_argument("--n-mc", type=int, default=2000)
    cal.add_argument("--seed", type=int, default=0)

    study = sub.add_parser("study", help="run a Monte Carlo study from a config JSON")
    study.add_argument("--config", required=True)
    study.add_argument("--out", help="override output_dir")
    study.add_argument("--seed", type=int, help="override the config seed")
    study.add_argument("--workers", type=int, help="trial parallelism (fallback: ARFA_WORKERS)")
    study.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    study.add_argument("--quiet", action="store_true", help="no per-trial progress lines")

    return parser


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    return data


def _emit(report: dict, out_path: str | None) -> None:
    text = json.dumps(report, indent=2)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_generate(args) -> int:
    cfg = _load_json(args.config)
    required = {"m", "r_true", "p", "n"}
    missing = required - set(cfg)
    if missing:
        raise UsageError(f"generate config missing keys: {sorted(missing)}")
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    rng = stream(seed)
    model = random_model(int(cfg["m"]), int(cfg["r_true"]), int(cfg["p"]), rng,
                         method=cfg.get("pole_method", "reflection"))
    burn_in = cfg.get("burn_in")
    y = simulate(model, int(cfg["n"]), rng, burn_in=None if burn_in is None else int(burn_in))
    io.write_trajectory(args.out, y)
    if args.model_out:
        with open(args.model_out, "w") as fh:
            json.dump({
                "a": model.a.coeffs.tolist(),
                "W_L": model.W_L.tolist(),
                "W_D": np.diag(model.W_D).tolist(),
                "seed": seed,
            }, fh, indent=2)
            fh.write("\n")
    print(f"wrote {y.shape[0]}x{y.shape[1]} trajectory to {args.out}", file=sys.stderr)
    return 0


def _cmd_fit(args) -> int:
    y = io.read_trajectory(args.data)
    n, m = y.shape
    rng = stream(args.seed)
    if args.r is not None:
        fr = fit_fixed_rank(y, args.p, args.r, rng=rng)
        report = {
            "mode": "fixed-rank",
            "m": m, "n": n, "p": args.p, "r": args.r, "seed": args.seed,
            "iterations": fr.iterations,
            "converged": fr.converged,
            "final_e": fr.final_e,
            "a": fr.a.coeffs.tolist(),
            "L": fr.decomposition.L.tolist(),
            "D": np.diag(fr.decomposition.D).tolist(),
        }
    else:
        opts = FitOptions(alpha=args.alpha, seed=args.seed)
        result = fit(y, args.p, opts, rng=rng)
        selected = result.selected
        report = {
            "mode": "rank-selection",
            "m": m, "n": n, "p": args.p, "seed": args.seed,
            "alpha": result.alpha,
            "delta_alpha": result.delta,
            "selected_rank": result.selected_rank,
            "selection_exhausted": result.selection_exhausted,
            "per_rank": [
                {"r": entry.r, "kl": entry.kl, "iterations": entry.fit.iterations,
                 "converged": entry.fit.converged, "final_e": entry.fit.final_e}
                for entry in result.per_rank
            ],
            "a": selected.a.coeffs.tolist(),
            "L": selected.decomposition.L.tolist(),
            "D": np.diag(selected.decomposition.D).tolist(),
        }
    _emit(report, args.out)
    return 0


def _cmd_static_fa(args) -> int:
    data = io.read_matrix(args.data) if args.cov else io.read_trajectory(args.data)
    sigma = data if args.cov else sample_covariance(data)
    result = static_fa(sigma, args.r, rng=stream(args.seed))
    report = {
        "m": sigma.shape[0], "r": args.r, "seed": args.seed,
        "iterations": result.iterations,
        "converged": result.converged,
        "relative_residual": result.relative_residual,
        "L": result.decomposition.L.tolist(),
        "D": np.diag(result.decomposition.D).tolist(),
    }
    _emit(report, args.out)
    return 0


def _cmd_calibrate(args) -> int:
    calibration = calibrate_delta(args.m, args.n, args.alpha, args.n_mc,
                                  stream(args.seed, *CALIBRATION_KEY))
    print(repr(calibration.delta_alpha))
    return 0


def _resolve_workers(cli_value: int | None, config_value: int) -> int:
    if cli_value is not None:
        return cli_value
    env = os.environ.get("ARFA_WORKERS")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"ARFA_WORKERS must be an integer, got {env!r}") from exc
    return config_value


def _cmd_study(args) -> int:
    config = StudyConfig.from_json(args.config)
    overrides = {}
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.no_plots:
        overrides["make_plots"] = False
    overrides["workers"] = _resolve_workers(args.workers, config.workers)
    config = dataclasses.replace(config, **overrides)

    progress = None
    if not args.quiet:
        def progress(t):
            status = f"r_est={t.r_est}" if t.ok else f"FAILED ({t.error})"
            print(f"trial {t.trial}: {status}  [{t.wall_time_ms:.0f} ms]", file=sys.stderr)

    report = run_study(config, progress=progress)
    print(f"efficiency={report.efficiency:.3f} "
          f"delta_alpha={report.delta_alpha:.6g} "
          f"failed={report.n_failed}/{config.n_trials} "
          f"-> {config.output_dir}", file=sys.stderr)
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "fit": _cmd_fit,
    "static-fa": _cmd_static_fa,
    "calibrate": _cmd_calibrate,
    "study": _cmd_study,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ArfaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
