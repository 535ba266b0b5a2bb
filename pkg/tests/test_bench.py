import csv
import json

import numpy as np
import pytest

import arfa.bench as bench
from arfa.arpoly import ArPolynomial
from arfa.bench import StudyConfig, TrialResult, metrics, run_study, summarize
from arfa.errors import DomainError, InvalidInputError
from arfa.pipeline import Fit, FixedRankFit, RankResult
from arfa.rng import stream
from arfa.staticfa import FactorDecomposition
from arfa.synth import random_model


def tiny_config(tmp_path, **overrides):
    base = dict(m=6, r_true=2, p=1, n=400, n_trials=3, n_mc=300,
                seed=77, output_dir=str(tmp_path / "out"), make_plots=False)
    base.update(overrides)
    return StudyConfig(**base)


def fake_fit(truth, a, L, D, r):
    fr = FixedRankFit(a=a, decomposition=FactorDecomposition(L, D, r),
                      sigma_hat=np.eye(truth.m), iterations=3, final_e=0.0, converged=True)
    return Fit(selected_rank=r, per_rank=(RankResult(r, fr, 0.0),),
               delta=1.0, alpha=0.99, selection_exhausted=False)


class TestMetrics:
    def test_exact_recovery_gives_zero_errors(self):
        truth = random_model(5, 2, 2, stream(0))
        result = fake_fit(truth, truth.a, truth.L, truth.D, 2)
        t = metrics(truth, result)
        assert t.e_a == t.e_L == t.e_D == 0.0
        assert t.r_est == 2

    def test_zero_model_gives_unit_errors(self):
        truth = random_model(5, 2, 2, stream(1))
        zero = fake_fit(truth, ArPolynomial(np.zeros(2)), np.zeros((5, 5)), np.zeros((5, 5)), 2)
        t = metrics(truth, zero)
        np.testing.assert_allclose([t.e_a, t.e_L, t.e_D], [1.0, 1.0, 1.0])


class TestStudyConfig:
    def test_unknown_keys_rejected(self):
        with pytest.raises(InvalidInputError):
            StudyConfig.from_dict({"m": 6, "r_true": 2, "p": 1, "n": 100, "n_trials": 1, "bogus": 3})

    def test_missing_keys_rejected(self):
        with pytest.raises(InvalidInputError):
            StudyConfig.from_dict({"m": 6})

    def test_invariants(self):
        with pytest.raises(InvalidInputError):
            StudyConfig(m=6, r_true=6, p=1, n=100, n_trials=1)
        with pytest.raises(InvalidInputError):
            StudyConfig(m=6, r_true=2, p=200, n=100, n_trials=1)

    def test_roundtrip_via_json(self, tmp_path):
        cfg = tiny_config(tmp_path)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"m": 6, "r_true": 2, "p": 1, "n": 400, "n_trials": 3}))
        loaded = StudyConfig.from_json(path)
        assert loaded.m == cfg.m
        assert loaded.alpha == 0.99  # benchmark defaults filled in


class TestRunStudy:
    def test_structure_and_files(self, tmp_path):
        cfg = tiny_config(tmp_path, make_plots=True)
        report = run_study(cfg)
        assert sum(report.rank_histogram.values()) == cfg.n_trials
        assert len(report.trials) == cfg.n_trials
        out = tmp_path / "out"
        assert (out / "report.json").exists()
        assert (out / "trials.csv").exists()
        assert (out / "errors_boxplot.png").exists()
        assert (out / "rank_histogram.png").exists()
        loaded = json.loads((out / "report.json").read_text())
        assert loaded["config"]["m"] == 6
        assert loaded["config"]["alpha"] == 0.99
        assert loaded["n_trials"] == 3

    def test_byte_identical_reports_for_same_seed(self, tmp_path):
        cfg = tiny_config(tmp_path)
        run_study(cfg)
        first = (tmp_path / "out" / "report.json").read_bytes()
        run_study(cfg)
        second = (tmp_path / "out" / "report.json").read_bytes()
        assert first == second

    def test_worker_count_does_not_change_results(self, tmp_path):
        r1 = run_study(tiny_config(tmp_path, output_dir=str(tmp_path / "a"), workers=1))
        r2 = run_study(tiny_config(tmp_path, output_dir=str(tmp_path / "b"), workers=2))
        assert [t.r_est for t in r1.trials] == [t.r_est for t in r2.trials]
        assert [t.e_a for t in r1.trials] == [t.e_a for t in r2.trials]

    def test_csv_summary_consistency(self, tmp_path):
        cfg = tiny_config(tmp_path, n_trials=5)
        report = run_study(cfg)
        rows = list(csv.DictReader(open(tmp_path / "out" / "trials.csv")))
        assert len(rows) == 5
        for name in ("e_a", "e_L", "e_D"):
            vals = [float(row[name]) for row in rows if not row["error"]]
            q1, med, q3 = np.quantile(vals, [0.25, 0.5, 0.75])
            assert report.summary[name]["median"] == med
            assert report.summary[name]["q1"] == q1
            assert report.summary[name]["q3"] == q3

    def test_failed_trials_recorded_not_raised(self, tmp_path, monkeypatch):
        def explode(*args, **kwargs):
            raise DomainError("synthetic failure")

        monkeypatch.setattr(bench, "fit", explode)
        report = run_study(tiny_config(tmp_path))
        assert report.n_failed == 3
        assert report.rank_histogram == {"failed": 3}
        assert report.efficiency == 0.0
        assert report.summary["e_a"] is None
        rows = list(csv.DictReader(open(tmp_path / "out" / "trials.csv")))
        assert all("DomainError" in row["error"] for row in rows)

    def test_efficiency_counts_exact_recoveries(self):
        trials = [
            TrialResult(0, 0.1, 0.1, 0.1, 2, 3, 1.0, True),
            TrialResult(1, 0.1, 0.1, 0.1, 3, 3, 1.0, True),
            TrialResult(2, float("nan"), float("nan"), float("nan"), -1, 0, 1.0, False, "DomainError: x"),
        ]
        summary, hist = summarize(trials)
        assert hist == {"2": 1, "3": 1, "failed": 1}
        assert bench._efficiency(trials, 2) == pytest.approx(1.0 / 3.0)
        assert summary["e_a"]["median"] == pytest.approx(0.1)
