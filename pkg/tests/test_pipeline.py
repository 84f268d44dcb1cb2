"""
Tests for fitting, saved models, cross-validation and synthetic experiments
"""

import dataclasses
import logging

import numpy as np
import pandas as pd
import pytest

from src.core import pipeline
from src.core.encoding import load_csv, stratified_kfold
from src.core.pipeline import (
    ExperimentReport,
    FittedModel,
    ReportEntry,
    cross_validate,
    experiment_digest,
    fit_dataset,
    fit_model,
    load_model,
    run_experiment,
    save_model,
    table_from_matrix,
)
from src.core.synth import FEATURE_NAMES, gen_xor_clusters
from src.models.config import RunConfig, SearchConfig, SynthConfig
from src.models.dataset import CsvSchema, RawTable
from src.models.equation import Equation
from src.models.results_store import ExperimentRun, ResultStore
from src.utils.constants import Protocol, RunStatus, SummandKind
from src.utils.errors import GenerationError


SCHEMA = CsvSchema(target_column="class", positive_label="yes")


@pytest.fixture
def separable(separable_csv):
    return load_csv(separable_csv, SCHEMA)


@pytest.fixture
def small_synth():
    return SynthConfig(n_points=150, seed=40)


class TestFit:
    def test_learns_separable_data(self, separable, fast_config):
        table, y = separable
        model = fit_model(table, y, fast_config)
        assert model.metadata.train_auc >= 0.98
        assert model.feature_names == ["a", "b"]
        assert model.metadata.candidates_evaluated > 1
        assert np.mean(model.predict(table) == y) == pytest.approx(model.metadata.train_accuracy)

    def test_saved_model_scores_identically(self, separable, fast_config, tmp_path, rng):
        table, y = separable
        model = fit_model(table, y, fast_config)
        path = tmp_path / "model.json"
        save_model(model, str(path))
        restored = load_model(str(path))

        rows = table_from_matrix(rng.uniform(-1.0, 2.0, size=(1000, 2)), ["a", "b"])
        assert np.array_equal(model.predict_proba(rows), restored.predict_proba(rows))
        assert np.array_equal(model.predict(rows), restored.predict(rows))

    def test_same_seed_same_bytes(self, separable, fast_config, tmp_path):
        table, y = separable
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        fit_model(table, y, fast_config).save(str(first))
        fit_model(table, y, fast_config).save(str(second))
        assert first.read_bytes() == second.read_bytes()

    def test_constant_zero_model_is_undecided(self, separable, fast_config):
        table, y = separable
        model = fit_model(table, y, fast_config)
        blank = FittedModel.from_model_file(dataclasses.replace(model.model, equation=Equation(0.0)))
        assert np.all(blank.predict_proba(table) == 0.5)

    def test_zero_rows(self, separable, fast_config):
        table, y = separable
        model = fit_model(table, y, fast_config)
        empty = RawTable(pd.DataFrame({"a": [], "b": []}, dtype=str), ("a", "b"))
        assert model.predict_proba(empty).size == 0

    def test_describe_uses_raw_scale(self, fast_config):
        rng = np.random.default_rng(2)
        X = rng.uniform(100.0, 200.0, size=(80, 2))
        y = (X[:, 0] > 150.0).astype(float)
        model = fit_dataset(X, y, ("height", "weight"), fast_config)
        text = model.describe()
        assert "height" in text
        assert "((height - " in text


class TestReport:
    def test_summary_line(self):
        report = ExperimentReport("cv", [ReportEntry("fold 1", 0.9), ReportEntry("fold 2", 1.0)])
        assert "0.950 (±0.071)" in report.to_text()

    def test_failures_counted(self):
        entries = [ReportEntry("dataset 0", 0.8, 0.7), ReportEntry("dataset 1", error="generation-failed: x")]
        text = ExperimentReport("within", entries).to_text()
        assert "failed: 1 of 2" in text
        assert "failed: generation-failed: x" in text

    def test_csv_columns(self):
        report = ExperimentReport("cv", [ReportEntry("fold 1", 0.9, equation="a")])
        assert report.to_csv().splitlines()[0] == "unit,edc_auc,runtime_s,equation,error"


class TestCrossValidate:
    def test_two_folds(self, separable, fast_config):
        table, y = separable
        report = cross_validate(table, y, k=2, config=fast_config)
        assert [e.label for e in report.entries] == ["fold 1", "fold 2"]
        assert all(0.0 <= a <= 1.0 for a in report.edc_aucs)

    def test_test_rows_never_reach_training(self, separable, fast_config):
        table, y = separable
        test_rows = stratified_kfold(y, 2, fast_config.search.seed).test_indices(0)
        tampered = table.frame.copy()
        tampered.loc[test_rows[0], "a"] = "1000000"

        clean = cross_validate(table, y, k=2, config=fast_config)
        dirty = cross_validate(RawTable(tampered, table.numeric_columns), y, k=2, config=fast_config)
        assert dirty.entries[0].equation == clean.entries[0].equation


    def test_fold_accuracy_is_logged(self, separable, fast_config, caplog):
        caplog.set_level(logging.INFO, logger="src.core.pipeline")
        table, y = separable
        cross_validate(table, y, k=2, config=fast_config)
        assert sum("test accuracy" in r.getMessage() for r in caplog.records) == 2


class TestXor:
    def test_product_term_separates_xor_clusters(self):
        dataset = gen_xor_clusters(SynthConfig(n_points=300, seed=5))
        config = RunConfig(search=SearchConfig(beam_width=10, max_depth=3, restarts_per_candidate=1, seed=5))
        model = fit_dataset(dataset.X, dataset.y, FEATURE_NAMES, config)
        assert model.metadata.train_auc >= 0.95
        assert any(s.kind == SummandKind.PRODUCT for s in model.equation.summands)


class TestExperiment:
    def test_runs_and_compares(self, small_synth, fast_config, tmp_path):
        grids = tmp_path / "grids"
        report = run_experiment(Protocol.WITHIN_NOISE, 2, small_synth, fast_config,
                                grid_dir=grids, grid_resolution=5)
        assert len(report.entries) == 2
        assert report.has_original
        assert (grids / f"{Protocol.WITHIN_NOISE}_000_grid.csv").is_file()
        header = (grids / f"{Protocol.WITHIN_NOISE}_001_grid.csv").read_text().splitlines()[0]
        assert header == "x1,x2,f,f_original"

    def test_cluster_protocol_has_no_original(self, small_synth, fast_config):
        report = run_experiment(Protocol.GAUSSIAN, 1, small_synth, fast_config)
        assert not report.has_original
        assert report.t_test is None

    def test_resume_from_store(self, small_synth, fast_config, tmp_path, monkeypatch):
        store = ResultStore(tmp_path / "runs.db")
        first = run_experiment(Protocol.WITHIN, 2, small_synth, fast_config, store=store)

        def refit(*args, **kwargs):
            raise AssertionError("completed dataset was refit")

        monkeypatch.setattr(pipeline, "run_dataset", refit)
        second = run_experiment(Protocol.WITHIN, 2, small_synth, fast_config, store=store)
        assert second.edc_aucs == first.edc_aucs

    def test_failure_is_recorded_and_run_continues(self, small_synth, fast_config, tmp_path, monkeypatch):
        def fake_run(protocol, index, synth_cfg, config, *args):
            if index == 1:
                raise GenerationError("no usable equation")
            return ExperimentRun(protocol, synth_cfg.seed, experiment_digest(config, synth_cfg), index,
                                 synth_cfg.seed + index, edc_auc=0.9, original_auc=0.8)

        monkeypatch.setattr(pipeline, "run_dataset", fake_run)
        store = ResultStore(tmp_path / "runs.db")
        report = run_experiment(Protocol.WITHIN, 3, small_synth, fast_config, store=store)
        assert [e.failed for e in report.entries] == [False, True, False]
        assert report.entries[1].error == "generation-failed: no usable equation"
        digest = experiment_digest(fast_config, small_synth)
        runs = store.runs_for(Protocol.WITHIN, small_synth.seed, digest)
        assert [r.status for r in runs] == [RunStatus.COMPLETED, RunStatus.FAILED, RunStatus.COMPLETED]
        assert store.completed_indices(Protocol.WITHIN, small_synth.seed, digest) == {0, 2}

    def test_unexpected_error_is_recorded_as_internal(self, small_synth, fast_config, tmp_path, monkeypatch):
        def fake_run(protocol, index, synth_cfg, config, *args):
            if index == 0:
                raise ValueError("boom")
            return ExperimentRun(protocol, synth_cfg.seed, experiment_digest(config, synth_cfg), index,
                                 synth_cfg.seed + index, edc_auc=0.9)

        monkeypatch.setattr(pipeline, "run_dataset", fake_run)
        store = ResultStore(tmp_path / "runs.db")
        report = run_experiment(Protocol.GAUSSIAN, 2, small_synth, fast_config, store=store)
        assert [e.failed for e in report.entries] == [True, False]
        assert report.entries[0].error == "internal: ValueError: boom"
        (failed, _) = store.runs_for(Protocol.GAUSSIAN, small_synth.seed, experiment_digest(fast_config, small_synth))
        assert failed.status == RunStatus.FAILED

    def test_generation_settings_are_part_of_the_store_key(self, small_synth, fast_config, tmp_path, monkeypatch):
        fitted = []

        def fake_run(protocol, index, synth_cfg, config, *args):
            fitted.append((synth_cfg.noise_sigma, index))
            return ExperimentRun(protocol, synth_cfg.seed, experiment_digest(config, synth_cfg), index,
                                 synth_cfg.seed + index, edc_auc=0.5 + synth_cfg.noise_sigma / 10)

        monkeypatch.setattr(pipeline, "run_dataset", fake_run)
        store = ResultStore(tmp_path / "runs.db")
        noisier = dataclasses.replace(small_synth, noise_sigma=small_synth.noise_sigma + 1.0)

        quiet = run_experiment(Protocol.WITHIN_NOISE, 2, small_synth, fast_config, store=store)
        loud = run_experiment(Protocol.WITHIN_NOISE, 2, noisier, fast_config, store=store)
        assert fitted == [(small_synth.noise_sigma, 0), (small_synth.noise_sigma, 1),
                          (noisier.noise_sigma, 0), (noisier.noise_sigma, 1)]
        assert loud.edc_aucs != quiet.edc_aucs

        again = run_experiment(Protocol.WITHIN_NOISE, 2, small_synth, fast_config, store=store)
        assert len(fitted) == 4
        assert again.edc_aucs == quiet.edc_aucs

    def test_digest_ignores_only_the_seed(self, small_synth, fast_config):
        base = experiment_digest(fast_config, small_synth)
        assert experiment_digest(fast_config, small_synth.with_seed(99)) == base
        assert experiment_digest(fast_config, dataclasses.replace(small_synth, n_points=151)) != base
        assert experiment_digest(fast_config, dataclasses.replace(small_synth, constant_range=4.0)) != base


@pytest.mark.slow
class TestDefaultConfigExperiments:
    @pytest.mark.parametrize("protocol,count,floor", [
        (Protocol.WITHIN, 20, 0.99),
        (Protocol.WITHIN_NOISE, 30, 0.92),
        (Protocol.BEYOND_NOISE, 30, 0.93),
        (Protocol.GAUSSIAN, 20, 0.92),
    ])
    def test_mean_auc(self, protocol, count, floor):
        report = run_experiment(protocol, count, SynthConfig(n_points=2000, seed=0), RunConfig())
        assert not report.failures
        assert np.mean(report.edc_aucs) >= floor

    def test_noisy_boundary_beats_generating_one(self):
        report = run_experiment(Protocol.WITHIN_NOISE, 30, SynthConfig(n_points=2000, seed=0), RunConfig())
        assert np.mean(report.edc_aucs) >= np.mean(report.original_aucs)
        assert report.p_one_sided < 0.05
