"""
Fit, predict, cross-validate and run synthetic experiments
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd

from .encoding import TableEncoder, normalize, stratified_kfold
from .expression import DisplayExpression, denormalize, evaluate_batch, to_infix_string
from .file_utils import export_grid, rows_to_csv
from .metrics import TTestResult, accuracy_at, auc, best_threshold, one_sided_p, paired_t_test, sigmoid
from .search import BeamSearch, ProgressCallback
from .synth import FEATURE_NAMES, SyntheticDataset, boundary_grid, generate
from ..models.config import RunConfig, SynthConfig
from ..models.dataset import EncodedDataset, RawTable
from ..models.equation import Equation
from ..models.model_file import ModelFile, TrainingMetadata
from ..models.results_store import ExperimentRun, ResultStore
from ..utils.constants import (
    DEFAULT_FOLDS,
    DEFAULT_GRID_RESOLUTION,
    DEFAULT_PRECISION,
    DEFAULT_RARE_THRESHOLD,
    RunStatus,
)
from ..utils.errors import DegenerateFeatureError, DegenerateTestError, EDCError
from ..utils.helpers import config_digest, format_mean_sd, format_time


logger = logging.getLogger(__name__)


def table_from_matrix(X: np.ndarray, names: Sequence[str]) -> RawTable:
    """Wrap a numeric matrix as an all-numeric raw table"""
    frame = pd.DataFrame(np.asarray(X, dtype=float), columns=list(names))
    return RawTable(frame, tuple(names))


@dataclass(frozen=True, eq=False)
class FittedModel:
    """A model file plus its rebuilt column encoder, ready to score raw tables"""
    model: ModelFile
    encoder: TableEncoder

    @classmethod
    def from_model_file(cls, model: ModelFile) -> "FittedModel":
        return cls(model, TableEncoder.from_dict(model.encoder))

    @property
    def equation(self) -> Equation:
        return self.model.equation

    @property
    def feature_names(self) -> List[str]:
        return list(self.model.feature_names)

    @property
    def threshold(self) -> float:
        return self.model.threshold

    @property
    def metadata(self) -> TrainingMetadata:
        return self.model.metadata

    def encode(self, table: RawTable) -> np.ndarray:
        """Encode and normalize with the training-time parameters"""
        return self.model.norm_params.apply(self.encoder.transform(table))

    def predict_scores(self, table: RawTable) -> np.ndarray:
        """Raw equation values f(x)"""
        X = self.encode(table)
        if X.shape[0] == 0:
            return np.zeros(0)
        values, _ = evaluate_batch(self.model.equation, X)
        return values

    def predict_proba(self, table: RawTable) -> np.ndarray:
        return np.asarray(sigmoid(self.predict_scores(table)), dtype=float).reshape(-1)

    def predict(self, table: RawTable) -> np.ndarray:
        return (self.predict_scores(table) >= self.model.threshold).astype(int)

    def score_matrix(self, X: np.ndarray) -> np.ndarray:
        """f on a raw numeric matrix laid out like the training columns"""
        return self.predict_scores(table_from_matrix(X, self.encoder.source_columns))

    def display_expression(self) -> DisplayExpression:
        params = self.model.norm_params
        return denormalize(self.model.equation, params.mins, params.ranges)

    def describe(self, precision: int = DEFAULT_PRECISION) -> str:
        """Equation over the original feature scales"""
        try:
            return self.display_expression().to_infix_string(self.feature_names, precision)
        except DegenerateFeatureError as e:
            logger.warning(f"Showing normalized equation: {e}")
            return to_infix_string(self.model.equation, self.feature_names, precision)

    def save(self, path: str):
        self.model.save(path)


def save_model(model: FittedModel, path: str):
    model.save(path)


def load_model(path: str) -> FittedModel:
    return FittedModel.from_model_file(ModelFile.load(path))


def _fit_encoded(
    data: EncodedDataset,
    encoder: TableEncoder,
    config: RunConfig,
    progress_callback: Optional[ProgressCallback],
) -> FittedModel:
    grammar = config.grammar.to_grammar(data.n_features, config.search.max_depth)
    search = BeamSearch(grammar, config.search, config.optimizer, progress_callback)
    best = search.run(data)

    values, _ = evaluate_batch(best.equation, data.X)
    threshold, accuracy = best_threshold(values, data.y)
    metadata = TrainingMetadata(
        seed=config.search.seed,
        config_digest=config_digest({**config.digest_dict(), 'rare_threshold': encoder.rare_threshold}),
        train_loss=best.train_loss,
        train_auc=auc(values, data.y),
        train_accuracy=accuracy,
        n_samples=data.n_samples,
        candidates_evaluated=search.candidates_evaluated,
    )
    model = ModelFile(
        equation=best.equation,
        norm_params=data.norm_params,
        threshold=threshold,
        feature_names=data.feature_names,
        encoder=encoder.to_dict(),
        metadata=metadata,
    )
    return FittedModel(model, encoder)


def fit_model(
    table: RawTable,
    y: np.ndarray,
    config: Optional[RunConfig] = None,
    rare_threshold: float = DEFAULT_RARE_THRESHOLD,
    progress_callback: Optional[ProgressCallback] = None,
) -> FittedModel:
    """Encode, normalize and search; the threshold is chosen on the training values"""
    config = config or RunConfig()
    encoder = TableEncoder.fit(table, rare_threshold=rare_threshold)
    data = normalize(encoder.transform(table), y, encoder.feature_names, origins=encoder.origins)
    return _fit_encoded(data, encoder, config, progress_callback)


def fit_dataset(
    X: np.ndarray,
    y: np.ndarray,
    feature_names: Sequence[str] = FEATURE_NAMES,
    config: Optional[RunConfig] = None,
    progress_callback: Optional[ProgressCallback] = None,
) -> FittedModel:
    """fit_model for an all-numeric matrix"""
    return fit_model(table_from_matrix(X, feature_names), y, config, progress_callback=progress_callback)


@dataclass(frozen=True)
class ReportEntry:
    """One fold or one dataset; edc_auc is None when the unit failed"""
    label: str
    edc_auc: Optional[float] = None
    original_auc: Optional[float] = None
    equation: str = ""
    runtime: float = 0.0
    error: str = ""

    @property
    def failed(self) -> bool:
        return self.edc_auc is None


@dataclass
class ExperimentReport:
    title: str
    entries: List[ReportEntry] = field(default_factory=list)
    runtime: float = 0.0
    t_test: Optional[TTestResult] = None
    p_one_sided: Optional[float] = None

    @property
    def edc_aucs(self) -> List[float]:
        return [e.edc_auc for e in self.entries if not e.failed]

    @property
    def original_aucs(self) -> List[float]:
        return [e.original_auc for e in self.entries if not e.failed and e.original_auc is not None]

    @property
    def failures(self) -> List[ReportEntry]:
        return [e for e in self.entries if e.failed]

    @property
    def has_original(self) -> bool:
        return bool(self.original_aucs)

    def _columns(self) -> List[str]:
        columns = ["unit", "edc_auc"]
        if self.has_original:
            columns.append("original_auc")
        return columns + ["runtime_s", "equation", "error"]

    def _cells(self, entry: ReportEntry) -> List[str]:
        cells = [entry.label, "" if entry.failed else f"{entry.edc_auc:.4f}"]
        if self.has_original:
            cells.append("" if entry.original_auc is None else f"{entry.original_auc:.4f}")
        return cells + [f"{entry.runtime:.2f}", entry.equation, entry.error]

    def to_text(self) -> str:
        """Aligned table of every unit followed by the summary rows"""
        header = self._columns()
        rows = [self._cells(e) for e in self.entries]
        widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header) - 2)]

        def line(cells: List[str], tail: str) -> str:
            fixed = "  ".join(c.ljust(w) for c, w in zip(cells, widths))
            return f"{fixed}  {tail}".rstrip()

        lines = [self.title, line(header[:-2], "equation")]
        for entry, cells in zip(self.entries, rows):
            lines.append(line(cells[:-2], f"failed: {entry.error}" if entry.failed else entry.equation))
        lines.append("")
        if self.edc_aucs:
            lines.append(f"EDC AUC:         {format_mean_sd(self.edc_aucs)}  (n={len(self.edc_aucs)})")
        if self.has_original:
            lines.append(f"Original DB AUC: {format_mean_sd(self.original_aucs)}")
        if self.t_test is not None:
            lines.append(
                f"paired t({self.t_test.df}) = {self.t_test.t:.3f}, "
                f"p = {self.t_test.p_two_sided:.4g} (two-sided), {self.p_one_sided:.4g} (one-sided)"
            )
        if self.failures:
            lines.append(f"failed: {len(self.failures)} of {len(self.entries)}")
        lines.append(f"runtime: {format_time(self.runtime)}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        return rows_to_csv(self._columns(), (self._cells(e) for e in self.entries))


def cross_validate(
    table: RawTable,
    y: np.ndarray,
    k: int = DEFAULT_FOLDS,
    config: Optional[RunConfig] = None,
    rare_threshold: float = DEFAULT_RARE_THRESHOLD,
    progress_callback: Optional[ProgressCallback] = None,
) -> ExperimentReport:
    """
    Stratified k-fold evaluation.

    Each fold fits encoder, normalization, equation and threshold on its
    training rows only, then reports test-fold AUC.
    """
    config = config or RunConfig()
    y = np.asarray(y)
    plan = stratified_kfold(y, k, config.search.seed)
    report = ExperimentReport(title=f"{k}-fold cross-validation (seed {config.search.seed})")
    started = time.perf_counter()
    for fold, (train, test) in enumerate(plan.splits()):
        fold_start = time.perf_counter()
        model = fit_model(table.take(train), y[train], config, rare_threshold, progress_callback)
        scores = model.predict_scores(table.take(test))
        fold_auc = auc(scores, y[test])
        fold_accuracy = accuracy_at(scores, y[test], model.threshold)
        report.entries.append(ReportEntry(
            label=f"fold {fold + 1}",
            edc_auc=fold_auc,
            equation=model.describe(),
            runtime=time.perf_counter() - fold_start,
        ))
        logger.info(f"Fold {fold + 1}/{k}: test AUC {fold_auc:.4f}, test accuracy {fold_accuracy:.4f}")
    report.runtime = time.perf_counter() - started
    return report


def _grid_for(model: FittedModel, dataset: SyntheticDataset, cfg: SynthConfig, resolution: int) -> tuple:
    grid = boundary_grid(model.score_matrix, cfg.domain, resolution)
    if dataset.equation is None:
        return grid, ("f",)
    original, _ = evaluate_batch(dataset.equation, grid[:, :2])
    return np.column_stack([grid, original]), ("f", "f_original")


def experiment_digest(config: RunConfig, synth_cfg: SynthConfig) -> str:
    """Store key for a run: search settings plus every generation setting except the seed"""
    return config_digest({'run': config.digest_dict(), 'synth': synth_cfg.digest_dict()})


def run_dataset(
    protocol: str,
    index: int,
    synth_cfg: SynthConfig,
    config: RunConfig,
    grid_dir: Optional[Path] = None,
    grid_resolution: int = DEFAULT_GRID_RESOLUTION,
) -> ExperimentRun:
    """Generate dataset `index` (seed base + index), fit it and score both boundaries"""
    seed = synth_cfg.seed + index
    started = time.perf_counter()
    dataset = generate(protocol, synth_cfg.with_seed(seed))
    model = fit_dataset(dataset.X, dataset.y, FEATURE_NAMES, config.with_seed(seed))
    original_auc = None
    if dataset.equation is not None:
        original_auc = auc(dataset.original_scores(noisy=True), dataset.y)
    if grid_dir is not None:
        grid, columns = _grid_for(model, dataset, synth_cfg, grid_resolution)
        export_grid(Path(grid_dir) / f"{protocol}_{index:03d}_grid.csv", grid, columns)
    return ExperimentRun(
        protocol=protocol,
        base_seed=synth_cfg.seed,
        config_digest=experiment_digest(config, synth_cfg),
        dataset_index=index,
        dataset_seed=seed,
        edc_auc=model.metadata.train_auc,
        original_auc=original_auc,
        equation=model.describe(),
        runtime=time.perf_counter() - started,
    )


def _entry(run: ExperimentRun) -> ReportEntry:
    return ReportEntry(
        label=f"dataset {run.dataset_index}",
        edc_auc=run.edc_auc if run.is_complete else None,
        original_auc=run.original_auc,
        equation=run.equation,
        runtime=run.runtime,
        error=run.error_message,
    )


def run_experiment(
    protocol: str,
    count: int,
    synth_cfg: Optional[SynthConfig] = None,
    config: Optional[RunConfig] = None,
    store: Optional[ResultStore] = None,
    grid_dir: Optional[Path] = None,
    grid_resolution: int = DEFAULT_GRID_RESOLUTION,
    on_run: Optional[Callable[[ExperimentRun], None]] = None,
) -> ExperimentReport:
    """
    Fit EDC on `count` generated datasets and compare against the generating
    boundary where there is one.

    A dataset that fails is recorded and the run continues. With a store,
    datasets already completed under the same protocol, base seed, generation
    settings and search config (see experiment_digest) are
    taken from the store instead of being refit.
    """
    synth_cfg = synth_cfg or SynthConfig()
    config = config or RunConfig()
    digest = experiment_digest(config, synth_cfg)
    report = ExperimentReport(title=f"{protocol}: {count} dataset(s), seed {synth_cfg.seed}")
    done = {}
    if store is not None:
        completed = store.completed_indices(protocol, synth_cfg.seed, digest)
        if completed:
            done = {
                r.dataset_index: r
                for r in store.runs_for(protocol, synth_cfg.seed, digest)
                if r.dataset_index in completed
            }
            logger.info(
                f"Resuming: {len(completed & set(range(count)))} of {count} dataset(s) already in {store.db_path}"
            )

    def failed_run(index: int, message: str) -> ExperimentRun:
        return ExperimentRun(
            protocol=protocol,
            base_seed=synth_cfg.seed,
            config_digest=digest,
            dataset_index=index,
            dataset_seed=synth_cfg.seed + index,
            status=RunStatus.FAILED,
            error_message=message,
        )

    started = time.perf_counter()
    for index in range(count):
        run = done.get(index)
        if run is None:
            try:
                run = run_dataset(protocol, index, synth_cfg, config, grid_dir, grid_resolution)
            except EDCError as e:
                logger.error(f"{protocol} dataset {index} failed: {e}")
                run = failed_run(index, f"{e.code}: {e}")
            except Exception as e:
                logger.exception(f"{protocol} dataset {index} failed unexpectedly")
                run = failed_run(index, f"{EDCError.code}: {type(e).__name__}: {e}")
            if store is not None:
                store.record_run(run)
        if run.is_complete:
            logger.info(f"{protocol} dataset {index + 1}/{count}: EDC AUC {run.edc_auc:.4f}")
        report.entries.append(_entry(run))
        if on_run:
            on_run(run)
    report.runtime = time.perf_counter() - started

    pairs = [(e.edc_auc, e.original_auc) for e in report.entries if not e.failed and e.original_auc is not None]
    if len(pairs) >= 2:
        edc, original = (list(v) for v in zip(*pairs))
        try:
            report.t_test = paired_t_test(edc, original)
            report.p_one_sided = one_sided_p(report.t_test, expected_sign=1)
        except DegenerateTestError as e:
            logger.info(f"No paired t-test: {e}")
    return report
