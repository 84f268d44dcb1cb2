"""
Command-line interface: fit, predict, cv, synth, experiment, grid
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from ..core.encoding import load_csv, read_table
from ..core.file_utils import export_datasets, export_grid, export_text, predictions_csv
from ..core.pipeline import cross_validate, fit_model, load_model, run_experiment
from ..core.synth import boundary_grid, generate
from ..models.config import RunConfig, SynthConfig
from ..models.dataset import CsvSchema
from ..models.results_store import ResultStore
from ..utils.constants import (
    APP_NAME,
    APP_VERSION,
    DEFAULT_DELIMITER,
    DEFAULT_DOMAIN,
    DEFAULT_FOLDS,
    DEFAULT_GRID_RESOLUTION,
    DEFAULT_N_POINTS,
    DEFAULT_NOISE_SIGMA,
    DEFAULT_PRECISION,
    DEFAULT_RARE_THRESHOLD,
    DEFAULT_SEED,
    ExitCode,
    Protocol,
)
from ..utils.errors import ConfigError, EDCError
from ..utils.helpers import format_time


logger = logging.getLogger(__name__)


def _log_progress(depth: int, candidates: int, best_loss: float):
    logger.info(f"depth {depth}: {candidates} candidates evaluated, best loss {best_loss:.6f}")


def _csv_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def run_config(args: argparse.Namespace) -> RunConfig:
    """Config file first, then explicit flags on top"""
    config = RunConfig.from_file(args.config) if args.config else RunConfig()

    search = config.search
    for flag, name in (("beam_width", "beam_width"), ("max_depth", "max_depth"),
                       ("restarts", "restarts_per_candidate"), ("workers", "workers")):
        value = getattr(args, flag)
        if value is not None:
            search = replace(search, **{name: value})

    sgd_flags = {"learning_rate": args.sgd_lr, "epochs": args.sgd_epochs, "batch_size": args.sgd_batch,
                 "final_lr_fraction": args.sgd_final_fraction}
    sgd = replace(config.optimizer.sgd, **{k: v for k, v in sgd_flags.items() if v is not None})

    hill_flags = {"budget": args.hill_budget, "random_fraction": args.hill_fraction,
                  "top_k": args.hill_topk, "step_size": args.hill_step}
    hill = replace(config.optimizer.hill, **{k: v for k, v in hill_flags.items() if v is not None})

    optimizer = replace(config.optimizer, sgd=sgd, hill=hill)
    if args.force_sgd:
        optimizer = replace(optimizer, force_sgd=True)

    config = RunConfig(search=search, optimizer=optimizer, grammar=config.grammar)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def _schema(args: argparse.Namespace) -> CsvSchema:
    if args.schema:
        schema = CsvSchema.from_file(args.schema)
        overrides = {
            k: v for k, v in (("target_column", args.target_column),
                              ("positive_label", args.positive_label)) if v is not None
        }
        return replace(schema, **overrides) if overrides else schema
    if args.target_column is None or args.positive_label is None:
        raise ConfigError("Give --schema or both --target-column and --positive-label")
    return CsvSchema(
        target_column=args.target_column,
        positive_label=args.positive_label,
        delimiter=args.delimiter,
        categorical=tuple(_csv_list(args.categorical or "")),
    )


def cmd_fit(args: argparse.Namespace) -> int:
    config = run_config(args)
    table, y = load_csv(args.csv, _schema(args))
    model = fit_model(table, y, config, args.rare_threshold, _log_progress)
    model.save(args.out)
    meta = model.metadata
    logger.info(f"Saved model to {args.out}")
    print(model.describe(args.precision))
    print(f"train AUC {meta.train_auc:.4f}  accuracy {meta.train_accuracy:.4f}  "
          f"log loss {meta.train_loss:.6f}  threshold {model.threshold:.6g}")
    return ExitCode.OK


def cmd_predict(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    path = Path(args.csv)
    if path.is_file() and path.stat().st_size == 0:
        text = ""
    else:
        table = read_table(args.csv, args.delimiter)
        text = predictions_csv(model.predict_proba(table), model.predict(table))
    if args.out:
        export_text(Path(args.out), text)
        logger.info(f"Wrote predictions to {args.out}")
    else:
        sys.stdout.write(text)
    return ExitCode.OK


def cmd_cv(args: argparse.Namespace) -> int:
    config = run_config(args)
    table, y = load_csv(args.csv, _schema(args))
    report = cross_validate(table, y, args.folds, config, args.rare_threshold, _log_progress)
    print(report.to_text(), end="")
    if args.out:
        export_text(Path(args.out), report.to_csv())
    return ExitCode.OK


def _synth_config(args: argparse.Namespace) -> SynthConfig:
    return SynthConfig(
        n_points=args.n_points,
        noise_sigma=args.noise,
        seed=DEFAULT_SEED if args.seed is None else args.seed,
    )


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = _synth_config(args)
    datasets = [(i, generate(args.protocol, cfg.with_seed(cfg.seed + i))) for i in range(args.count)]
    paths = export_datasets(datasets, Path(args.outdir))
    logger.info(f"Wrote {len(paths)} {args.protocol} dataset(s) to {args.outdir}")
    return ExitCode.OK


def cmd_experiment(args: argparse.Namespace) -> int:
    config = run_config(args)
    cfg = _synth_config(args)
    store = ResultStore(Path(args.store)) if args.store else None
    report = run_experiment(
        args.protocol,
        args.count,
        cfg,
        config,
        store=store,
        grid_dir=Path(args.grid_dir) if args.grid_dir else None,
        grid_resolution=args.resolution,
    )
    print(report.to_text(), end="")
    if args.out:
        export_text(Path(args.out), report.to_csv())
    logger.info(f"Experiment finished in {format_time(report.runtime)}")
    return ExitCode.OK


def cmd_grid(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    if len(model.encoder.source_columns) != 2:
        raise ConfigError(
            f"Boundary grids need a model over two numeric columns, got {model.encoder.source_columns}"
        )
    domain = DEFAULT_DOMAIN
    if args.domain:
        x_lo, x_hi, y_lo, y_hi = args.domain
        domain = ((x_lo, x_hi), (y_lo, y_hi))
    grid = boundary_grid(model.score_matrix, domain, args.resolution)
    export_grid(Path(args.out), grid)
    logger.info(f"Wrote {args.resolution}x{args.resolution} grid to {args.out}")
    return ExitCode.OK


def _search_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("search")
    group.add_argument("--config", help="JSON file with 'search', 'optimizer' and 'grammar' sections")
    group.add_argument("--seed", type=int, help="base seed for every random choice")
    group.add_argument("--beam-width", type=int)
    group.add_argument("--max-depth", type=int)
    group.add_argument("--restarts", type=int, help="random restarts per candidate structure")
    group.add_argument("--workers", type=int, help="threads for candidate optimization")
    group.add_argument("--sgd-lr", type=float)
    group.add_argument("--sgd-epochs", type=int)
    group.add_argument("--sgd-batch", type=int)
    group.add_argument("--sgd-final-fraction", type=float, help="last-epoch share of the SGD learning rate")
    group.add_argument("--hill-budget", type=int)
    group.add_argument("--hill-fraction", type=float)
    group.add_argument("--hill-topk", type=int)
    group.add_argument("--hill-step", type=float)
    group.add_argument("--force-sgd", action="store_true", help="use SGD for exp terms too")
    group.add_argument("--precision", type=int, default=DEFAULT_PRECISION)
    return parent


def _data_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("data")
    group.add_argument("csv")
    group.add_argument("--schema", help="key = value schema file")
    group.add_argument("--target-column")
    group.add_argument("--positive-label")
    group.add_argument("--delimiter", default=DEFAULT_DELIMITER)
    group.add_argument("--categorical", help="comma-separated columns to one-hot encode")
    group.add_argument("--rare-threshold", type=float, default=DEFAULT_RARE_THRESHOLD)
    return parent


def _synth_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("synthetic data")
    group.add_argument("protocol", choices=Protocol.ALL)
    group.add_argument("--count", type=int, required=True)
    group.add_argument("--n-points", type=int, default=DEFAULT_N_POINTS)
    group.add_argument("--noise", type=float, default=DEFAULT_NOISE_SIGMA, help="Gaussian noise sigma")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=APP_NAME,
        description="Symbolic binary classification by equation discovery",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {APP_VERSION}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    search, data, synth = _search_flags(), _data_flags(), _synth_flags()

    p = sub.add_parser("fit", parents=[data, search], help="fit a model on a labelled CSV")
    p.add_argument("--out", default="model.json", help="model file to write")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="score a CSV with a saved model")
    p.add_argument("model")
    p.add_argument("csv")
    p.add_argument("--delimiter", default=DEFAULT_DELIMITER)
    p.add_argument("--out", help="write predictions here instead of stdout")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cv", parents=[data, search], help="stratified k-fold cross-validation")
    p.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
    p.add_argument("--out", help="CSV report")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("synth", parents=[synth], help="write synthetic datasets")
    p.add_argument("--seed", type=int)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("experiment", parents=[synth, search], help="fit EDC on generated datasets")
    p.add_argument("--store", help="SQLite file; completed datasets are skipped on rerun")
    p.add_argument("--grid-dir", help="write an f-value grid per dataset here")
    p.add_argument("--resolution", type=int, default=DEFAULT_GRID_RESOLUTION)
    p.add_argument("--out", help="CSV report")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("grid", help="f-value grid of a two-feature model")
    p.add_argument("model")
    p.add_argument("--out", required=True)
    p.add_argument("--resolution", type=int, default=DEFAULT_GRID_RESOLUTION)
    p.add_argument("--domain", type=float, nargs=4, metavar=("X1_LO", "X1_HI", "X2_LO", "X2_HI"))
    p.set_defaults(func=cmd_grid)

    return parser


def run(args: argparse.Namespace) -> int:
    """Dispatch parsed arguments; errors become exit codes"""
    try:
        return int(args.func(args))
    except EDCError as e:
        logger.error(f"{e.code}: {e}")
        return int(e.exit_code)
    except Exception:
        logger.exception("Unexpected error")
        return ExitCode.INTERNAL


def main(argv: Optional[List[str]] = None) -> int:
    return run(build_parser().parse_args(argv))
