"""
CSV ingestion, one-hot encoding with rare-category grouping, normalization and fold plans
"""

import csv
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..models.dataset import ColumnOrigin, CsvSchema, EncodedDataset, FoldPlan, NormParams, RawTable
from ..utils.constants import (
    CATEGORY_ESCAPE,
    DEFAULT_DELIMITER,
    DEFAULT_RARE_THRESHOLD,
    MISSING_CATEGORY,
    MISSING_MARKERS,
    OTHER_CATEGORY,
)
from ..utils.errors import (
    EmptyTableError,
    InfeasibleFoldsError,
    InputError,
    MissingFeatureColumnError,
    TargetColumnNotFoundError,
    UnlearnableDataError,
    UnparseableFileError,
)


logger = logging.getLogger(__name__)


def _read_frame(path: str, delimiter: str) -> pd.DataFrame:
    try:
        frame = pd.read_csv(
            path,
            sep=delimiter,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
            quoting=csv.QUOTE_MINIMAL,
        )
    except FileNotFoundError as e:
        raise UnparseableFileError(f"File not found: {path}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError, OSError) as e:
        raise UnparseableFileError(f"Cannot parse {path}: {e}") from e
    frame.columns = [str(c).strip() for c in frame.columns]
    return frame.apply(lambda col: col.str.strip())


def _is_missing(values: pd.Series) -> pd.Series:
    return values.isin(MISSING_MARKERS)


def _escape_category(value: str) -> str:
    """Prefix values that spell a reserved category (after any leading '_') with '_'"""
    if isinstance(value, str) and value.lstrip(CATEGORY_ESCAPE) in (OTHER_CATEGORY, MISSING_CATEGORY):
        return CATEGORY_ESCAPE + value
    return value


def _category_labels(values: pd.Series) -> pd.Series:
    """Category of each cell: MISSING_CATEGORY for missing cells, escaped text otherwise"""
    labels = values.map(_escape_category, na_action="ignore")
    return labels.where(~_is_missing(values), MISSING_CATEGORY)


def _detect_numeric(frame: pd.DataFrame, categorical: Sequence[str]) -> Tuple[str, ...]:
    """Columns whose non-missing cells all parse as numbers"""
    numeric = []
    for column in frame.columns:
        if column in categorical:
            continue
        present = frame[column][~_is_missing(frame[column])]
        if present.empty:
            continue
        if pd.to_numeric(present, errors="coerce").notna().all():
            numeric.append(column)
    return tuple(numeric)


def read_table(path: str, delimiter: str = DEFAULT_DELIMITER, categorical: Sequence[str] = ()) -> RawTable:
    """Read an unlabelled feature table; zero data rows are allowed"""
    frame = _read_frame(path, delimiter)
    return RawTable(frame, _detect_numeric(frame, categorical))


def load_csv(path: str, schema: CsvSchema) -> Tuple[RawTable, np.ndarray]:
    """
    Load a labelled CSV file.

    Returns:
        (table of feature columns, labels) where label = 1 iff the target
        cell equals schema.positive_label

    Raises:
        UnparseableFileError, TargetColumnNotFoundError, EmptyTableError,
        UnlearnableDataError (single-class labels)
    """
    frame = _read_frame(path, schema.delimiter)
    if schema.target_column not in frame.columns:
        raise TargetColumnNotFoundError(
            f"Target column '{schema.target_column}' not found in {path}"
        )
    if frame.empty:
        raise EmptyTableError(f"{path} has no data rows")

    labels = (frame[schema.target_column] == schema.positive_label).to_numpy(dtype=float)
    if labels.min() == labels.max():
        raise UnlearnableDataError(f"{path} contains a single class only")

    features = frame.drop(columns=[schema.target_column])
    table = RawTable(features, _detect_numeric(features, schema.categorical))
    logger.info(
        f"Loaded {table.n_rows} rows, {len(table.columns)} feature columns "
        f"({len(table.numeric_columns)} numeric) from {path}"
    )
    return table, labels


@dataclass(frozen=True)
class NumericColumn:
    name: str
    median: float

    @property
    def output_names(self) -> List[str]:
        return [self.name]

    @property
    def origins(self) -> List[ColumnOrigin]:
        return [ColumnOrigin(self.name)]

    def encode(self, values: pd.Series) -> np.ndarray:
        parsed = pd.to_numeric(values.where(~_is_missing(values)), errors="coerce")
        return parsed.fillna(self.median).to_numpy(dtype=float).reshape(-1, 1)

    def to_dict(self) -> dict:
        return {'type': 'numeric', 'name': self.name, 'median': self.median}


@dataclass(frozen=True)
class CategoricalColumn:
    name: str
    categories: Tuple[str, ...]
    has_other: bool

    @property
    def output_names(self) -> List[str]:
        names = [f"{self.name}={c}" for c in self.categories]
        if self.has_other:
            names.append(f"{self.name}={OTHER_CATEGORY}")
        return names

    @property
    def origins(self) -> List[ColumnOrigin]:
        origins = [ColumnOrigin(self.name, c) for c in self.categories]
        if self.has_other:
            origins.append(ColumnOrigin(self.name, OTHER_CATEGORY))
        return origins

    def encode(self, values: pd.Series) -> np.ndarray:
        values = _category_labels(values)
        columns = [(values == c).to_numpy(dtype=float) for c in self.categories]
        if self.has_other:
            columns.append((~values.isin(self.categories)).to_numpy(dtype=float))
        if not columns:
            return np.zeros((len(values), 0))
        return np.column_stack(columns)

    def to_dict(self) -> dict:
        return {
            'type': 'categorical',
            'name': self.name,
            'categories': list(self.categories),
            'has_other': self.has_other,
        }


EncodedColumn = Union[NumericColumn, CategoricalColumn]


@dataclass(frozen=True)
class TableEncoder:
    """
    Column encoding fitted on training rows and frozen for later tables.

    Numeric columns pass through with missing cells set to the training
    median. Categorical columns expand to one 0/1 column per category whose
    training frequency exceeds the rare threshold, plus a single OTHER
    column for the rest (omitted when nothing is rare). Missing categorical
    cells form their own category.
    """
    columns: Tuple[EncodedColumn, ...]
    rare_threshold: float = DEFAULT_RARE_THRESHOLD

    @classmethod
    def fit(
        cls,
        table: RawTable,
        rows: Optional[np.ndarray] = None,
        rare_threshold: float = DEFAULT_RARE_THRESHOLD,
    ) -> "TableEncoder":
        frame = table.frame if rows is None else table.frame.iloc[np.asarray(rows)]
        if frame.empty:
            raise InputError("Encoder needs at least one training row")
        columns: List[EncodedColumn] = []
        for name in table.columns:
            values = frame[name]
            if table.is_numeric(name):
                parsed = pd.to_numeric(values.where(~_is_missing(values)), errors="coerce")
                median = float(parsed.median()) if parsed.notna().any() else 0.0
                columns.append(NumericColumn(name, median))
            else:
                values = _category_labels(values)
                freq = values.value_counts(normalize=True)
                kept = tuple(sorted(str(c) for c, f in freq.items() if f > rare_threshold))
                has_other = bool((freq <= rare_threshold).any())
                columns.append(CategoricalColumn(name, kept, has_other))
        return cls(tuple(columns), rare_threshold)

    @property
    def feature_names(self) -> List[str]:
        return [n for c in self.columns for n in c.output_names]

    @property
    def origins(self) -> List[ColumnOrigin]:
        return [o for c in self.columns for o in c.origins]

    @property
    def source_columns(self) -> List[str]:
        return [c.name for c in self.columns]

    def transform(self, table: RawTable) -> np.ndarray:
        missing = [c.name for c in self.columns if c.name not in table.frame.columns]
        if missing:
            raise MissingFeatureColumnError(f"Input lacks feature column(s): {missing}")
        blocks = [c.encode(table.frame[c.name]) for c in self.columns]
        if not blocks:
            return np.zeros((table.n_rows, 0))
        return np.hstack(blocks) if table.n_rows else np.zeros((0, len(self.feature_names)))

    def to_dict(self) -> dict:
        return {
            'rare_threshold': self.rare_threshold,
            'columns': [c.to_dict() for c in self.columns],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TableEncoder":
        columns: List[EncodedColumn] = []
        for c in data['columns']:
            if c['type'] == 'numeric':
                columns.append(NumericColumn(c['name'], float(c['median'])))
            else:
                columns.append(CategoricalColumn(c['name'], tuple(c['categories']), bool(c['has_other'])))
        return cls(tuple(columns), float(data['rare_threshold']))


def one_hot_encode(
    table: RawTable, rare_threshold: float = DEFAULT_RARE_THRESHOLD
) -> Tuple[np.ndarray, List[str], List[ColumnOrigin]]:
    """Encode every column of table, grouping categories with frequency <= rare_threshold"""
    encoder = TableEncoder.fit(table, rare_threshold=rare_threshold)
    return encoder.transform(table), encoder.feature_names, encoder.origins


def normalize(
    X: np.ndarray,
    y: np.ndarray,
    feature_names: Sequence[str],
    train_rows: Optional[np.ndarray] = None,
    origins: Sequence[ColumnOrigin] = (),
) -> EncodedDataset:
    """
    Min-max scale X with parameters fitted on train_rows (all rows when None).

    Rows outside the training span are not clipped; zero-range features
    become constant 0 and are reported.
    """
    X = np.asarray(X, dtype=float)
    fit_rows = X if train_rows is None else X[np.asarray(train_rows)]
    if fit_rows.shape[0] == 0:
        raise InputError("Normalization needs at least one training row")
    params = NormParams.fit(fit_rows)
    dataset = EncodedDataset(params.apply(X), y, tuple(feature_names), params, tuple(origins))
    degenerate = dataset.degenerate_features
    if degenerate:
        logger.warning(f"Zero-range feature(s) mapped to 0: {degenerate}")
    return dataset


def stratified_kfold(y, k: int, seed: int) -> FoldPlan:
    """
    Assign rows to k folds, shuffling within each class and dealing rows out
    round-robin so every fold gets its share of each class (±1).
    """
    y = np.asarray(y).ravel()
    classes, counts = np.unique(y, return_counts=True)
    if k < 2:
        raise InfeasibleFoldsError(f"Need at least 2 folds, got {k}")
    if k > counts.min():
        raise InfeasibleFoldsError(
            f"{k} folds requested but the minority class has only {counts.min()} row(s)"
        )
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(np.flatnonzero(y == c)) for c in classes])
    assignments = np.empty(y.size, dtype=int)
    assignments[order] = np.arange(order.size) % k
    return FoldPlan(assignments, k, seed)
