"""
Tabular data models: raw tables, encoded datasets, normalization and fold plans
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..utils.constants import DEFAULT_DELIMITER
from ..utils.errors import ConfigError, InputError, UnparseableFileError


@dataclass(frozen=True)
class CsvSchema:
    """How to read a labelled CSV file"""
    target_column: str
    positive_label: str
    delimiter: str = DEFAULT_DELIMITER
    categorical: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.target_column:
            raise ConfigError("Schema needs a target column")
        if len(self.delimiter) != 1:
            raise ConfigError(f"Delimiter must be a single character, got {self.delimiter!r}")
        object.__setattr__(self, "categorical", tuple(self.categorical))

    @classmethod
    def from_file(cls, path: str) -> "CsvSchema":
        """
        Parse a key-value schema file.

        Lines look like 'target_column = class'; '#' starts a comment.
        'categorical' takes a comma-separated list of column names that
        must be one-hot encoded even when their values look numeric.
        """
        values = {}
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise UnparseableFileError(f"Cannot read schema file {path}: {e}")
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{number}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key] = value

        unknown = set(values) - {"target_column", "positive_label", "delimiter", "categorical"}
        if unknown:
            raise ConfigError(f"Unknown schema keys: {sorted(unknown)}")
        if "target_column" not in values or "positive_label" not in values:
            raise ConfigError("Schema needs target_column and positive_label")

        delimiter = values.get("delimiter", DEFAULT_DELIMITER)
        if delimiter in ("\\t", "tab"):
            delimiter = "\t"
        categorical = tuple(
            c.strip() for c in values.get("categorical", "").split(",") if c.strip()
        )
        return cls(values["target_column"], values["positive_label"], delimiter, categorical)


@dataclass(eq=False)
class RawTable:
    """Feature cells as text, plus which columns parse as numbers"""
    frame: pd.DataFrame
    numeric_columns: Tuple[str, ...] = ()

    @property
    def columns(self) -> List[str]:
        return list(self.frame.columns)

    @property
    def n_rows(self) -> int:
        return len(self.frame)

    def is_numeric(self, column: str) -> bool:
        return column in self.numeric_columns

    def take(self, rows) -> "RawTable":
        return RawTable(self.frame.iloc[np.asarray(rows)].reset_index(drop=True), self.numeric_columns)


@dataclass(frozen=True)
class ColumnOrigin:
    """Where an encoded column came from; category is None for numeric columns"""
    source: str
    category: Optional[str] = None

    @property
    def is_numeric(self) -> bool:
        return self.category is None

    def to_dict(self) -> dict:
        return {'source': self.source, 'category': self.category}

    @classmethod
    def from_dict(cls, data: dict) -> "ColumnOrigin":
        return cls(data['source'], data.get('category'))


@dataclass(frozen=True)
class NormParams:
    """Per-feature min and range (max - min) fitted on training rows"""
    mins: Tuple[float, ...]
    ranges: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "mins", tuple(float(v) for v in self.mins))
        object.__setattr__(self, "ranges", tuple(float(v) for v in self.ranges))
        if len(self.mins) != len(self.ranges):
            raise InputError("mins and ranges must have equal length")

    @classmethod
    def fit(cls, X: np.ndarray) -> "NormParams":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0:
            raise InputError("Normalization needs a non-empty training matrix")
        lo = X.min(axis=0)
        return cls(tuple(lo), tuple(X.max(axis=0) - lo))

    @property
    def n_features(self) -> int:
        return len(self.mins)

    @property
    def degenerate(self) -> Tuple[bool, ...]:
        return tuple(r == 0.0 for r in self.ranges)

    def apply(self, X) -> np.ndarray:
        """Linear scaling; zero-range features map to 0, values outside the training span are kept"""
        X = np.asarray(X, dtype=float)
        mins = np.asarray(self.mins)
        ranges = np.asarray(self.ranges)
        safe = np.where(ranges > 0, ranges, 1.0)
        out = (X - mins) / safe
        out[:, ranges == 0] = 0.0
        return out

    def to_dict(self) -> dict:
        return {'mins': list(self.mins), 'ranges': list(self.ranges)}

    @classmethod
    def from_dict(cls, data: dict) -> "NormParams":
        return cls(tuple(data['mins']), tuple(data['ranges']))


@dataclass(frozen=True, eq=False)
class EncodedDataset:
    """Numeric feature matrix (normalized), binary labels and column metadata"""
    X: np.ndarray
    y: np.ndarray
    feature_names: Tuple[str, ...]
    norm_params: NormParams
    origins: Tuple[ColumnOrigin, ...] = field(default_factory=tuple)

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise InputError(f"Feature matrix must be 2-D, got shape {X.shape}")
        if X.shape[0] != y.size:
            raise InputError(f"{X.shape[0]} rows but {y.size} labels")
        if not np.all((y == 0) | (y == 1)):
            raise InputError("Labels must be 0 or 1")
        if len(self.feature_names) != X.shape[1]:
            raise InputError(f"{X.shape[1]} columns but {len(self.feature_names)} feature names")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "origins", tuple(self.origins))

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def has_both_classes(self) -> bool:
        return bool(np.any(self.y == 1) and np.any(self.y == 0))

    @property
    def positive_rate(self) -> float:
        return float(np.mean(self.y)) if self.n_samples else float("nan")

    @property
    def degenerate_features(self) -> List[str]:
        return [n for n, d in zip(self.feature_names, self.norm_params.degenerate) if d]


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """Fold index per row for k-fold cross-validation"""
    assignments: np.ndarray
    k: int
    seed: int

    def __post_init__(self):
        assignments = np.array(self.assignments, dtype=int)
        assignments.setflags(write=False)
        object.__setattr__(self, "assignments", assignments)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def splits(self) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        for fold in range(self.k):
            yield self.train_indices(fold), self.test_indices(fold)
