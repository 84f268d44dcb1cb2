"""
Model file: a fitted equation with everything needed to score raw tables
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Tuple

from .dataset import NormParams
from .equation import Equation
from ..utils.constants import MODEL_FORMAT_VERSION
from ..utils.errors import ModelVersionError, UnparseableFileError


@dataclass(frozen=True)
class TrainingMetadata:
    seed: int
    config_digest: str
    train_loss: float
    train_auc: float
    train_accuracy: float
    n_samples: int
    candidates_evaluated: int

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainingMetadata":
        return cls(**data)


@dataclass(frozen=True)
class ModelFile:
    """
    Versioned JSON model.

    `threshold` applies to the raw equation value f(x); `encoder` is the
    serialized column encoder (see TableEncoder.to_dict).
    """
    equation: Equation
    norm_params: NormParams
    threshold: float
    feature_names: Tuple[str, ...]
    encoder: dict
    metadata: TrainingMetadata
    version: int = field(default=MODEL_FORMAT_VERSION)

    def to_dict(self) -> dict:
        return {
            'version': self.version,
            'equation': self.equation.to_dict(),
            'norm_params': self.norm_params.to_dict(),
            'threshold': self.threshold,
            'feature_names': list(self.feature_names),
            'encoder': self.encoder,
            'metadata': self.metadata.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelFile":
        version = data.get('version')
        if version != MODEL_FORMAT_VERSION:
            raise ModelVersionError(
                f"Model format version {version} is not supported (expected {MODEL_FORMAT_VERSION})"
            )
        return cls(
            equation=Equation.from_dict(data['equation']),
            norm_params=NormParams.from_dict(data['norm_params']),
            threshold=float(data['threshold']),
            feature_names=tuple(data['feature_names']),
            encoder=data['encoder'],
            metadata=TrainingMetadata.from_dict(data['metadata']),
            version=version,
        )

    def save(self, path: str):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str) -> "ModelFile":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise UnparseableFileError(f"Cannot read model file {path}: {e}") from e
        try:
            return cls.from_dict(data)
        except (KeyError, TypeError) as e:
            raise UnparseableFileError(f"Malformed model file {path}: {e}") from e
