"""
Exception hierarchy shared by all modules
"""

from .constants import ExitCode


class EDCError(Exception):
    """Base error; carries a stable text code and a process exit code"""

    code = "internal"
    exit_code = ExitCode.INTERNAL

    def __init__(self, message: str = "", code: str = ""):
        super().__init__(message or self.code)
        if code:
            self.code = code


# Data errors (exit 2)

class DataError(EDCError):
    code = "data-error"
    exit_code = ExitCode.DATA_ERROR


class UnparseableFileError(DataError):
    code = "unparseable-file"


class TargetColumnNotFoundError(DataError):
    code = "target-column-not-found"


class EmptyTableError(DataError):
    code = "empty-table"


class MissingFeatureColumnError(DataError):
    code = "missing-feature-column"


class InfeasibleFoldsError(DataError):
    code = "infeasible-folds"


class ModelVersionError(DataError):
    code = "model-version-mismatch"


# Config errors (exit 3)

class ConfigError(EDCError):
    code = "invalid-config"
    exit_code = ExitCode.CONFIG_ERROR


# Unlearnable data (exit 4)

class UnlearnableDataError(EDCError):
    code = "single-class-labels"
    exit_code = ExitCode.UNLEARNABLE


# Internal errors (exit 5)

class StructuralError(EDCError):
    code = "structural-error"


class CanonicalizationError(StructuralError):
    code = "duplicate-summand"


class InputError(EDCError):
    code = "non-finite-input"


class DegenerateFeatureError(EDCError):
    code = "degenerate-feature"


class UndefinedMetricError(EDCError):
    code = "undefined-metric"


class DegenerateTestError(EDCError):
    code = "degenerate-test"


class OptimizerDivergedError(EDCError):
    code = "optimizer-diverged"


class GenerationError(EDCError):
    code = "generation-failed"
