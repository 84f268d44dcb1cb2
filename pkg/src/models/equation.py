"""
Equation data model: an intercept plus an ordered list of grammar summands
"""

import json
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..utils.constants import (
    EQUATION_FORMAT_VERSION,
    KIND_CONSTANTS,
    KIND_RANK,
    POWER_DEGREES,
    SEARCH_KINDS,
    SummandKind,
)
from ..utils.errors import ConfigError, ModelVersionError, StructuralError


# (kind, feature indices, degree); degree is 0 for everything but power terms
Structure = Tuple[str, Tuple[int, ...], int]

_KIND_FEATURES = {
    SummandKind.LINEAR: 1,
    SummandKind.PRODUCT: 2,
    SummandKind.EXP: 1,
    SummandKind.POWER: 1,
}


@dataclass(frozen=True)
class Summand:
    """
    One additive building block of an equation.

    Constants are stored in the order they appear when the term is written out:
    linear c·x, product c·x·y, exp c_out·exp(c_in·x), power c·x^d.
    """
    kind: str
    features: Tuple[int, ...]
    constants: Tuple[float, ...]
    degree: int = 0

    def __post_init__(self):
        if self.kind not in KIND_RANK:
            raise StructuralError(f"Unknown summand kind: {self.kind}")
        if len(self.features) != _KIND_FEATURES[self.kind]:
            raise StructuralError(
                f"{self.kind} summand needs {_KIND_FEATURES[self.kind]} feature(s), got {len(self.features)}"
            )
        if any(int(f) < 0 for f in self.features):
            raise StructuralError(f"Negative feature index in {self.features}")
        if len(self.constants) != KIND_CONSTANTS[self.kind]:
            raise StructuralError(
                f"{self.kind} summand needs {KIND_CONSTANTS[self.kind]} constant(s), got {len(self.constants)}"
            )
        if self.kind == SummandKind.POWER:
            if self.degree not in POWER_DEGREES:
                raise StructuralError(f"Unsupported power degree: {self.degree}")
        elif self.degree != 0:
            raise StructuralError("Degree is only meaningful for power summands")
        object.__setattr__(self, "features", tuple(int(f) for f in self.features))
        object.__setattr__(self, "constants", tuple(float(c) for c in self.constants))

    @classmethod
    def linear(cls, c: float, f: int) -> "Summand":
        return cls(SummandKind.LINEAR, (f,), (c,))

    @classmethod
    def product(cls, c: float, f1: int, f2: int) -> "Summand":
        return cls(SummandKind.PRODUCT, (f1, f2), (c,))

    @classmethod
    def exp(cls, c_out: float, c_in: float, f: int) -> "Summand":
        return cls(SummandKind.EXP, (f,), (c_out, c_in))

    @classmethod
    def power(cls, c: float, f: int, degree: int) -> "Summand":
        return cls(SummandKind.POWER, (f,), (c,), degree)

    @classmethod
    def blank(cls, structure: Structure) -> "Summand":
        """Summand with the given structure and all constants zero"""
        kind, features, degree = structure
        return cls(kind, features, (0.0,) * KIND_CONSTANTS[kind], degree)

    @property
    def structure(self) -> Structure:
        return (self.kind, self.features, self.degree)

    @property
    def sort_key(self) -> Tuple[int, Tuple[int, ...], int]:
        return (KIND_RANK[self.kind], self.features, self.degree)

    @property
    def n_constants(self) -> int:
        return len(self.constants)

    def with_constants(self, constants) -> "Summand":
        return Summand(self.kind, self.features, tuple(constants), self.degree)

    def to_dict(self) -> dict:
        data = {
            'kind': self.kind,
            'features': list(self.features),
            'constants': list(self.constants),
        }
        if self.kind == SummandKind.POWER:
            data['degree'] = self.degree
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Summand":
        return cls(
            kind=data['kind'],
            features=tuple(data['features']),
            constants=tuple(data['constants']),
            degree=data.get('degree', 0),
        )


@dataclass(frozen=True)
class Equation:
    """Candidate decision function: intercept + sum of summands"""
    intercept: float = 0.0
    summands: Tuple[Summand, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "summands", tuple(self.summands))

    @property
    def depth(self) -> int:
        """Number of summands (search depth at which this equation is found)"""
        return len(self.summands)

    @property
    def n_constants(self) -> int:
        return 1 + sum(s.n_constants for s in self.summands)

    @property
    def constants(self) -> np.ndarray:
        """All constants in canonical order, intercept first"""
        values = [self.intercept]
        for s in self.summands:
            values.extend(s.constants)
        return np.array(values, dtype=float)

    @property
    def structure_key(self) -> Tuple[Structure, ...]:
        return tuple(s.structure for s in self.summands)

    @property
    def has_exp(self) -> bool:
        return any(s.kind == SummandKind.EXP for s in self.summands)

    @property
    def used_features(self) -> List[int]:
        return sorted({f for s in self.summands for f in s.features})

    def with_constants(self, constants) -> "Equation":
        """Copy with constants replaced from a flat vector in canonical order"""
        values = [float(c) for c in np.asarray(constants, dtype=float).ravel()]
        if len(values) != self.n_constants:
            raise StructuralError(
                f"Expected {self.n_constants} constants, got {len(values)}"
            )
        summands = []
        pos = 1
        for s in self.summands:
            summands.append(s.with_constants(values[pos:pos + s.n_constants]))
            pos += s.n_constants
        return Equation(values[0], tuple(summands))

    def structure_text(self) -> str:
        """Compact structure description, e.g. 'c + lin(0) + exp(1)'"""
        parts = ["c"]
        for kind, features, degree in self.structure_key:
            label = {SummandKind.LINEAR: "lin", SummandKind.PRODUCT: "prod",
                     SummandKind.EXP: "exp", SummandKind.POWER: f"pow{degree}"}[kind]
            parts.append(f"{label}({','.join(str(f) for f in features)})")
        return " + ".join(parts)

    def to_dict(self) -> dict:
        """Versioned serialization; constants keep full precision"""
        return {
            'version': EQUATION_FORMAT_VERSION,
            'intercept': self.intercept,
            'summands': [s.to_dict() for s in self.summands],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Equation":
        version = data.get('version')
        if version != EQUATION_FORMAT_VERSION:
            raise ModelVersionError(
                f"Equation format version {version} is not supported (expected {EQUATION_FORMAT_VERSION})"
            )
        return cls(
            intercept=data['intercept'],
            summands=tuple(Summand.from_dict(s) for s in data.get('summands', [])),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Equation":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class GrammarConfig:
    """Which summands the grammar may produce and how large equations may grow"""
    n_features: int
    max_summands: int
    kinds: Tuple[str, ...] = SEARCH_KINDS
    max_constants: Optional[int] = None
    power_degrees: Tuple[int, ...] = POWER_DEGREES

    def __post_init__(self):
        if self.n_features < 1:
            raise ConfigError(f"Grammar needs at least one feature, got {self.n_features}")
        if self.max_summands < 0:
            raise ConfigError(f"max_summands must be >= 0, got {self.max_summands}")
        unknown = [k for k in self.kinds if k not in KIND_RANK]
        if unknown:
            raise ConfigError(f"Unknown summand kinds: {unknown}")
        if any(d not in POWER_DEGREES for d in self.power_degrees):
            raise ConfigError(f"Unsupported power degrees: {self.power_degrees}")
        object.__setattr__(self, "kinds", tuple(sorted(set(self.kinds), key=KIND_RANK.get)))

    @classmethod
    def search(cls, n_features: int, max_summands: int) -> "GrammarConfig":
        """Grammar used by the beam search: linear, product and exp terms"""
        return cls(n_features=n_features, max_summands=max_summands)

    @classmethod
    def extended(cls, n_features: int, max_summands: int) -> "GrammarConfig":
        """Search grammar plus cubic and quartic power terms (data generation)"""
        return cls(
            n_features=n_features,
            max_summands=max_summands,
            kinds=SEARCH_KINDS + (SummandKind.POWER,),
        )

    def structures(self) -> List[Structure]:
        """Every admissible summand structure, in canonical order"""
        result: List[Structure] = []
        m = self.n_features
        for kind in self.kinds:
            if kind in (SummandKind.LINEAR, SummandKind.EXP):
                result.extend((kind, (f,), 0) for f in range(m))
            elif kind == SummandKind.PRODUCT:
                result.extend((kind, (f1, f2), 0) for f1 in range(m) for f2 in range(f1, m))
            elif kind == SummandKind.POWER:
                result.extend((kind, (f,), d) for f in range(m) for d in self.power_degrees)
        return result
