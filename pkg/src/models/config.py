"""
Search, optimizer and synthetic-data configuration
"""

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Optional, Tuple

from .equation import GrammarConfig
from ..utils.constants import (
    DEFAULT_BEAM_WIDTH,
    DEFAULT_CONSTANT_RANGE,
    DEFAULT_DOMAIN,
    DEFAULT_HILL_BUDGET,
    DEFAULT_HILL_FRACTION,
    DEFAULT_HILL_STEP,
    DEFAULT_HILL_TOP_K,
    DEFAULT_INIT_RANGE,
    DEFAULT_MAX_DEPTH,
    DEFAULT_N_POINTS,
    DEFAULT_NOISE_SIGMA,
    DEFAULT_RESTARTS,
    DEFAULT_SEED,
    DEFAULT_SGD_BATCH_SIZE,
    DEFAULT_SGD_EPOCHS,
    DEFAULT_SGD_FINAL_LR_FRACTION,
    DEFAULT_SGD_LEARNING_RATE,
    DEFAULT_WORKERS,
    SEARCH_KINDS,
)
from ..utils.errors import ConfigError


def _known(cls, data: Dict[str, Any]) -> Dict[str, Any]:
    """Keep only keys that are fields of cls, rejecting anything else"""
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"Unknown {cls.__name__} keys: {sorted(unknown)}")
    return dict(data)


@dataclass(frozen=True)
class SgdConfig:
    """
    Minibatch SGD settings. The step size decays linearly from learning_rate
    in the first epoch to learning_rate * final_lr_fraction in the last.
    """
    learning_rate: float = DEFAULT_SGD_LEARNING_RATE
    epochs: int = DEFAULT_SGD_EPOCHS
    batch_size: int = DEFAULT_SGD_BATCH_SIZE
    final_lr_fraction: float = DEFAULT_SGD_FINAL_LR_FRACTION

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError(f"SGD learning rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigError(f"SGD epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"SGD batch size must be >= 1, got {self.batch_size}")
        if not 0.0 < self.final_lr_fraction <= 1.0:
            raise ConfigError(f"SGD final_lr_fraction must be in (0, 1], got {self.final_lr_fraction}")

    def epoch_learning_rate(self, learning_rate: float, epoch: int) -> float:
        """Step size for a 0-based epoch, starting from learning_rate"""
        if self.epochs == 1:
            return learning_rate
        progress = epoch / (self.epochs - 1)
        return learning_rate * (1.0 - (1.0 - self.final_lr_fraction) * progress)


@dataclass(frozen=True)
class HillConfig:
    budget: int = DEFAULT_HILL_BUDGET
    random_fraction: float = DEFAULT_HILL_FRACTION
    top_k: int = DEFAULT_HILL_TOP_K
    step_size: float = DEFAULT_HILL_STEP

    def __post_init__(self):
        if self.budget < 1:
            raise ConfigError(f"Hill-climb budget must be >= 1, got {self.budget}")
        if not 0.0 < self.random_fraction < 1.0:
            raise ConfigError(f"Hill-climb random fraction must be in (0, 1), got {self.random_fraction}")
        if self.top_k < 1:
            raise ConfigError(f"Hill-climb top_k must be >= 1, got {self.top_k}")
        if self.n_random < self.top_k:
            raise ConfigError(
                f"Hill-climb random phase ({self.budget} x {self.random_fraction}) "
                f"is smaller than top_k={self.top_k}"
            )
        if not self.step_size > 0:
            raise ConfigError(f"Hill-climb step size must be > 0, got {self.step_size}")

    @property
    def n_random(self) -> int:
        return int(math.floor(self.budget * self.random_fraction + 1e-9))

    def iterations_per_start(self, n_constants: int) -> int:
        """Steepest-descent iterations each of the top-k starts may take"""
        exact = self.budget * (1.0 - self.random_fraction) / (2 * self.top_k * n_constants)
        return int(math.floor(exact + 1e-9))


@dataclass(frozen=True)
class OptimizerConfig:
    sgd: SgdConfig = field(default_factory=SgdConfig)
    hill: HillConfig = field(default_factory=HillConfig)
    init_range: float = DEFAULT_INIT_RANGE
    seed: int = DEFAULT_SEED
    force_sgd: bool = False

    def __post_init__(self):
        if not self.init_range > 0:
            raise ConfigError(f"init_range must be > 0, got {self.init_range}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizerConfig":
        data = _known(cls, data)
        if 'sgd' in data:
            data['sgd'] = SgdConfig(**_known(SgdConfig, data['sgd']))
        if 'hill' in data:
            data['hill'] = HillConfig(**_known(HillConfig, data['hill']))
        return cls(**data)

    def with_seed(self, seed: int) -> "OptimizerConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class SearchConfig:
    beam_width: int = DEFAULT_BEAM_WIDTH
    max_depth: int = DEFAULT_MAX_DEPTH
    restarts_per_candidate: int = DEFAULT_RESTARTS
    seed: int = DEFAULT_SEED
    workers: int = DEFAULT_WORKERS

    def __post_init__(self):
        if self.beam_width < 1:
            raise ConfigError(f"Beam width must be >= 1, got {self.beam_width}")
        if self.max_depth < 1:
            raise ConfigError(f"Max depth must be >= 1, got {self.max_depth}")
        if self.restarts_per_candidate < 1:
            raise ConfigError(f"Restarts per candidate must be >= 1, got {self.restarts_per_candidate}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.workers < 1:
            raise ConfigError(f"Workers must be >= 1, got {self.workers}")

    def to_dict(self) -> dict:
        return asdict(self)

    def digest_dict(self) -> dict:
        """Settings that influence the result (worker count does not)"""
        data = asdict(self)
        del data['workers']
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SearchConfig":
        return cls(**_known(cls, data))


@dataclass(frozen=True)
class SynthConfig:
    n_points: int = DEFAULT_N_POINTS
    domain: Tuple[Tuple[float, float], ...] = DEFAULT_DOMAIN
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    constant_range: float = DEFAULT_CONSTANT_RANGE
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.n_points < 1:
            raise ConfigError(f"n_points must be >= 1, got {self.n_points}")
        if self.noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not self.constant_range > 0:
            raise ConfigError(f"constant_range must be > 0, got {self.constant_range}")
        domain = tuple((float(lo), float(hi)) for lo, hi in self.domain)
        if any(not hi > lo for lo, hi in domain):
            raise ConfigError(f"Every domain interval needs low < high, got {self.domain}")
        object.__setattr__(self, "domain", domain)

    def with_seed(self, seed: int) -> "SynthConfig":
        return replace(self, seed=seed)

    def without_noise(self) -> "SynthConfig":
        return replace(self, noise_sigma=0.0)

    def to_dict(self) -> dict:
        data = asdict(self)
        data['domain'] = [list(d) for d in self.domain]
        return data

    def digest_dict(self) -> dict:
        """Generation settings other than the base seed"""
        data = self.to_dict()
        del data['seed']
        return data


@dataclass(frozen=True)
class GrammarSettings:
    """User-facing grammar options; the feature count comes from the data"""
    kinds: Tuple[str, ...] = SEARCH_KINDS
    max_constants: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kinds", tuple(self.kinds))
        if not self.kinds:
            raise ConfigError("Grammar needs at least one summand kind")
        if self.max_constants is not None and self.max_constants < 1:
            raise ConfigError(f"max_constants must be >= 1, got {self.max_constants}")

    def to_grammar(self, n_features: int, max_summands: int) -> GrammarConfig:
        return GrammarConfig(
            n_features=n_features,
            max_summands=max_summands,
            kinds=self.kinds,
            max_constants=self.max_constants,
        )

    def to_dict(self) -> dict:
        return {'kinds': list(self.kinds), 'max_constants': self.max_constants}

    @classmethod
    def from_dict(cls, data: dict) -> "GrammarSettings":
        data = _known(cls, data)
        if 'kinds' in data:
            data['kinds'] = tuple(data['kinds'])
        return cls(**data)


@dataclass(frozen=True)
class RunConfig:
    """Everything that shapes a fitted model, as read from a --config JSON file"""
    search: SearchConfig = field(default_factory=SearchConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    grammar: GrammarSettings = field(default_factory=GrammarSettings)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = _known(cls, data)
        return cls(
            search=SearchConfig.from_dict(data.get('search', {})),
            optimizer=OptimizerConfig.from_dict(data.get('optimizer', {})),
            grammar=GrammarSettings.from_dict(data.get('grammar', {})),
        )

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, ValueError) as e:
            raise ConfigError(f"Cannot read config file {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must hold a JSON object")
        try:
            return cls.from_dict(data)
        except TypeError as e:
            raise ConfigError(f"Invalid config file {path}: {e}") from e

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(
            self,
            search=replace(self.search, seed=seed),
            optimizer=self.optimizer.with_seed(seed),
        )

    def digest_dict(self) -> dict:
        return {
            'search': self.search.digest_dict(),
            'optimizer': self.optimizer.to_dict(),
            'grammar': self.grammar.to_dict(),
        }
