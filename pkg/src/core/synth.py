"""
Synthetic datasets: equation-defined boundaries (with and without noise),
boundaries from the extended power grammar, and Gaussian-cluster mixtures
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .expression import canonicalize, evaluate_batch, to_infix_string
from ..models.config import SynthConfig
from ..models.equation import Equation, GrammarConfig, Summand
from ..utils.constants import (
    CLUSTER_SCALE_RANGE,
    DEFAULT_GRID_RESOLUTION,
    DEFAULT_MAX_DEPTH,
    KIND_CONSTANTS,
    MAX_CLASS_BALANCE,
    MAX_GENERATION_ATTEMPTS,
    MIN_ABS_CONSTANT,
    MIN_CLASS_BALANCE,
    N_CLUSTERS,
    N_POSITIVE_CLUSTERS,
    Protocol,
    SummandKind,
)
from ..utils.errors import ConfigError, GenerationError


logger = logging.getLogger(__name__)

FEATURE_NAMES = ("x1", "x2")
DEFAULT_DEPTH_RANGE = (1, DEFAULT_MAX_DEPTH)


@dataclass(frozen=True)
class ClusterSpec:
    mean: Tuple[float, float]
    covariance: Tuple[Tuple[float, float], Tuple[float, float]]
    label: int
    weight: float

    def to_dict(self) -> dict:
        return {
            'mean': list(self.mean),
            'covariance': [list(row) for row in self.covariance],
            'label': self.label,
            'weight': self.weight,
        }


@dataclass(frozen=True, eq=False)
class SyntheticDataset:
    """Labelled 2-D points; `clean` holds the coordinates before noise was added"""
    X: np.ndarray
    y: np.ndarray
    clean: np.ndarray
    protocol: str
    seed: int
    equation: Optional[Equation] = None
    clusters: Tuple[ClusterSpec, ...] = field(default_factory=tuple)
    noise_sigma: float = 0.0

    @property
    def n_points(self) -> int:
        return self.X.shape[0]

    @property
    def positive_rate(self) -> float:
        return float(np.mean(self.y))

    def original_scores(self, noisy: bool = True) -> np.ndarray:
        """Values of the generating equation on the (noisy or clean) points"""
        if self.equation is None:
            raise GenerationError(f"Protocol {self.protocol} has no generating equation")
        values, _ = evaluate_batch(self.equation, self.X if noisy else self.clean)
        return values

    def sidecar_text(self) -> str:
        lines = [
            f"protocol: {self.protocol}",
            f"seed: {self.seed}",
            f"n_points: {self.n_points}",
            f"noise_sigma: {self.noise_sigma}",
            f"positive_rate: {self.positive_rate:.4f}",
        ]
        if self.equation is not None:
            lines.append(f"equation: {to_infix_string(self.equation, FEATURE_NAMES, precision=6)}")
            lines.append(f"equation_json: {self.equation.to_json()}")
        for i, cluster in enumerate(self.clusters):
            lines.append(f"cluster_{i}: {json.dumps(cluster.to_dict())}")
        return "\n".join(lines) + "\n"


def _sample_constant(rng: np.random.Generator, constant_range: float) -> float:
    while True:
        c = rng.uniform(-constant_range, constant_range)
        if abs(c) >= MIN_ABS_CONSTANT:
            return float(c)


def sample_equation(
    grammar: GrammarConfig,
    rng: np.random.Generator,
    depth_range: Tuple[int, int] = DEFAULT_DEPTH_RANGE,
    constant_range: float = 3.0,
) -> Equation:
    """
    Draw a random equation from the grammar.

    The summand count is uniform over depth_range; each summand structure is
    uniform over the structures not used yet; every constant is
    Uniform(±constant_range) redrawn while |c| < 0.1.
    """
    lo, hi = depth_range
    if lo < 0 or hi < lo:
        raise ConfigError(f"Invalid depth range {depth_range}")
    if hi > grammar.max_summands:
        raise ConfigError(f"Depth range {depth_range} exceeds the grammar limit {grammar.max_summands}")

    structures = grammar.structures()
    n_summands = int(rng.integers(lo, hi + 1))
    used = set()
    summands = []
    for _ in range(n_summands):
        options = [s for s in structures if s not in used]
        if not options:
            raise GenerationError("No admissible summand structure left")
        structure = options[int(rng.integers(len(options)))]
        used.add(structure)
        kind, features, degree = structure
        constants = tuple(_sample_constant(rng, constant_range) for _ in range(KIND_CONSTANTS[kind]))
        summands.append(Summand(kind, features, constants, degree))
    intercept = _sample_constant(rng, constant_range)
    return canonicalize(Equation(intercept, tuple(summands)))


def _uniform_points(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    lows = np.array([lo for lo, _ in cfg.domain])
    highs = np.array([hi for _, hi in cfg.domain])
    return rng.uniform(lows, highs, size=(cfg.n_points, len(cfg.domain)))


def is_balanced(y: np.ndarray) -> bool:
    rate = float(np.mean(y))
    return MIN_CLASS_BALANCE <= rate <= MAX_CLASS_BALANCE


def gen_boundary_dataset(
    eq: Equation,
    cfg: SynthConfig,
    rng: Optional[np.random.Generator] = None,
    protocol: str = Protocol.WITHIN_NOISE,
) -> SyntheticDataset:
    """
    Label uniform points by eq(x) >= 0, then perturb the coordinates with
    N(0, sigma^2) noise; labels keep their pre-noise assignment.
    """
    if len(cfg.domain) != 2:
        raise ConfigError("Boundary datasets are two-dimensional")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    clean = _uniform_points(cfg, rng)
    values, _ = evaluate_batch(eq, clean)
    y = (values >= 0).astype(float)
    noisy = clean + rng.normal(0.0, cfg.noise_sigma, size=clean.shape) if cfg.noise_sigma > 0 else clean.copy()
    return SyntheticDataset(noisy, y, clean, protocol, cfg.seed, eq, noise_sigma=cfg.noise_sigma)


def _sample_balanced(
    cfg: SynthConfig,
    grammar: GrammarConfig,
    protocol: str,
    accept: Callable[[Equation], bool],
    depth_range: Tuple[int, int],
) -> SyntheticDataset:
    rng = np.random.default_rng(cfg.seed)
    for attempt in range(1, MAX_GENERATION_ATTEMPTS + 1):
        eq = sample_equation(grammar, rng, depth_range, cfg.constant_range)
        if not accept(eq):
            continue
        dataset = gen_boundary_dataset(eq, cfg, rng, protocol)
        if is_balanced(dataset.y):
            logger.debug(f"{protocol} seed {cfg.seed}: accepted equation after {attempt} draw(s)")
            return dataset
    raise GenerationError(
        f"{protocol} seed {cfg.seed}: no usable equation after {MAX_GENERATION_ATTEMPTS} draws"
    )


def gen_within_dataset(
    cfg: SynthConfig, noisy: bool = False, depth_range: Tuple[int, int] = DEFAULT_DEPTH_RANGE
) -> SyntheticDataset:
    """Boundary drawn from the search grammar, optionally with coordinate noise"""
    grammar = GrammarConfig.search(n_features=2, max_summands=depth_range[1])
    if not noisy:
        cfg = cfg.without_noise()
    protocol = Protocol.WITHIN_NOISE if noisy else Protocol.WITHIN
    return _sample_balanced(cfg, grammar, protocol, lambda eq: True, depth_range)


def gen_beyond_dataset(
    cfg: SynthConfig, depth_range: Tuple[int, int] = DEFAULT_DEPTH_RANGE
) -> SyntheticDataset:
    """Noisy boundary drawn from the extended grammar; it must contain a power term"""
    grammar = GrammarConfig.extended(n_features=2, max_summands=depth_range[1])

    def has_power(eq: Equation) -> bool:
        return any(s.kind == SummandKind.POWER for s in eq.summands)

    return _sample_balanced(cfg, grammar, Protocol.BEYOND_NOISE, has_power, depth_range)


def _cluster_sizes(n_points: int, n_clusters: int) -> np.ndarray:
    sizes = np.full(n_clusters, n_points // n_clusters)
    sizes[: n_points % n_clusters] += 1
    return sizes


def _draw_clusters(
    specs: Sequence[ClusterSpec], sizes: np.ndarray, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    points, labels = [], []
    for spec, size in zip(specs, sizes):
        points.append(rng.multivariate_normal(spec.mean, spec.covariance, size=int(size)))
        labels.append(np.full(int(size), float(spec.label)))
    X = np.vstack(points)
    y = np.concatenate(labels)
    order = rng.permutation(X.shape[0])
    return X[order], y[order]


def random_cluster_specs(cfg: SynthConfig, rng: np.random.Generator) -> Tuple[ClusterSpec, ...]:
    """
    Six clusters with uniform means over the domain and covariance
    R diag(s1^2, s2^2) R^T, s ~ Uniform(0.5, 2.5), R a random rotation.
    Two clusters chosen at random are positive.
    """
    lows = np.array([lo for lo, _ in cfg.domain])
    highs = np.array([hi for _, hi in cfg.domain])
    positives = set(rng.choice(N_CLUSTERS, size=N_POSITIVE_CLUSTERS, replace=False).tolist())
    sizes = _cluster_sizes(cfg.n_points, N_CLUSTERS)
    specs = []
    for i in range(N_CLUSTERS):
        mean = rng.uniform(lows, highs)
        scales = rng.uniform(*CLUSTER_SCALE_RANGE, size=2)
        angle = rng.uniform(0.0, np.pi)
        rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        cov = rotation @ np.diag(scales ** 2) @ rotation.T
        cov = (cov + cov.T) / 2.0
        specs.append(ClusterSpec(
            mean=tuple(float(v) for v in mean),
            covariance=tuple(tuple(float(v) for v in row) for row in cov),
            label=int(i in positives),
            weight=float(sizes[i] / cfg.n_points),
        ))
    return tuple(specs)


def gen_gaussian_clusters(cfg: SynthConfig, rng: Optional[np.random.Generator] = None) -> SyntheticDataset:
    """Mixture of six Gaussian clusters, two positive and four negative, equal sizes"""
    if len(cfg.domain) != 2:
        raise ConfigError("Cluster datasets are two-dimensional")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    specs = random_cluster_specs(cfg, rng)
    X, y = _draw_clusters(specs, _cluster_sizes(cfg.n_points, N_CLUSTERS), rng)
    return SyntheticDataset(X, y, X.copy(), Protocol.GAUSSIAN, cfg.seed, clusters=specs)


def gen_xor_clusters(
    cfg: SynthConfig, rng: Optional[np.random.Generator] = None, spread: float = 1.5
) -> SyntheticDataset:
    """
    Four isotropic clusters centred halfway to each domain corner; clusters on
    one diagonal are positive, on the other negative.
    """
    if len(cfg.domain) != 2:
        raise ConfigError("Cluster datasets are two-dimensional")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    centre = np.array([(lo + hi) / 2.0 for lo, hi in cfg.domain])
    half = np.array([(hi - lo) / 4.0 for lo, hi in cfg.domain])
    sizes = _cluster_sizes(cfg.n_points, 4)
    specs = []
    for i, (sx, sy) in enumerate(((1, 1), (-1, -1), (1, -1), (-1, 1))):
        mean = centre + half * np.array([sx, sy])
        specs.append(ClusterSpec(
            mean=tuple(float(v) for v in mean),
            covariance=((spread ** 2, 0.0), (0.0, spread ** 2)),
            label=int(sx * sy > 0),
            weight=float(sizes[i] / cfg.n_points),
        ))
    X, y = _draw_clusters(specs, sizes, rng)
    return SyntheticDataset(X, y, X.copy(), Protocol.XOR, cfg.seed, clusters=tuple(specs))


def generate(protocol: str, cfg: SynthConfig) -> SyntheticDataset:
    """Generate one dataset of the given protocol from cfg.seed"""
    if protocol == Protocol.WITHIN:
        return gen_within_dataset(cfg, noisy=False)
    if protocol == Protocol.WITHIN_NOISE:
        return gen_within_dataset(cfg, noisy=True)
    if protocol == Protocol.BEYOND_NOISE:
        return gen_beyond_dataset(cfg)
    if protocol == Protocol.GAUSSIAN:
        return gen_gaussian_clusters(cfg)
    if protocol == Protocol.XOR:
        return gen_xor_clusters(cfg)
    raise ConfigError(f"Unknown protocol '{protocol}' (choose from {', '.join(Protocol.ALL)})")


def boundary_grid(
    fn: Callable[[np.ndarray], np.ndarray],
    domain: Sequence[Tuple[float, float]],
    resolution: int = DEFAULT_GRID_RESOLUTION,
) -> np.ndarray:
    """Rows (x1, x2, f) on a regular resolution x resolution grid over a 2-D domain"""
    if len(domain) != 2:
        raise ConfigError("Boundary grids are two-dimensional")
    if resolution < 2:
        raise ConfigError(f"Grid resolution must be >= 2, got {resolution}")
    (x_lo, x_hi), (y_lo, y_hi) = domain
    gx, gy = np.meshgrid(np.linspace(x_lo, x_hi, resolution), np.linspace(y_lo, y_hi, resolution))
    points = np.column_stack([gx.ravel(), gy.ravel()])
    return np.column_stack([points, fn(points)])
