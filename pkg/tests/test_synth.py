"""
Tests for random equations and synthetic dataset protocols
"""

from collections import Counter

import numpy as np
import pytest
from scipy import stats

from src.core.metrics import auc
from src.core.synth import (
    boundary_grid,
    gen_beyond_dataset,
    gen_boundary_dataset,
    gen_gaussian_clusters,
    gen_within_dataset,
    gen_xor_clusters,
    generate,
    is_balanced,
    sample_equation,
)
from src.models.config import SynthConfig
from src.models.equation import Equation, GrammarConfig
from src.utils.constants import Protocol, SummandKind
from src.utils.errors import ConfigError


class TestSampleEquation:
    def test_depth_zero_is_constant(self, rng):
        eq = sample_equation(GrammarConfig.search(2, 3), rng, (0, 0))
        assert eq.depth == 0
        assert abs(eq.intercept) >= 0.1

    def test_structures_uniform(self, rng):
        grammar = GrammarConfig.search(2, 1)
        counts = Counter(
            sample_equation(grammar, rng, (1, 1)).summands[0].structure for _ in range(7000)
        )
        assert len(counts) == 7
        _, p = stats.chisquare(list(counts.values()))
        assert p > 0.01

    def test_constants_bounded_away_from_zero(self, rng):
        grammar = GrammarConfig.search(2, 3)
        for _ in range(200):
            eq = sample_equation(grammar, rng, (1, 3))
            assert np.all(np.abs(eq.constants) >= 0.1)
            assert np.all(np.abs(eq.constants) <= 3.0)

    def test_no_repeated_structure(self, rng):
        grammar = GrammarConfig.search(2, 3)
        for _ in range(200):
            eq = sample_equation(grammar, rng, (3, 3))
            assert len({s.structure for s in eq.summands}) == 3

    def test_extended_grammar_yields_powers(self, rng):
        grammar = GrammarConfig.extended(2, 3)
        kinds = {s.kind for _ in range(200) for s in sample_equation(grammar, rng, (1, 3)).summands}
        assert SummandKind.POWER in kinds

    def test_depth_beyond_grammar(self, rng):
        with pytest.raises(ConfigError):
            sample_equation(GrammarConfig.search(2, 2), rng, (1, 3))


class TestBoundaryDatasets:
    def test_noise_free_boundary_is_perfect(self):
        dataset = gen_within_dataset(SynthConfig(n_points=500, seed=4))
        assert dataset.noise_sigma == 0.0
        assert np.array_equal(dataset.X, dataset.clean)
        assert auc(dataset.original_scores(), dataset.y) == 1.0

    def test_noise_blurs_boundary(self):
        dataset = gen_within_dataset(SynthConfig(n_points=2000, seed=4), noisy=True)
        assert dataset.protocol == Protocol.WITHIN_NOISE
        assert not np.array_equal(dataset.X, dataset.clean)
        assert auc(dataset.original_scores(noisy=True), dataset.y) < 1.0
        assert auc(dataset.original_scores(noisy=False), dataset.y) == 1.0

    def test_labels_follow_clean_points(self):
        eq = Equation(0.0)
        dataset = gen_boundary_dataset(eq, SynthConfig(n_points=100, seed=1))
        assert np.all(dataset.y == 1.0)

    def test_labels_from_sign(self, rng):
        eq = sample_equation(GrammarConfig.search(2, 3), rng, (1, 3))
        dataset = gen_boundary_dataset(eq, SynthConfig(n_points=300, seed=2, noise_sigma=1.0))
        values = dataset.original_scores(noisy=False)
        assert np.array_equal(dataset.y, (values >= 0).astype(float))

    def test_points_inside_domain_before_noise(self):
        dataset = gen_within_dataset(SynthConfig(n_points=400, seed=6))
        assert np.all(dataset.clean >= -10.0) and np.all(dataset.clean <= 10.0)

    def test_beyond_contains_power(self):
        dataset = gen_beyond_dataset(SynthConfig(n_points=400, seed=8))
        assert any(s.kind == SummandKind.POWER for s in dataset.equation.summands)
        assert np.array_equal(dataset.y, (dataset.original_scores(noisy=False) >= 0).astype(float))

    @pytest.mark.parametrize("protocol", [Protocol.WITHIN, Protocol.WITHIN_NOISE, Protocol.BEYOND_NOISE])
    def test_balanced(self, protocol):
        for seed in range(5):
            assert is_balanced(generate(protocol, SynthConfig(n_points=300, seed=seed)).y)


class TestClusters:
    def test_gaussian_composition(self):
        dataset = gen_gaussian_clusters(SynthConfig(n_points=600, seed=3))
        assert len(dataset.clusters) == 6
        assert sum(c.label for c in dataset.clusters) == 2
        assert dataset.positive_rate == pytest.approx(1 / 3)
        assert dataset.equation is None

    def test_covariances_positive_definite(self):
        dataset = gen_gaussian_clusters(SynthConfig(n_points=600, seed=5))
        for cluster in dataset.clusters:
            cov = np.array(cluster.covariance)
            assert np.allclose(cov, cov.T)
            assert np.all(np.linalg.eigvalsh(cov) > 0)

    def test_xor_labels_by_diagonal(self):
        dataset = gen_xor_clusters(SynthConfig(n_points=400, seed=2))
        for cluster in dataset.clusters:
            mx, my = cluster.mean
            assert cluster.label == int(mx * my > 0)
        assert dataset.positive_rate == pytest.approx(0.5)

    def test_deterministic(self):
        cfg = SynthConfig(n_points=300, seed=11)
        for protocol in Protocol.ALL:
            a, b = generate(protocol, cfg), generate(protocol, cfg)
            assert np.array_equal(a.X, b.X)
            assert np.array_equal(a.y, b.y)

    def test_seed_changes_data(self):
        a = generate(Protocol.GAUSSIAN, SynthConfig(n_points=300, seed=1))
        b = generate(Protocol.GAUSSIAN, SynthConfig(n_points=300, seed=2))
        assert not np.array_equal(a.X, b.X)


class TestOutputs:
    def test_grid_shape(self):
        grid = boundary_grid(lambda P: P[:, 0] + P[:, 1], ((-1.0, 1.0), (0.0, 2.0)), resolution=5)
        assert grid.shape == (25, 3)
        assert grid[0, 0] == -1.0 and grid[-1, 1] == 2.0
        assert np.allclose(grid[:, 2], grid[:, 0] + grid[:, 1])

    def test_grid_resolution(self):
        with pytest.raises(ConfigError):
            boundary_grid(lambda P: P[:, 0], ((0.0, 1.0), (0.0, 1.0)), resolution=1)

    def test_sidecar_lists_clusters(self):
        text = generate(Protocol.GAUSSIAN, SynthConfig(n_points=60, seed=1)).sidecar_text()
        assert "cluster_5:" in text
        assert "equation" not in text

    def test_sidecar_lists_equation(self):
        dataset = generate(Protocol.WITHIN, SynthConfig(n_points=200, seed=1))
        text = dataset.sidecar_text()
        assert "equation: " in text
        json_line = next(line for line in text.splitlines() if line.startswith("equation_json: "))
        assert Equation.from_json(json_line[len("equation_json: "):]) == dataset.equation

    def test_unknown_protocol(self):
        with pytest.raises(ConfigError):
            generate("spiral", SynthConfig())
