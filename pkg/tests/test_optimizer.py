"""
Tests for constant fitting
"""

import math

import numpy as np
import pytest

from src.core.metrics import best_threshold
from src.core.expression import evaluate_batch
from src.core.optimizer import hill_climb, initial_constants, optimize_constants, sgd_fit
from src.core.search import score
from src.models.config import HillConfig, OptimizerConfig, SgdConfig
from src.models.equation import Equation, Summand
from src.utils.constants import SGD_MAX_DIVERGENCE_RESTARTS, OptimizerName
from src.utils.errors import ConfigError, OptimizerDivergedError


LINEAR = Equation(0.0, (Summand.linear(0.0, 0),))
EXP = Equation(0.0, (Summand.exp(0.0, 0.0, 0),))


def binary_feature_data(make_dataset, n=200, flip=0.2):
    """x in {0, 1}; y equals x except for a `flip` share of each group"""
    x = np.r_[np.zeros(n // 2), np.ones(n // 2)]
    y = x.copy()
    flips = int(flip * n / 2)
    y[:flips] = 1.0
    y[n // 2:n // 2 + flips] = 0.0
    return make_dataset(x, y)


class TestHillConfig:
    def test_iterations_per_start(self):
        cfg = HillConfig(budget=1000, random_fraction=0.2, top_k=5)
        assert cfg.iterations_per_start(2) == 40

    def test_random_phase_must_cover_top_k(self):
        with pytest.raises(ConfigError):
            HillConfig(budget=10, random_fraction=0.2, top_k=5)

    def test_random_phase_rounds_down_exactly(self):
        assert HillConfig(budget=100, random_fraction=0.29, top_k=1).n_random == 29
        assert HillConfig(budget=1000, random_fraction=0.07, top_k=1).n_random == 70

    @pytest.mark.parametrize("fraction", [0.0, 1.0])
    def test_fraction_bounds(self, fraction):
        with pytest.raises(ConfigError):
            HillConfig(random_fraction=fraction)


class TestDispatch:
    def test_exp_goes_to_hill_climber(self, make_dataset, fast_optimizer):
        data = make_dataset(np.linspace(0, 1, 20), [0] * 10 + [1] * 10)
        assert optimize_constants(EXP, data, fast_optimizer).optimizer == OptimizerName.HILL

    def test_exp_free_goes_to_sgd(self, make_dataset, fast_optimizer):
        data = make_dataset(np.linspace(0, 1, 20), [0] * 10 + [1] * 10)
        assert optimize_constants(LINEAR, data, fast_optimizer).optimizer == OptimizerName.SGD

    def test_force_sgd(self, make_dataset, fast_optimizer):
        data = make_dataset(np.linspace(0, 1, 20), [0] * 10 + [1] * 10)
        cfg = OptimizerConfig(sgd=fast_optimizer.sgd, hill=fast_optimizer.hill, force_sgd=True)
        assert optimize_constants(EXP, data, cfg).optimizer == OptimizerName.SGD


class TestConstantModel:
    def test_balanced_labels(self, make_dataset):
        data = make_dataset(np.zeros(100), [0, 1] * 50)
        cfg = OptimizerConfig(sgd=SgdConfig(learning_rate=1.0, epochs=300, batch_size=100))
        fit = optimize_constants(Equation(0.0), data, cfg, np.random.default_rng(1))
        assert abs(fit.equation.intercept) < 0.05
        assert fit.final_loss == pytest.approx(math.log(2), abs=1e-3)

    def test_sgd_recovers_log_odds(self, make_dataset):
        data = make_dataset(np.zeros(100), [1] * 90 + [0] * 10)
        cfg = OptimizerConfig(sgd=SgdConfig(learning_rate=1.0, epochs=300, batch_size=100))
        fit = sgd_fit(Equation(0.0), data, cfg, np.random.default_rng(1))
        assert fit.equation.intercept == pytest.approx(math.log(9), abs=0.05)

    def test_hill_climb_within_one_step(self, make_dataset):
        data = make_dataset(np.zeros(100), [1] * 90 + [0] * 10)
        cfg = OptimizerConfig(hill=HillConfig(budget=2000, step_size=0.05))
        fit = hill_climb(Equation(0.0), data, cfg, np.random.default_rng(2))
        assert abs(fit.equation.intercept - math.log(9)) < 0.05


class TestSgd:
    def test_separates_threshold_data(self, make_dataset):
        x = np.linspace(0, 1, 101)
        data = make_dataset(x, (x > 0.5).astype(float))
        fit = sgd_fit(LINEAR, data, OptimizerConfig(), np.random.default_rng(3))
        values, _ = evaluate_batch(fit.equation, data.X)
        _, accuracy = best_threshold(values, data.y)
        assert accuracy == 1.0

    def test_zero_gradient_constant_unchanged(self, make_dataset, fast_optimizer):
        data = make_dataset(np.zeros(40), [0, 1] * 20)
        start = initial_constants(2, fast_optimizer, np.random.default_rng(5))
        fit = sgd_fit(LINEAR, data, fast_optimizer, np.random.default_rng(5))
        assert fit.equation.summands[0].constants[0] == start[1]

    def test_noisy_logistic_fit_near_optimum(self, make_dataset):
        data = binary_feature_data(make_dataset)
        optimum = -(0.8 * math.log(0.8) + 0.2 * math.log(0.2))
        fit = sgd_fit(LINEAR, data, OptimizerConfig(), np.random.default_rng(4))
        assert fit.final_loss <= optimum * 1.05

    def test_matches_full_batch_gradient_descent(self, rng, make_dataset):
        eq = Equation(0.0, (Summand.linear(0.0, 0), Summand.linear(0.0, 1)))
        for _ in range(10):
            X = rng.uniform(0, 1, size=(200, 2))
            true_logit = rng.uniform(-1, 1) + (X - 0.5) @ rng.uniform(-3, 3, size=2)
            y = (rng.uniform(size=200) < 1 / (1 + np.exp(-true_logit))).astype(float)
            if y.min() == y.max():
                continue
            data = make_dataset(X, y)

            design = np.column_stack([np.ones(200), X])
            theta = np.zeros(3)
            for _ in range(20000):
                p = 1 / (1 + np.exp(-(design @ theta)))
                theta -= 1.0 * design.T @ (p - y) / 200
            reference = score(eq.with_constants(theta), data)

            fit = sgd_fit(eq, data, OptimizerConfig(), np.random.default_rng(6))
            assert fit.final_loss <= reference * 1.02

    def test_never_worse_than_start(self, make_dataset, fast_optimizer):
        data = binary_feature_data(make_dataset, n=60)
        start = initial_constants(2, fast_optimizer, np.random.default_rng(8))
        start_loss = score(LINEAR.with_constants(start), data)
        fit = sgd_fit(LINEAR, data, fast_optimizer, np.random.default_rng(8))
        assert fit.final_loss <= start_loss

    def test_deterministic(self, make_dataset, fast_optimizer):
        data = binary_feature_data(make_dataset, n=60)
        a = sgd_fit(LINEAR, data, fast_optimizer, np.random.default_rng(9))
        b = sgd_fit(LINEAR, data, fast_optimizer, np.random.default_rng(9))
        assert a.equation == b.equation


class TestSgdConfig:
    def test_step_size_decays_linearly(self):
        cfg = SgdConfig(learning_rate=2.0, epochs=5, final_lr_fraction=0.1)
        steps = [cfg.epoch_learning_rate(2.0, e) for e in range(5)]
        assert steps == pytest.approx([2.0, 1.55, 1.1, 0.65, 0.2])

    def test_single_epoch_keeps_rate(self):
        assert SgdConfig(epochs=1).epoch_learning_rate(3.0, 0) == 3.0

    @pytest.mark.parametrize("fraction", [0.0, 1.5])
    def test_final_fraction_bounds(self, fraction):
        with pytest.raises(ConfigError):
            SgdConfig(final_lr_fraction=fraction)


class TestDivergence:
    def test_exp_with_huge_step_gives_up(self, make_dataset, caplog):
        x = np.linspace(-1, 1, 40)
        data = make_dataset(x, (x > 0.0).astype(float))
        cfg = OptimizerConfig(sgd=SgdConfig(learning_rate=1e300, epochs=3, batch_size=8), force_sgd=True)
        with pytest.raises(OptimizerDivergedError):
            sgd_fit(EXP, data, cfg, np.random.default_rng(0))
        retries = [r for r in caplog.records if "SGD diverged" in r.getMessage()]
        assert len(retries) == SGD_MAX_DIVERGENCE_RESTARTS + 1

    def test_bounded_model_never_halves(self, make_dataset):
        x = np.linspace(0, 1, 40)
        data = make_dataset(x, (x > 0.5).astype(float))
        fit = sgd_fit(LINEAR, data, OptimizerConfig(), np.random.default_rng(0))
        assert fit.lr_halvings == 0


class TestHillClimb:
    def test_evaluation_budget(self, make_dataset):
        data = make_dataset(np.linspace(0, 1, 50), [0] * 25 + [1] * 25)
        cfg = OptimizerConfig(hill=HillConfig(budget=1000, random_fraction=0.2, top_k=5))
        fit = hill_climb(EXP, data, cfg, np.random.default_rng(1))
        p = EXP.n_constants
        assert fit.evaluations_used <= 1000 + 2 * p * 5
        assert not fit.budget_exhausted

    def test_budget_too_small(self, make_dataset):
        data = make_dataset(np.linspace(0, 1, 50), [0] * 25 + [1] * 25)
        cfg = OptimizerConfig(hill=HillConfig(budget=10, random_fraction=0.5, top_k=1))
        fit = hill_climb(EXP, data, cfg, np.random.default_rng(1))
        assert fit.budget_exhausted
        assert fit.evaluations_used == 5

    def test_returns_best_seen(self, make_dataset):
        x = np.linspace(0, 1, 50)
        data = make_dataset(x, (x > 0.3).astype(float))
        cfg = OptimizerConfig(hill=HillConfig(budget=500, random_fraction=0.2, top_k=2))
        rng = np.random.default_rng(11)
        samples = np.random.default_rng(11).uniform(-1, 1, size=(100, EXP.n_constants))
        best_sample = min(score(EXP.with_constants(s), data) for s in samples)
        fit = hill_climb(EXP, data, cfg, rng)
        assert fit.final_loss <= best_sample
        assert fit.final_loss == pytest.approx(score(fit.equation, data))

    def test_deterministic(self, make_dataset, fast_optimizer):
        x = np.linspace(0, 1, 50)
        data = make_dataset(x, (x > 0.3).astype(float))
        a = hill_climb(EXP, data, fast_optimizer, np.random.default_rng(3))
        b = hill_climb(EXP, data, fast_optimizer, np.random.default_rng(3))
        assert a.equation == b.equation
