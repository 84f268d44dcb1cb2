"""
Constant fitting for a fixed equation structure: SGD or budgeted hill climbing
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from .expression import CompiledEquation, check_inputs
from ..models.config import OptimizerConfig
from ..models.dataset import EncodedDataset
from ..models.equation import Equation
from ..utils.constants import PROB_EPS, SGD_MAX_DIVERGENCE_RESTARTS, SIGMOID_CLAMP, OptimizerName
from ..utils.errors import OptimizerDivergedError


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitResult:
    """Outcome of fitting the constants of one structure"""
    equation: Equation
    final_loss: float
    evaluations_used: int
    optimizer: str
    budget_exhausted: bool = False
    lr_halvings: int = 0


def _probabilities(values: np.ndarray) -> np.ndarray:
    return expit(np.clip(values, -SIGMOID_CLAMP, SIGMOID_CLAMP))


def _loss_from_values(values: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(_probabilities(values), PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


class _Objective:
    """Mean log loss of a compiled equation on fixed data"""

    def __init__(self, eq: Equation, data: EncodedDataset):
        self.X = check_inputs(eq, data.X)
        self.y = np.asarray(data.y, dtype=float)
        self.compiled = CompiledEquation(eq)
        self.evaluations = 0

    def loss(self, theta: np.ndarray) -> float:
        self.evaluations += 1
        values, _ = self.compiled.values(theta, self.X)
        return _loss_from_values(values, self.y)


def initial_constants(n_constants: int, cfg: OptimizerConfig, rng: np.random.Generator) -> np.ndarray:
    """Uniform(-init_range, init_range) starting point"""
    return rng.uniform(-cfg.init_range, cfg.init_range, size=n_constants)


def optimize_constants(
    eq: Equation,
    data: EncodedDataset,
    cfg: OptimizerConfig,
    rng: Optional[np.random.Generator] = None,
) -> FitResult:
    """
    Fit the constants of eq to minimize mean log loss on data.

    Equations with an exp summand go to the hill climber, everything else to
    SGD (unless cfg.force_sgd is set).
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if eq.has_exp and not cfg.force_sgd:
        return hill_climb(eq, data, cfg, rng)
    return sgd_fit(eq, data, cfg, rng)


def _sgd_run(
    objective: _Objective,
    theta0: np.ndarray,
    learning_rate: float,
    cfg: OptimizerConfig,
    rng: np.random.Generator,
):
    """One SGD pass; returns (best theta, best loss) or None when the loss diverges"""
    X, y, compiled = objective.X, objective.y, objective.compiled
    n = X.shape[0]
    batch = cfg.sgd.batch_size
    design = compiled.jacobian(theta0, X) if compiled.linear_in_constants else None

    theta = theta0.copy()
    best_theta, best_loss = theta.copy(), objective.loss(theta)
    for epoch in range(cfg.sgd.epochs):
        step = cfg.sgd.epoch_learning_rate(learning_rate, epoch)
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            if design is not None:
                jac = design[idx]
                values = jac @ theta
            else:
                jac = compiled.jacobian(theta, X[idx])
                values, _ = compiled.values(theta, X[idx])
            residual = _probabilities(values) - y[idx]
            with np.errstate(over="ignore", invalid="ignore"):
                theta = theta - step * (residual @ jac) / idx.size
        if not np.all(np.isfinite(theta)):
            return None
        loss = objective.loss(theta)
        if not np.isfinite(loss):
            return None
        if loss < best_loss:
            best_theta, best_loss = theta.copy(), loss
    return best_theta, best_loss


def sgd_fit(eq: Equation, data: EncodedDataset, cfg: OptimizerConfig, rng: np.random.Generator) -> FitResult:
    """
    Minibatch SGD on the log loss with analytic gradients.

    Data are reshuffled every epoch and the step size decays linearly over
    the epochs (SgdConfig.epoch_learning_rate). The constants with the lowest full-data
    loss seen at any epoch end (or at the start) are returned. If the loss
    becomes non-finite the learning rate is halved and the run restarted from
    the same initial point, up to SGD_MAX_DIVERGENCE_RESTARTS times.
    """
    objective = _Objective(eq, data)
    theta0 = initial_constants(eq.n_constants, cfg, rng)
    learning_rate = cfg.sgd.learning_rate

    for attempt in range(SGD_MAX_DIVERGENCE_RESTARTS + 1):
        outcome = _sgd_run(objective, theta0, learning_rate, cfg, rng)
        if outcome is not None:
            theta, loss = outcome
            return FitResult(
                equation=eq.with_constants(theta),
                final_loss=loss,
                evaluations_used=objective.evaluations,
                optimizer=OptimizerName.SGD,
                lr_halvings=attempt,
            )
        learning_rate /= 2.0
        logger.warning(
            f"SGD diverged on {eq.structure_text()}; retrying with learning rate {learning_rate:g}"
        )
    raise OptimizerDivergedError(
        f"SGD diverged {SGD_MAX_DIVERGENCE_RESTARTS + 1} times on {eq.structure_text()}"
    )


def hill_climb(eq: Equation, data: EncodedDataset, cfg: OptimizerConfig, rng: np.random.Generator) -> FitResult:
    """
    Budgeted multi-start steepest-descent hill climbing.

    A fraction f of the budget n samples random constant vectors; the best k
    of them seed coordinate searches that try ±α on each of the p constants
    and move to the best strict improvement. Each start may take
    ⌊n(1-f) / (2kp)⌋ iterations and stops early at a local optimum.
    """
    hill = cfg.hill
    objective = _Objective(eq, data)
    p = eq.n_constants

    samples = rng.uniform(-cfg.init_range, cfg.init_range, size=(hill.n_random, p))
    losses = np.array([objective.loss(s) for s in samples])
    starts = np.argsort(losses, kind="stable")[:hill.top_k]
    best_theta, best_loss = samples[starts[0]].copy(), float(losses[starts[0]])

    iterations = hill.iterations_per_start(p)
    if iterations == 0:
        logger.warning(
            f"Hill-climb budget {hill.budget} too small for {p} constants; using best random sample"
        )
        return FitResult(
            equation=eq.with_constants(best_theta),
            final_loss=best_loss,
            evaluations_used=objective.evaluations,
            optimizer=OptimizerName.HILL,
            budget_exhausted=True,
        )

    steps = np.vstack([np.eye(p) * hill.step_size, -np.eye(p) * hill.step_size])
    for start in starts:
        theta, current = samples[start].copy(), float(losses[start])
        for _ in range(iterations):
            neighbours = theta + steps
            neighbour_losses = [objective.loss(t) for t in neighbours]
            j = int(np.argmin(neighbour_losses))
            if not neighbour_losses[j] < current:
                break
            theta, current = neighbours[j], neighbour_losses[j]
        if current < best_loss:
            best_theta, best_loss = theta.copy(), current

    return FitResult(
        equation=eq.with_constants(best_theta),
        final_loss=best_loss,
        evaluations_used=objective.evaluations,
        optimizer=OptimizerName.HILL,
    )
