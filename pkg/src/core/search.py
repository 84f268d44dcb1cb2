"""
Beam search over equation structures
"""

import asyncio
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .expression import evaluate_batch, refinements
from .metrics import score_log_loss
from .optimizer import FitResult, optimize_constants
from ..models.config import OptimizerConfig, SearchConfig
from ..models.dataset import EncodedDataset
from ..models.equation import Equation, GrammarConfig
from ..utils.errors import OptimizerDivergedError, UnlearnableDataError
from ..utils.helpers import derive_seed


logger = logging.getLogger(__name__)

# (depth, candidates_evaluated, best_loss)
ProgressCallback = Callable[[int, int, float], None]


@dataclass(frozen=True)
class ScoredCandidate:
    """An equation with optimized constants and its training log loss"""
    equation: Equation
    train_loss: float
    depth: int
    fit: Optional[FitResult] = field(default=None, compare=False)

    @property
    def rank_key(self) -> Tuple[float, int, Tuple]:
        """Lower loss first, then fewer constants, then canonical summand order"""
        return (
            self.train_loss,
            self.equation.n_constants,
            tuple(s.sort_key for s in self.equation.summands),
        )


def score(eq: Equation, data: EncodedDataset) -> float:
    """Mean log loss of sigmoid(eq(x)) against the labels"""
    values, _ = evaluate_batch(eq, data.X)
    return score_log_loss(values, data.y)


def structure_seed(seed: int, eq: Equation) -> int:
    """Seed for a structure; depends only on the base seed and the structure"""
    return derive_seed(seed, eq.structure_key)


def optimize_structure(
    eq: Equation,
    data: EncodedDataset,
    opt: OptimizerConfig,
    restarts: int,
    seed: int,
) -> ScoredCandidate:
    """Fit eq from `restarts` random initializations and keep the best"""
    base = structure_seed(seed, eq)
    best: Optional[FitResult] = None
    for restart in range(restarts):
        rng = np.random.default_rng([base, restart])
        fit = optimize_constants(eq, data, opt, rng)
        if best is None or fit.final_loss < best.final_loss:
            best = fit
    return ScoredCandidate(best.equation, best.final_loss, eq.depth, best)


class BeamSearch:
    """
    Level-wise beam search.

    Level 0 is the constant-only equation. Every level refines each beam
    member by one summand, fits the new structures, and keeps the w best of
    the old beam plus the new candidates. The best candidate seen at any
    depth is returned.
    """

    def __init__(
        self,
        grammar: GrammarConfig,
        cfg: SearchConfig,
        opt: OptimizerConfig,
        progress_callback: Optional[ProgressCallback] = None,
    ):
        self.grammar = grammar
        self.cfg = cfg
        self.opt = opt
        self.progress_callback = progress_callback
        self.candidates_evaluated = 0
        self.failed_candidates = 0
        self._lock = threading.Lock()

    def run(self, data: EncodedDataset) -> ScoredCandidate:
        if data.n_samples == 0 or not data.has_both_classes:
            raise UnlearnableDataError("Beam search needs both classes in the training data")

        max_depth = min(self.cfg.max_depth, self.grammar.max_summands)
        self.failed_candidates = 0
        root = self._optimize_one(Equation(0.0), data)
        if root is None:
            raise OptimizerDivergedError("Could not fit the constant-only equation")
        self.candidates_evaluated = 1
        beam: List[ScoredCandidate] = [root]
        best = root
        seen = {root.equation.structure_key}
        self._notify_progress(0, best)

        for depth in range(1, max_depth + 1):
            children: List[Equation] = []
            for member in beam:
                for child in refinements(member.equation, self.grammar):
                    key = child.structure_key
                    if key not in seen:
                        seen.add(key)
                        children.append(child)
            if not children:
                logger.debug(f"No new structures at depth {depth}")
                break

            scored = [c for c in self._optimize_all(children, data) if c is not None]
            self.candidates_evaluated += len(children)

            pool = sorted(beam + scored, key=lambda c: c.rank_key)
            beam = pool[:self.cfg.beam_width]
            if beam[0].rank_key < best.rank_key:
                best = beam[0]
            self._notify_progress(depth, best)

        if self.failed_candidates:
            logger.warning(
                f"{self.failed_candidates} of {self.candidates_evaluated} candidates dropped after SGD diverged"
            )
        logger.debug(
            f"Beam search done: {self.candidates_evaluated} candidates "
            f"({self.failed_candidates} failed), best {best.equation.structure_text()} "
            f"loss {best.train_loss:.6f}"
        )
        return best

    def _optimize_one(self, eq: Equation, data: EncodedDataset) -> Optional[ScoredCandidate]:
        try:
            return optimize_structure(eq, data, self.opt, self.cfg.restarts_per_candidate, self.cfg.seed)
        except OptimizerDivergedError as e:
            with self._lock:
                self.failed_candidates += 1
            logger.warning(f"Dropping candidate {eq.structure_text()}: {e}")
            return None

    def _optimize_all(self, children: List[Equation], data: EncodedDataset) -> List[Optional[ScoredCandidate]]:
        """Fit every child; results come back in enumeration order"""
        if self.cfg.workers == 1 or len(children) == 1:
            return [self._optimize_one(child, data) for child in children]
        return asyncio.run(self._optimize_parallel(children, data))

    async def _optimize_parallel(self, children: List[Equation], data: EncodedDataset):
        loop = asyncio.get_running_loop()
        with ThreadPoolExecutor(max_workers=self.cfg.workers) as executor:
            tasks = [
                loop.run_in_executor(executor, self._optimize_one, child, data)
                for child in children
            ]
            return await asyncio.gather(*tasks)

    def _notify_progress(self, depth: int, best: ScoredCandidate):
        if self.progress_callback:
            self.progress_callback(depth, self.candidates_evaluated, best.train_loss)


def beam_search(
    data: EncodedDataset,
    grammar: GrammarConfig,
    cfg: SearchConfig,
    opt: OptimizerConfig,
    progress_callback: Optional[ProgressCallback] = None,
) -> ScoredCandidate:
    """Discover the equation with the lowest training log loss"""
    return BeamSearch(grammar, cfg, opt, progress_callback).run(data)
