"""
Shared fixtures
"""

import numpy as np
import pytest

from src.models.config import HillConfig, OptimizerConfig, RunConfig, SearchConfig, SgdConfig
from src.models.dataset import EncodedDataset, NormParams


def encoded(X, y, names=None) -> EncodedDataset:
    """EncodedDataset over already-normalized features"""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    m = X.shape[1]
    names = names or tuple(f"x{i}" for i in range(m))
    return EncodedDataset(X, y, names, NormParams((0.0,) * m, (1.0,) * m))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def make_dataset():
    return encoded


@pytest.fixture
def fast_optimizer():
    return OptimizerConfig(
        sgd=SgdConfig(learning_rate=10.0, epochs=60, batch_size=32),
        hill=HillConfig(budget=300, random_fraction=0.2, top_k=3, step_size=0.05),
    )


@pytest.fixture
def fast_config(fast_optimizer):
    """Small search for tests that only need a plausible model quickly"""
    return RunConfig(
        search=SearchConfig(beam_width=3, max_depth=2, restarts_per_candidate=1, seed=7),
        optimizer=fast_optimizer,
    )


@pytest.fixture
def write_csv(tmp_path):
    """Write CSV text to a file under tmp_path and return its path"""
    def _write(text: str, name: str = "data.csv") -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write


@pytest.fixture
def separable_csv(write_csv):
    """Two numeric features and a label decided by a + b > 1"""
    rng = np.random.default_rng(3)
    X = rng.uniform(0.0, 1.0, size=(120, 2))
    lines = ["a,b,class"]
    for a, b in X:
        lines.append(f"{a:.6f},{b:.6f},{'yes' if a + b > 1.0 else 'no'}")
    return write_csv("\n".join(lines) + "\n", "separable.csv")
