"""
Helper utility functions
"""

import hashlib
import json
from typing import Any, Dict, Sequence, Tuple

import numpy as np


def format_constant(value: float, precision: int) -> str:
    """Format a constant for display, never rendering negative zero"""
    text = f"{value:.{precision}f}"
    if text.startswith("-") and float(text) == 0.0:
        text = text[1:]
    return text


def format_time(seconds: float) -> str:
    """Format seconds to human readable time string"""
    if seconds < 60:
        return f"{seconds:.1f}s"
    seconds = int(seconds)
    if seconds < 3600:
        minutes = seconds // 60
        secs = seconds % 60
        return f"{minutes}:{secs:02d}"
    hours = seconds // 3600
    minutes = (seconds % 3600) // 60
    secs = seconds % 60
    return f"{hours}:{minutes:02d}:{secs:02d}"


def mean_sd(values: Sequence[float]) -> Tuple[float, float]:
    """Mean and sample standard deviation (n-1 denominator, 0 for a single value)"""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return float("nan"), float("nan")
    sd = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return float(np.mean(arr)), sd


def format_mean_sd(values: Sequence[float], digits: int = 3) -> str:
    """Render 'mean (±sd)' the way result tables print it"""
    mean, sd = mean_sd(values)
    return f"{mean:.{digits}f} (±{sd:.{digits}f})"


def canonical_json(data: Any) -> str:
    """Deterministic JSON text (sorted keys, no whitespace)"""
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_digest(configs: Dict[str, Any]) -> str:
    """SHA-256 digest of a config mapping"""
    return hashlib.sha256(canonical_json(configs).encode("utf-8")).hexdigest()


def derive_seed(seed: int, *parts: Any) -> int:
    """
    Derive a 64-bit seed from a base seed and arbitrary labels.

    The result depends only on the inputs, so work items can be seeded
    independently of the order in which they are scheduled.
    """
    payload = canonical_json([int(seed), [str(p) for p in parts]]).encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "little")
