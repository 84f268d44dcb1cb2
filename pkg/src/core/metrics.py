"""
Classification metrics: logistic transform, log loss, AUC, thresholds, paired t-test
"""

from typing import NamedTuple, Tuple

import numpy as np
from scipy import stats
from scipy.special import expit

from ..utils.constants import PROB_EPS, SIGMOID_CLAMP
from ..utils.errors import DegenerateTestError, InputError, UndefinedMetricError


def sigmoid(z):
    """Logistic function with the input clamped to ±35"""
    clipped = np.clip(np.asarray(z, dtype=float), -SIGMOID_CLAMP, SIGMOID_CLAMP)
    result = expit(clipped)
    return float(result) if np.ndim(result) == 0 else result


def _paired(a, b) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise InputError(f"Length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise InputError("Empty input")
    return a, b


def log_loss(probs, labels) -> float:
    """Mean negative log-likelihood; probabilities are clipped to [1e-12, 1-1e-12]"""
    p, y = _paired(probs, labels)
    p = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def score_log_loss(values, labels) -> float:
    """Log loss of raw decision values after the logistic transform"""
    return log_loss(sigmoid(np.asarray(values, dtype=float)), labels)


def _class_counts(labels: np.ndarray) -> Tuple[int, int]:
    n_pos = int(np.sum(labels == 1))
    return n_pos, labels.size - n_pos


def auc(scores, labels) -> float:
    """
    Area under the ROC curve via the Mann-Whitney statistic.

    A positive outranking a negative counts 1, a tie counts 0.5.
    """
    s, y = _paired(scores, labels)
    n_pos, n_neg = _class_counts(y)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes to be present")
    ranks = stats.rankdata(s)
    u_statistic = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_statistic / (n_pos * n_neg))


def roc_curve(scores, labels) -> Tuple[np.ndarray, np.ndarray]:
    """ROC points (fpr, tpr), one per distinct score, starting at (0, 0)"""
    s, y = _paired(scores, labels)
    n_pos, n_neg = _class_counts(y)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC curve needs both classes to be present")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    tps = np.cumsum(y == 1)
    fps = np.cumsum(y == 0)
    # keep the last index of every run of equal scores
    last = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    fpr = np.r_[0.0, fps[last] / n_neg]
    tpr = np.r_[0.0, tps[last] / n_pos]
    return fpr, tpr


def roc_auc_trapezoid(scores, labels) -> float:
    """ROC area by the trapezoidal rule"""
    fpr, tpr = roc_curve(scores, labels)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def best_threshold(scores, labels) -> Tuple[float, float]:
    """
    Threshold maximizing the accuracy of the rule 'score >= t -> positive'.

    Candidates are -inf, the midpoints between adjacent distinct scores and
    +inf. Among equally accurate thresholds the lowest wins.

    Returns:
        (threshold, accuracy)
    """
    s, y = _paired(scores, labels)
    distinct, inverse = np.unique(s, return_inverse=True)
    pos_counts = np.bincount(inverse, weights=(y == 1).astype(float), minlength=distinct.size)
    neg_counts = np.bincount(inverse, weights=(y != 1).astype(float), minlength=distinct.size)
    # candidate j predicts positive for every distinct value with index >= j
    true_pos = np.r_[np.cumsum(pos_counts[::-1])[::-1], 0.0]
    true_neg = np.r_[0.0, np.cumsum(neg_counts)]
    accuracy = (true_pos + true_neg) / s.size
    j = int(np.argmax(accuracy))
    if j == 0:
        threshold = float("-inf")
    elif j == distinct.size:
        threshold = float("inf")
    else:
        threshold = float((distinct[j - 1] + distinct[j]) / 2.0)
    return threshold, float(accuracy[j])


def accuracy_at(scores, labels, threshold: float) -> float:
    s, y = _paired(scores, labels)
    return float(np.mean((s >= threshold).astype(float) == y))


class TTestResult(NamedTuple):
    t: float
    df: int
    p_two_sided: float


def paired_t_test(a, b) -> TTestResult:
    """Two-sided paired Student t-test on a - b"""
    a, b = _paired(a, b)
    if a.size < 2:
        raise DegenerateTestError("Paired t-test needs at least two pairs")
    d = a - b
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        raise DegenerateTestError("Differences have zero variance")
    n = d.size
    t_stat = float(np.mean(d) / (sd / np.sqrt(n)))
    df = n - 1
    p = float(min(1.0, 2.0 * stats.t.sf(abs(t_stat), df)))
    return TTestResult(t_stat, df, p)


def one_sided_p(result: TTestResult, expected_sign: int = 1) -> float:
    """One-sided p for the hypothesis that the mean difference has expected_sign"""
    half = result.p_two_sided / 2.0
    if result.t == 0.0:
        return 0.5
    return half if np.sign(result.t) == np.sign(expected_sign) else 1.0 - half
