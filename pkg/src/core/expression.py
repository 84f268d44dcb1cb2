"""
Evaluation, differentiation, canonicalization and refinement of equations
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np

from ..models.equation import Equation, GrammarConfig, Summand
from ..utils.constants import DEFAULT_PRECISION, EXP_ARG_CLAMP, KIND_CONSTANTS, SummandKind
from ..utils.errors import (
    CanonicalizationError,
    DegenerateFeatureError,
    InputError,
    StructuralError,
)
from ..utils.helpers import format_constant


logger = logging.getLogger(__name__)

MAX_FINITE = np.finfo(float).max


def _as_matrix(X) -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise InputError(f"Expected a feature vector or matrix, got shape {arr.shape}")
    return arr


def check_inputs(eq: Equation, X) -> np.ndarray:
    """Validate that X covers every feature of eq and holds finite values"""
    arr = _as_matrix(X)
    used = eq.used_features
    if used and used[-1] >= arr.shape[1]:
        raise StructuralError(
            f"Equation uses feature {used[-1]} but input has only {arr.shape[1]} feature(s)"
        )
    if not np.all(np.isfinite(arr)):
        raise InputError("Input contains non-finite values")
    return arr


def _saturate(values: np.ndarray) -> Tuple[np.ndarray, bool]:
    if np.all(np.isfinite(values)):
        return values, False
    values = np.nan_to_num(values, nan=0.0, posinf=MAX_FINITE, neginf=-MAX_FINITE)
    return values, True


def _exp_term(c_in: float, x: np.ndarray) -> np.ndarray:
    return np.exp(np.clip(c_in * x, -EXP_ARG_CLAMP, EXP_ARG_CLAMP))


class CompiledEquation:
    """
    Flat view of an equation structure for repeated evaluation.

    Constants are passed as a vector (canonical order, intercept first) so
    optimizers can evaluate many constant settings without rebuilding
    Equation objects.
    """

    def __init__(self, eq: Equation):
        self.n_constants = eq.n_constants
        self.linear_in_constants = not eq.has_exp
        self._terms = []
        offset = 1
        for s in eq.summands:
            self._terms.append((s.kind, s.features, offset, s.degree))
            offset += s.n_constants

    def values(self, theta: np.ndarray, X: np.ndarray) -> Tuple[np.ndarray, bool]:
        out = np.full(X.shape[0], theta[0], dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            for kind, features, offset, degree in self._terms:
                x = X[:, features[0]]
                if kind == SummandKind.LINEAR:
                    out = out + theta[offset] * x
                elif kind == SummandKind.PRODUCT:
                    out = out + theta[offset] * x * X[:, features[1]]
                elif kind == SummandKind.EXP:
                    out = out + theta[offset] * _exp_term(theta[offset + 1], x)
                else:
                    out = out + theta[offset] * x ** degree
        return _saturate(out)

    def jacobian(self, theta: np.ndarray, X: np.ndarray) -> np.ndarray:
        columns = [np.ones(X.shape[0])]
        with np.errstate(over="ignore", invalid="ignore"):
            for kind, features, offset, degree in self._terms:
                x = X[:, features[0]]
                if kind == SummandKind.LINEAR:
                    columns.append(x)
                elif kind == SummandKind.PRODUCT:
                    columns.append(x * X[:, features[1]])
                elif kind == SummandKind.EXP:
                    e = _exp_term(theta[offset + 1], x)
                    columns.append(e)
                    columns.append(theta[offset] * x * e)
                else:
                    columns.append(x ** degree)
            jac = np.column_stack(columns)
        jac, _ = _saturate(jac)
        return jac


def raw_values(eq: Equation, X: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Unchecked vectorized evaluation; X must already be validated"""
    return CompiledEquation(eq).values(eq.constants, X)


def evaluate_batch(eq: Equation, X) -> Tuple[np.ndarray, bool]:
    """
    Evaluate eq on every row of X.

    Returns:
        (values, overflowed) where overflowed is True if any value saturated
        at the largest finite float
    """
    arr = check_inputs(eq, X)
    values, overflowed = raw_values(eq, arr)
    if overflowed:
        logger.debug(f"Evaluation saturated for {eq.structure_text()}")
    return values, overflowed


def evaluate(eq: Equation, x: Sequence[float]) -> float:
    """Evaluate eq on a single feature vector"""
    values, _ = evaluate_batch(eq, np.asarray(x, dtype=float).reshape(1, -1))
    return float(values[0])


def raw_gradient_matrix(eq: Equation, X: np.ndarray) -> np.ndarray:
    """Unchecked Jacobian of eq with respect to its constants (N x p)"""
    return CompiledEquation(eq).jacobian(eq.constants, X)


def gradient_matrix(eq: Equation, X) -> np.ndarray:
    """Partial derivatives of eq with respect to each constant, one row per sample"""
    return raw_gradient_matrix(eq, check_inputs(eq, X))


def gradient(eq: Equation, x: Sequence[float]) -> np.ndarray:
    """Partial derivatives of eq at a single feature vector, constants in canonical order"""
    return gradient_matrix(eq, np.asarray(x, dtype=float).reshape(1, -1))[0]


def canonicalize(eq: Equation) -> Equation:
    """
    Put summands in canonical order.

    Product features are sorted ascending, summands are sorted by
    (kind rank, features, degree). Two summands with the same structure
    are rejected rather than merged.
    """
    summands = []
    for s in eq.summands:
        if s.kind == SummandKind.PRODUCT and s.features[0] > s.features[1]:
            s = Summand(s.kind, (s.features[1], s.features[0]), s.constants)
        summands.append(s)
    summands.sort(key=lambda s: s.sort_key)
    for prev, cur in zip(summands, summands[1:]):
        if prev.structure == cur.structure:
            raise CanonicalizationError(f"Duplicate summand structure: {cur.structure}")
    return Equation(eq.intercept, tuple(summands))


def is_canonical(eq: Equation) -> bool:
    try:
        return canonicalize(eq) == eq
    except CanonicalizationError:
        return False


def refinements(eq: Equation, grammar: GrammarConfig) -> List[Equation]:
    """
    All children of eq that add exactly one new summand structure.

    New constants are zero; the optimizer sets their initial values.
    Children come out in grammar enumeration order.
    """
    if eq.depth >= grammar.max_summands:
        return []
    existing = set(eq.structure_key)
    children = []
    for structure in grammar.structures():
        if structure in existing:
            continue
        if grammar.max_constants is not None:
            if eq.n_constants + KIND_CONSTANTS[structure[0]] > grammar.max_constants:
                continue
        child = Equation(eq.intercept, eq.summands + (Summand.blank(structure),))
        children.append(canonicalize(child))
    return children


def _render(eq: Equation, feature_text: Callable[[int], str], precision: int) -> str:
    text = format_constant(eq.intercept, precision)
    for s in eq.summands:
        lead = s.constants[0]
        sign = " - " if lead < 0 else " + "
        coef = format_constant(abs(lead), precision)
        if s.kind == SummandKind.LINEAR:
            body = f"{coef} · {feature_text(s.features[0])}"
        elif s.kind == SummandKind.PRODUCT:
            body = f"{coef} · {feature_text(s.features[0])} · {feature_text(s.features[1])}"
        elif s.kind == SummandKind.EXP:
            inner = format_constant(s.constants[1], precision)
            body = f"{coef} · exp({inner} · {feature_text(s.features[0])})"
        else:
            body = f"{coef} · {feature_text(s.features[0])}^{s.degree}"
        text += sign + body
    return text


def _check_names(eq: Equation, names: Sequence[str]):
    used = eq.used_features
    if used and used[-1] >= len(names):
        raise StructuralError(f"No feature name for index {used[-1]} ({len(names)} name(s) given)")


def to_infix_string(eq: Equation, names: Sequence[str], precision: int = DEFAULT_PRECISION) -> str:
    """Human-readable infix form, e.g. '0.75 - 1.27 · a · b + 8.01 · exp(8.18 · m)'"""
    _check_names(eq, names)
    return _render(eq, lambda f: names[f], precision)


@dataclass(frozen=True)
class DisplayExpression:
    """
    An equation expressed on raw (non-normalized) inputs.

    Every feature x_i is substituted by (x_i - min_i) / range_i without
    expanding the result, so each used feature adds two constants.
    """
    equation: Equation
    mins: Tuple[float, ...]
    ranges: Tuple[float, ...]

    def _normalized(self, X) -> np.ndarray:
        arr = _as_matrix(X)
        out = np.zeros_like(arr)
        for f in self.equation.used_features:
            out[:, f] = (arr[:, f] - self.mins[f]) / self.ranges[f]
        return out

    def evaluate_batch(self, X) -> np.ndarray:
        values, _ = evaluate_batch(self.equation, self._normalized(X))
        return values

    def evaluate(self, x: Sequence[float]) -> float:
        return float(self.evaluate_batch(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def to_infix_string(self, names: Sequence[str], precision: int = DEFAULT_PRECISION) -> str:
        _check_names(self.equation, names)

        def affine(f: int) -> str:
            shift = self.mins[f]
            if shift < 0:
                centered = f"{names[f]} + {format_constant(-shift, precision)}"
            else:
                centered = f"{names[f]} - {format_constant(shift, precision)}"
            return f"(({centered}) / {format_constant(self.ranges[f], precision)})"

        return _render(self.equation, affine, precision)


def denormalize(eq: Equation, mins: Sequence[float], ranges: Sequence[float]) -> DisplayExpression:
    """Translate eq back to the raw input space"""
    mins = tuple(float(v) for v in mins)
    ranges = tuple(float(v) for v in ranges)
    for f in eq.used_features:
        if f >= len(mins) or f >= len(ranges):
            raise StructuralError(f"No normalization parameters for feature {f}")
        if not ranges[f] > 0 or not np.isfinite(ranges[f]):
            raise DegenerateFeatureError(f"Feature {f} has zero range and cannot be denormalized")
    return DisplayExpression(eq, mins, ranges)
