"""Reward stack for group-based reinforcement tuning: format, structural
similarity, truncated numerical fit, exact-form bonus, their weighted total,
and group-relative advantage normalization."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .expressions import Expression, Skeleton, count_placeholders, evaluate_rows, extract_skeleton, substitute_placeholders, variables_in
from .fitting import fit_equation_text, predict_with_penalty
from .metrics import form_similarity, r_squared
from .parsing import ParseError, parse
from .sampling import DataMatrix

PROBE_POINTS = 32
PROBE_DOM = 10.0
ADV_EPS = 1e-8


@dataclass(frozen=True)
class RewardWeights:
    w_format: float = 1.0
    w_similarity: float = 2.0
    w_numerical: float = 2.0
    w_equiv: float = 4.0

    def __post_init__(self):
        for name in ("w_format", "w_similarity", "w_numerical", "w_equiv"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


DEFAULT_WEIGHTS = RewardWeights()


@dataclass
class RewardBreakdown:
    format: float            # 1.0 or -1.0
    similarity: float        # [0, 1]
    numerical: float         # [0, 1]
    equiv: float             # 0.0 or 1.0
    total: float
    group_advantage: float | None = None


def is_valid(text: str, arity: int, probe_seed: int = 0) -> bool:
    """A candidate is valid when it parses under the grammar, references no
    variable index >= arity, and evaluates on at least 1 of 32 probe points
    drawn uniformly from [-10, 10]^arity (placeholders probed at 1.0)."""
    try:
        expr = parse(text)
    except ParseError:
        return False
    vs = variables_in(expr)
    if vs and max(vs) >= arity:
        return False
    n_ph = count_placeholders(expr)
    if n_ph:
        expr = substitute_placeholders(expr, [1.0] * n_ph)
    probes = np.random.default_rng(probe_seed).uniform(-PROBE_DOM, PROBE_DOM, size=(PROBE_POINTS, arity))
    _, valid = evaluate_rows(expr, probes)
    return bool(np.any(valid))


def format_reward(text: str, arity: int, probe_seed: int = 0) -> float:
    return 1.0 if is_valid(text, arity, probe_seed) else -1.0


def similarity_reward(pred: Skeleton, truth: Skeleton) -> float:
    return form_similarity(pred, truth)[0]


def numerical_reward(
    pred_text: str,
    truth_matrix: DataMatrix,
    fitted: Expression | None = None,
    probe_seed: int = 0,
    fit_seed: int = 0,
) -> float:
    """max(0, R^2) of the coefficient-refined candidate on the matrix; 0 for
    candidates that fail validation."""
    if not is_valid(pred_text, truth_matrix.n_vars, probe_seed):
        return 0.0
    if fitted is None:
        fitted = fit_equation_text(pred_text, truth_matrix, seed=fit_seed).expression
    r2 = r_squared(predict_with_penalty(fitted, truth_matrix), truth_matrix.y)
    return max(0.0, r2)


def equiv_reward(pred: Skeleton, truth: Skeleton) -> float:
    """Full bonus only for an exact skeleton match (coefficients free)."""
    return 1.0 if pred.canonical_string == truth.canonical_string else 0.0


def total_reward(parts: RewardBreakdown, w: RewardWeights = DEFAULT_WEIGHTS) -> float:
    return (
        w.w_format * parts.format
        + w.w_similarity * parts.similarity
        + w.w_numerical * parts.numerical
        + w.w_equiv * parts.equiv
    )


def compute_reward(
    pred_text: str,
    truth_skeleton: Skeleton,
    truth_matrix: DataMatrix,
    weights: RewardWeights = DEFAULT_WEIGHTS,
    probe_seed: int = 0,
    fit_seed: int = 0,
) -> RewardBreakdown:
    """Full breakdown for one candidate against one ground-truth record."""
    valid = is_valid(pred_text, truth_matrix.n_vars, probe_seed)
    fmt = 1.0 if valid else -1.0
    try:
        pred_skel = extract_skeleton(parse(pred_text))
    except ParseError:
        pred_skel = None
    similarity = similarity_reward(pred_skel, truth_skeleton) if pred_skel else 0.0
    equiv = equiv_reward(pred_skel, truth_skeleton) if pred_skel else 0.0
    numerical = (
        numerical_reward(pred_text, truth_matrix, probe_seed=probe_seed, fit_seed=fit_seed)
        if valid
        else 0.0
    )
    parts = RewardBreakdown(
        format=fmt, similarity=similarity, numerical=numerical, equiv=equiv, total=0.0
    )
    parts.total = total_reward(parts, weights)
    return parts


def group_advantages(rewards: Sequence[float]) -> np.ndarray:
    """Center by the group mean and scale by the group's population standard
    deviation (epsilon-guarded); a degenerate group maps to all zeros."""
    arr = np.asarray(rewards, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError("a reward group needs at least 2 members")
    return (arr - arr.mean()) / (arr.std() + ADV_EPS)


def normalize_by_group(
    breakdowns: Sequence[RewardBreakdown], group_ids: Sequence[str]
) -> None:
    """Fill group_advantage in place, grouping candidates by their shared id.
    Groups with a single member are left unnormalized (advantage stays None)."""
    if len(breakdowns) != len(group_ids):
        raise ValueError("breakdowns/group_ids length mismatch")
    by_group: dict[str, list[int]] = {}
    for i, gid in enumerate(group_ids):
        by_group.setdefault(gid, []).append(i)
    for indices in by_group.values():
        if len(indices) < 2:
            continue
        adv = group_advantages([breakdowns[i].total for i in indices])
        for j, i in enumerate(indices):
            breakdowns[i].group_advantage = float(adv[j])
