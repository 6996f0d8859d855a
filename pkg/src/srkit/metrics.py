"""Evaluation metrics: coefficient of determination, tolerance accuracy, and
the six-feature structural similarity between equation skeletons."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .expressions import FeatureVector, Skeleton, extract_features

DEFAULT_TAU = 0.05

# reported instead of -inf when the target is constant and the fit misses it
R2_SENTINEL = float(-np.finfo(np.float64).max)

FEATURE_NAMES = ("operators", "functions", "variables", "constants", "pattern", "complexity")


@dataclass(frozen=True)
class MetricReport:
    """Per-equation scores; tau is carried so reports are self-describing."""

    r2: float
    acc_tau: int
    s_struct: float
    per_feature: Mapping[str, float] = field(default_factory=dict)
    tau: float = DEFAULT_TAU


@dataclass(frozen=True)
class AggregateSummary:
    s_struct: float
    acc_tau: float
    r2: float            # per-equation values clipped at 0 before averaging
    r2_unclipped: float  # raw mean, for transparency
    count: int


def _as_vectors(y_pred: Sequence[float], y_true: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(y_pred, dtype=np.float64)
    t = np.asarray(y_true, dtype=np.float64)
    if p.shape != t.shape or p.ndim != 1:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    return p, t


def r_squared(y_pred: Sequence[float], y_true: Sequence[float]) -> float:
    """1 - SS_res/SS_tot. A constant target (SS_tot ~ 0) scores 1.0 when the
    prediction matches to 1e-9 and the most negative finite double otherwise."""
    p, t = _as_vectors(y_pred, y_true)
    if p.size < 2:
        raise ValueError("need at least 2 points")
    with np.errstate(all="ignore"):
        ss_res = float(np.sum((t - p) ** 2))
        ss_tot = float(np.sum((t - np.mean(t)) ** 2))
    if ss_tot < 1e-12:
        return 1.0 if float(np.max(np.abs(t - p))) < 1e-9 else R2_SENTINEL
    if not (math.isfinite(ss_res) and math.isfinite(ss_tot)):
        # rescale so extreme-magnitude targets cannot overflow the sums
        scale = max(float(np.max(np.abs(t))), float(np.max(np.abs(p))), 1.0)
        ts, ps = t / scale, p / scale
        ss_res = float(np.sum((ts - ps) ** 2))
        ss_tot = float(np.sum((ts - np.mean(ts)) ** 2))
        if ss_tot < 1e-300:
            return 1.0 if ss_res < 1e-300 else R2_SENTINEL
    with np.errstate(all="ignore"):
        out = 1.0 - ss_res / ss_tot
    return out if math.isfinite(out) else R2_SENTINEL


def acc_tau(y_pred: Sequence[float], y_true: Sequence[float], tau: float = DEFAULT_TAU) -> int:
    """1 iff the worst-case relative error stays within tau (denominators are
    floored at 1e-10 so exact-zero targets cannot blow up)."""
    p, t = _as_vectors(y_pred, y_true)
    rel = np.abs(p - t) / np.maximum(np.abs(t), 1e-10)
    return int(np.max(rel) <= tau)


def jaccard(a: Iterable, b: Iterable) -> float:
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


def ratio_sim(v1: float, v2: float) -> float:
    if v1 < 0 or v2 < 0:
        raise ValueError("ratio_sim expects nonnegative values")
    if v1 == 0 and v2 == 0:
        return 1.0
    return min(v1, v2) / max(v1, v2)


def pattern_sim(p1: str, p2: str) -> float:
    if not p1 and not p2:
        return 1.0
    matches = sum(1 for a, b in zip(p1, p2) if a == b)
    return matches / max(len(p1), len(p2))


def feature_similarities(f1: FeatureVector, f2: FeatureVector) -> dict[str, float]:
    return {
        "operators": jaccard(f1.operators, f2.operators),
        "functions": jaccard(f1.functions, f2.functions),
        "variables": jaccard(f1.variables, f2.variables),
        "constants": ratio_sim(f1.constant_count, f2.constant_count),
        "pattern": pattern_sim(f1.structural_pattern, f2.structural_pattern),
        "complexity": ratio_sim(f1.complexity_score, f2.complexity_score),
    }


def form_similarity(pred: Skeleton, truth: Skeleton) -> tuple[float, dict[str, float]]:
    """Unweighted mean of the six per-feature similarities, clipped to [0, 1]."""
    per = feature_similarities(extract_features(pred), extract_features(truth))
    value = min(1.0, max(0.0, sum(per.values()) / len(per)))
    return value, per


def aggregate(reports: Sequence[MetricReport]) -> AggregateSummary:
    """Corpus means. R-squared is clipped at 0 per equation before averaging
    (the raw mean is reported alongside)."""
    if not reports:
        raise ValueError("cannot aggregate an empty report list")
    r2s = np.array([r.r2 for r in reports], dtype=np.float64)
    return AggregateSummary(
        s_struct=float(np.mean([r.s_struct for r in reports])),
        acc_tau=float(np.mean([r.acc_tau for r in reports])),
        r2=float(np.mean(np.clip(r2s, 0.0, None))),
        r2_unclipped=float(np.mean(r2s)),
        count=len(reports),
    )
