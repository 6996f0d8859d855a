"""Coefficient refinement: multi-start derivative-free minimization of the
squared residuals of a skeleton's placeholders against a data matrix."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .expressions import (
    BinaryOp,
    Constant,
    ConstPlaceholder,
    Expression,
    Skeleton,
    UnaryFn,
    count_placeholders,
    evaluate_rows,
    extract_skeleton,
    substitute_placeholders,
)
from .metrics import r_squared
from .parsing import parse
from .sampling import DataMatrix

DEFAULT_RESTARTS = 8
DEFAULT_BUDGET = 500       # simplex iterations per restart
PENALTY_RESIDUAL = 1e6     # charged to rows the candidate cannot evaluate
OBJECTIVE_CAP = 1e300
_CONV_TOL = 1e-10


class Unfittable(RuntimeError):
    """Every evaluated candidate point failed on every row of the matrix."""


@dataclass(frozen=True)
class FitResult:
    expression: Expression
    r2: float
    n_restarts_used: int
    converged: bool
    objective: float
    start_objectives: tuple[float, ...]


def predict_with_penalty(expr: Expression, data: DataMatrix) -> np.ndarray:
    """Predictions on the matrix; rows the expression cannot evaluate are
    filled with y + PENALTY_RESIDUAL so every consumer charges them alike."""
    y_pred, valid = evaluate_rows(expr, data.x)
    return np.where(valid, y_pred, data.y + PENALTY_RESIDUAL)


def r2_on_matrix(expr: Expression, data: DataMatrix) -> float:
    return r_squared(predict_with_penalty(expr, data), data.y)


def residual_objective(
    skel: Skeleton, data: DataMatrix, scale: float = 1.0
) -> Callable[[np.ndarray], float]:
    """Sum of squared residuals (each divided by `scale`) as a function of the
    placeholder vector; rows the candidate cannot evaluate contribute the
    fixed penalty residual."""
    y = data.y

    def objective(c: np.ndarray) -> float:
        c = np.asarray(c, dtype=np.float64)
        if not np.all(np.isfinite(c)):
            return float("inf")
        expr = substitute_placeholders(skel.expr, c)
        with np.errstate(all="ignore"):
            y_pred, valid = evaluate_rows(expr, data.x)
            res = np.where(valid, (y_pred - y) / scale, PENALTY_RESIDUAL / scale)
            out = float(np.sum(res * res))
        return out if np.isfinite(out) else float("inf")

    return objective


def _initial_points(
    m: int,
    restarts: int,
    rng: np.random.Generator,
    extra_starts: Sequence[Sequence[float]] | None,
) -> list[np.ndarray]:
    starts: list[np.ndarray] = []
    for extra in extra_starts or ():
        extra = np.asarray(extra, dtype=np.float64)
        if extra.shape == (m,) and np.all(np.isfinite(extra)):
            starts.append(extra)
    starts.append(np.ones(m))
    starts.append(np.full(m, 0.1))
    for _ in range(max(0, restarts - 2)):
        starts.append(rng.uniform(-5.0, 5.0, size=m))
    return starts


def fit(
    skel: Skeleton,
    data: DataMatrix,
    budget: int = DEFAULT_BUDGET,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    extra_starts: Sequence[Sequence[float]] | None = None,
) -> FitResult:
    """Fit the skeleton's placeholders to the matrix.

    Runs Nelder-Mead simplex descent from the fixed starts (all ones, all 0.1,
    any extra_starts) plus random draws on [-5, 5], and returns the best point
    seen. The returned objective never exceeds the objective at any evaluated
    initial point. A skeleton without placeholders is scored as-is.
    """
    y = data.y
    m = count_placeholders(skel.expr)
    if m == 0:
        expr = skel.expr
        obj = residual_objective(skel, data)(np.empty(0))
        if not np.any(evaluate_rows(expr, data.x)[1]):
            raise Unfittable("expression evaluates on no row of the matrix")
        return FitResult(
            expression=expr,
            r2=r2_on_matrix(expr, data),
            n_restarts_used=0,
            converged=True,
            objective=obj,
            start_objectives=(),
        )

    rng = np.random.default_rng(seed)
    starts = _initial_points(m, restarts, rng, extra_starts)

    with np.errstate(over="ignore"):
        ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if not np.isfinite(ss_tot):
        ss_tot = float(np.finfo(np.float64).max)

    # optimization and selection run on a per-residual-scaled objective so
    # extreme-magnitude targets neither overflow nor flatten; reported sums
    # are converted back to raw units
    res_scale = max(float(np.sqrt(ss_tot / data.k)), 1.0)
    sq = res_scale * res_scale
    scaled_objective = residual_objective(skel, data, scale=res_scale)

    def scaled(c: np.ndarray) -> float:
        return min(scaled_objective(c), OBJECTIVE_CAP)

    # residual sums at or below this are numerically perfect; skip the rest
    good_enough = (1e-17 * max(ss_tot, 1.0)) / sq

    start_objs = [scaled(s) for s in starts]
    candidates: list[tuple[float, np.ndarray, bool]] = []
    n_runs = 0
    for s, s_obj in zip(starts, start_objs):
        candidates.append((s_obj, s, False))
        if s_obj <= good_enough:
            break
        res = minimize(
            scaled,
            s,
            method="Nelder-Mead",
            options={"maxiter": budget, "xatol": _CONV_TOL, "fatol": _CONV_TOL},
        )
        n_runs += 1
        x_best = np.asarray(res.x, dtype=np.float64)
        candidates.append((scaled(x_best), x_best, bool(res.success)))
        if candidates[-1][0] <= good_enough:
            break

    best_idx = min(range(len(candidates)), key=lambda i: candidates[i][0])
    best_obj, best_c, best_conv = candidates[best_idx]
    if best_obj <= good_enough:
        best_conv = True

    if not any(
        np.any(evaluate_rows(substitute_placeholders(skel.expr, c), data.x)[1])
        for _, c, _ in candidates
    ):
        raise Unfittable("no candidate point evaluates on any row of the matrix")

    expr = substitute_placeholders(skel.expr, best_c)
    with np.errstate(over="ignore"):
        return FitResult(
            expression=expr,
            r2=r2_on_matrix(expr, data),
            n_restarts_used=n_runs,
            converged=best_conv,
            objective=best_obj * sq,
            start_objectives=tuple(v * sq for v in start_objs),
        )


def warm_start_values(expr: Expression) -> list[float]:
    """Seed vector for refitting a parsed prediction: literal coefficients keep
    their value, bare placeholders start at 1.0. Matches the skeleton's
    placeholder order."""
    out: list[float] = []

    def visit(node: Expression) -> None:
        if isinstance(node, Constant):
            out.append(float(node.value))
        elif isinstance(node, ConstPlaceholder):
            out.append(1.0)
        elif isinstance(node, UnaryFn):
            visit(node.child)
        elif isinstance(node, BinaryOp):
            visit(node.left)
            if node.kind == "pow" and isinstance(node.right, Constant) and type(node.right.value) is int:
                return
            visit(node.right)

    visit(expr)
    return out


def fit_equation_text(
    text: str,
    data: DataMatrix,
    budget: int = DEFAULT_BUDGET,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
) -> FitResult:
    """Parse a candidate equation and refine its coefficients on the matrix.

    Literal constants in the text both become fit targets (via the skeleton)
    and seed one warm start, so an already-exact candidate scores exactly.
    """
    expr = parse(text)
    skel = extract_skeleton(expr)
    if count_placeholders(skel.expr) == 0:
        return fit(skel, data, budget=budget, restarts=restarts, seed=seed)
    return fit(
        skel,
        data,
        budget=budget,
        restarts=restarts,
        seed=seed,
        extra_starts=[warm_start_values(expr)],
    )


def fd_gradient(
    f: Callable[[np.ndarray], float],
    x: Sequence[float],
    step: float = 1e-6,
    scheme: str = "forward",
) -> np.ndarray:
    """Finite-difference gradient of a scalar function (forward or central)."""
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    if scheme == "forward":
        fx = f(x)
        for i in range(x.size):
            xp = x.copy()
            xp[i] += step
            g[i] = (f(xp) - fx) / step
    elif scheme == "central":
        for i in range(x.size):
            xp, xm = x.copy(), x.copy()
            xp[i] += step
            xm[i] -= step
            g[i] = (f(xp) - f(xm)) / (2.0 * step)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return g
