"""Data-matrix sampling: draw inputs, evaluate the equation, reject rows that
leave the domain, and optionally add measurement noise to the outputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expressions import DomainError, Expression, arity, evaluate, evaluate_rows

DEFAULT_K = 200
DEFAULT_DOM = 10.0
ROW_ATTEMPTS = 200       # redraw budget per retained row
SCREEN_ROWS = 64
MIN_Y_STD = 1e-8         # constant targets make R^2 degenerate

DISTRIBUTIONS = ("uniform", "gaussian")


class UnsatisfiableDomain(RuntimeError):
    """Too few domain-valid rows; the equation should be discarded."""


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Additive zero-mean Gaussian noise on y."""

    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


@dataclass(frozen=True, eq=False)
class DataMatrix:
    x: np.ndarray            # K x C independent variables
    y: np.ndarray            # K dependent values
    distribution: str
    dom: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.float64))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=np.float64))
        if self.x.ndim != 2 or self.y.ndim != 1 or self.x.shape[0] != self.y.shape[0]:
            raise ValueError(f"inconsistent shapes x{self.x.shape} y{self.y.shape}")
        if self.y.shape[0] == 0:
            raise ValueError("a data matrix needs at least one row")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("y contains non-finite values")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.dom <= 0:
            raise ValueError("dom must be positive")

    @property
    def k(self) -> int:
        return self.y.shape[0]

    @property
    def n_vars(self) -> int:
        return self.x.shape[1]


def _draw_rows(
    rng: np.random.Generator, distribution: str, n: int, n_vars: int, dom: float
) -> np.ndarray:
    if distribution == "uniform":
        return rng.uniform(-dom, dom, size=(n, n_vars))
    # "gaussian" spread parameter is the standard deviation
    return rng.normal(0.0, dom, size=(n, n_vars))


def sample_matrix(
    expr: Expression,
    k: int = DEFAULT_K,
    dom: float = DEFAULT_DOM,
    rng: np.random.Generator | None = None,
    noise: NoiseSpec = NoiseSpec(),
) -> DataMatrix:
    """Sample k rows for expr, redrawing any row whose evaluation leaves the
    domain (up to 200 attempts per row).

    The input distribution is chosen once per matrix: uniform on [-dom, dom]
    or Gaussian with standard deviation dom, each with probability 1/2. The
    stored y comes from the scalar evaluator, so without noise
    evaluate(expr, x[i]) == y[i] holds bit-exactly.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if dom <= 0:
        raise ValueError("dom must be positive")
    rng = rng if rng is not None else np.random.default_rng()
    n_vars = arity(expr)
    distribution = DISTRIBUTIONS[int(rng.random() < 0.5)]
    xs = np.empty((k, n_vars), dtype=np.float64)
    ys = np.empty(k, dtype=np.float64)
    for i in range(k):
        for _ in range(ROW_ATTEMPTS):
            row = _draw_rows(rng, distribution, 1, n_vars, dom)[0]
            try:
                value = evaluate(expr, row)
            except DomainError:
                continue
            xs[i] = row
            ys[i] = value
            break
        else:
            raise UnsatisfiableDomain(
                f"row {i}: no valid point in {ROW_ATTEMPTS} attempts"
            )
    if noise.sigma > 0:
        ys = ys + rng.normal(0.0, noise.sigma, size=k)
    return DataMatrix(x=xs, y=ys, distribution=distribution, dom=dom)


def screen(expr: Expression, dom: float, rng: np.random.Generator) -> bool:
    """Evaluability filter: true iff a 64-row probe matrix samples under the
    same per-row attempt budget as sample_matrix and its outputs are not
    effectively constant.

    The probe is evaluated in vectorized chunks but walks the draw stream with
    sample_matrix's row semantics: a row fails once 200 consecutive draws are
    domain-invalid.
    """
    n_vars = arity(expr)
    distribution = DISTRIBUTIONS[int(rng.random() < 0.5)]
    budget = SCREEN_ROWS * ROW_ATTEMPTS
    drawn = 0
    probe: list[float] = []
    attempts = 0  # draws spent on the row currently being filled
    chunk = 2 * SCREEN_ROWS
    while drawn < budget:
        n = min(chunk, budget - drawn)
        x = _draw_rows(rng, distribution, n, n_vars, dom)
        with np.errstate(all="ignore"):
            y, valid = evaluate_rows(expr, x)
        pos = 0
        for idx in np.flatnonzero(valid):
            attempts += int(idx) - pos + 1
            if attempts > ROW_ATTEMPTS:
                return False
            probe.append(float(y[idx]))
            if len(probe) == SCREEN_ROWS:
                with np.errstate(all="ignore"):
                    return bool(np.std(np.asarray(probe)) > MIN_Y_STD)
            attempts = 0
            pos = int(idx) + 1
        attempts += n - pos
        if attempts >= ROW_ATTEMPTS:
            return False
        drawn += n
        chunk *= 4
    return False
