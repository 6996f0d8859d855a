"""The hypothesis / experiment / revision search loop.

Each iteration asks a generator for candidate equations, discards invalid
ones, refines coefficients against the data matrix, scores the fits, attaches
revision comments, and folds the survivors into the memory bank that seeds
the next iteration's prompt.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chat import ChatBackendError, ChatClient
from .expressions import to_string
from .fitting import Unfittable, fit_equation_text, predict_with_penalty
from .hypotheses import (
    ChatHypothesisGenerator,
    GenerationContext,
    HypothesisGenerator,
    LocalMutationGenerator,
    sanitize_candidate,
)
from .memory import MemoryBank, MemoryEntry
from .parsing import parse
from .prompts import build_prompt
from .rewards import is_valid
from .sampling import DataMatrix

GENERATOR_CALL_RETRIES = 3
ADEQUATE_SCORE = 0.999
RESIDUAL_CORR_THRESHOLD = 0.5
HEAVY_TAIL_KURTOSIS = 6.0


class EmptySearch(ValueError):
    """The configuration asks for zero iterations."""


class GeneratorFailure(RuntimeError):
    """No iteration produced a single valid candidate."""


@dataclass(frozen=True)
class SearchConfig:
    iterations: int = 5
    hypotheses_per_iter: int = 6
    prompt_points: int = 40
    verify_points: int = 5
    generator: str = "local"  # "local" | "chat"
    temperature: float = 0.7
    fit_budget: int = 500
    fit_restarts: int = 8

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.hypotheses_per_iter < 1:
            raise ValueError("hypotheses_per_iter must be >= 1")
        if self.prompt_points < 1 or self.verify_points < 0:
            raise ValueError("bad prompt/verify point counts")
        if self.generator not in ("local", "chat"):
            raise ValueError(f"unknown generator {self.generator!r}")


@dataclass
class SearchState:
    data: DataMatrix
    bank: MemoryBank
    rng: np.random.Generator
    probe_seed: int
    trace: list[list[dict]] = field(default_factory=list)
    iteration: int = 0
    had_generator_failure: bool = False


def revise(
    equation: str,
    score: float,
    data: DataMatrix,
    backend: ChatClient | None = None,
) -> str:
    """Short improvement note for a scored equation.

    With a chat backend the note comes from the model; otherwise (or on
    backend failure) it is templated from residual statistics.
    """
    if backend is not None:
        try:
            excerpt = "\n".join(
                ", ".join([f"x_{j}={data.x[i, j]:.6g}" for j in range(data.n_vars)])
                + f", y={data.y[i]:.6g}"
                for i in range(min(10, data.k))
            )
            return backend.complete(
                [
                    {
                        "role": "user",
                        "content": (
                            "You review a candidate equation for a regression task.\n"
                            f"Equation: {equation}\n"
                            f"R^2 score: {score:.6g}\n"
                            "Sample data:\n"
                            f"{excerpt}\n"
                            "Give one or two concrete suggestions to improve the equation. "
                            "Reply with the suggestions only."
                        ),
                    }
                ],
                temperature=0.7,
            ).strip()
        except ChatBackendError:
            pass  # fall through to the local template
    return _local_revision(equation, score, data)


def _local_revision(equation: str, score: float, data: DataMatrix) -> str:
    if score >= ADEQUATE_SCORE:
        return "fit is adequate; prefer simplification"
    try:
        residuals = data.y - predict_with_penalty(parse(equation), data)
    except ValueError:
        return "equation could not be analyzed; try a structurally different form"
    notes = []
    with np.errstate(all="ignore"):
        r_std = float(np.std(residuals))
        if r_std > 0 and abs(float(np.mean(residuals))) > 0.25 * r_std:
            notes.append("residuals show a consistent sign bias; add or remove an offset term")
        for j in range(data.n_vars):
            x_col = data.x[:, j]
            if r_std > 0 and float(np.std(x_col)) > 0:
                corr = float(np.corrcoef(residuals, x_col)[0, 1])
                if np.isfinite(corr) and abs(corr) > RESIDUAL_CORR_THRESHOLD:
                    notes.append(f"residuals correlate with x_{j}; consider a term in x_{j}")
        if r_std > 0:
            kurtosis = float(np.mean((residuals - np.mean(residuals)) ** 4) / r_std**4)
            if np.isfinite(kurtosis) and kurtosis > HEAVY_TAIL_KURTOSIS:
                notes.append("residuals have heavy tails; consider a nonlinear transform")
    if not notes:
        notes.append("no simple residual pattern; try different operator or function choices")
    return "; ".join(notes)


def run_iteration(
    state: SearchState,
    gen: HypothesisGenerator,
    cfg: SearchConfig,
    revision_backend: ChatClient | None = None,
) -> SearchState:
    """One hypothesis round; the bank is only modified at the merge point."""
    messages = build_prompt(state.data, state.bank, cfg.prompt_points, cfg.verify_points)
    ctx = GenerationContext(
        messages=messages,
        bank=state.bank,
        n_vars=state.data.n_vars,
        rng=state.rng,
        temperature=cfg.temperature,
    )
    raw: list[str] = []
    for attempt in range(GENERATOR_CALL_RETRIES):
        try:
            raw = gen.generate(ctx, cfg.hypotheses_per_iter)
            break
        except Exception:
            if attempt == GENERATOR_CALL_RETRIES - 1:
                state.had_generator_failure = True
                raw = []

    merged: list[MemoryEntry] = []
    for candidate in raw:
        text = sanitize_candidate(candidate)
        if not text or not is_valid(text, state.data.n_vars, state.probe_seed):
            continue
        fit_seed = int(state.rng.integers(0, 2**62))
        try:
            result = fit_equation_text(
                text,
                state.data,
                budget=cfg.fit_budget,
                restarts=cfg.fit_restarts,
                seed=fit_seed,
            )
        except Unfittable:
            continue
        equation = to_string(result.expression)
        if not is_valid(equation, state.data.n_vars, state.probe_seed):
            continue
        comments = revise(equation, result.r2, state.data, backend=revision_backend)
        merged.append(MemoryEntry(equation=equation, score=result.r2, comments=comments))

    state.bank.update(merged)
    state.trace.append(state.bank.snapshot())
    state.iteration += 1
    return state


def search(
    data: DataMatrix,
    cfg: SearchConfig = SearchConfig(),
    generator: HypothesisGenerator | None = None,
    seed: int = 0,
    chat_client: ChatClient | None = None,
) -> tuple[MemoryEntry, list[list[dict]]]:
    """Run the full loop and return (best entry, per-iteration bank snapshots).

    Deterministic with the local generator under a fixed seed. Raises
    GeneratorFailure only when every iteration came back without a single
    valid candidate.
    """
    if cfg.iterations == 0:
        raise EmptySearch("search needs at least one iteration")
    if cfg.prompt_points + cfg.verify_points > data.k:
        raise ValueError(
            f"prompt_points + verify_points exceed the {data.k} available rows"
        )
    revision_backend = chat_client
    if generator is None:
        if cfg.generator == "chat":
            client = chat_client if chat_client is not None else ChatClient.from_env()
            revision_backend = client
            generator = ChatHypothesisGenerator(client)
        else:
            generator = LocalMutationGenerator(data.n_vars)
    state = SearchState(
        data=data,
        bank=MemoryBank(),
        rng=np.random.default_rng(seed),
        probe_seed=seed,
    )
    for _ in range(cfg.iterations):
        run_iteration(state, generator, cfg, revision_backend=revision_backend)
    if len(state.bank) == 0:
        raise GeneratorFailure("no valid candidate equations in any iteration")
    return state.bank.best, state.trace
