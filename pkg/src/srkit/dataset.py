"""Dataset assembly, JSONL serialization, corpus statistics, and the
prediction-evaluation harness."""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .expressions import (
    DomainError,
    Skeleton,
    evaluate,
    extract_features,
    extract_skeleton,
    to_string,
)
from .fitting import (
    DEFAULT_BUDGET,
    DEFAULT_RESTARTS,
    PENALTY_RESIDUAL,
    Unfittable,
    fit_equation_text,
)
from .generator import (
    MATRIX_STREAM,
    EquationRecord,
    GenerationExhausted,
    GeneratorConfig,
    derive_rng,
    generate_corpus,
    split_by_skeleton,
)
from .hypotheses import sanitize_candidate
from .metrics import (
    DEFAULT_TAU,
    AggregateSummary,
    MetricReport,
    acc_tau,
    aggregate,
    form_similarity,
    r_squared,
)
from .parsing import ParseError, parse
from .sampling import DataMatrix, NoiseSpec, UnsatisfiableDomain, sample_matrix

BUILD_ROUNDS = 50  # top-up rounds when sampled matrices reject records


class MalformedLine(ValueError):
    """A dataset line failed to parse or violated the record schema."""

    def __init__(self, path, lineno: int, reason: str):
        super().__init__(f"{path}:{lineno}: {reason}")
        self.lineno = lineno


class UnknownId(KeyError):
    """A prediction references an id absent from the dataset."""


@dataclass(frozen=True, eq=False)
class DatasetEntry:
    record: EquationRecord
    matrix: DataMatrix
    noise_sigma: float = 0.0


def build_dataset(
    cfg: GeneratorConfig,
    k: int = 200,
    noise_sigma: float = 0.0,
    test_fraction: float | None = None,
) -> list[DatasetEntry]:
    """Generate a corpus and attach a sampled data matrix to every record.

    Records whose matrix cannot be sampled within the per-row attempt budget
    are dropped and replaced by continuing the generation stream, so the
    result always holds exactly cfg.target_count entries. Matrices draw from
    per-record streams derived from (seed, skeleton).
    """
    rng = np.random.default_rng(cfg.seed)
    seen: set[str] = set()
    kept: list[tuple[EquationRecord, DataMatrix]] = []
    noise = NoiseSpec(noise_sigma)
    for _ in range(BUILD_ROUNDS):
        need = cfg.target_count - len(kept)
        if need == 0:
            break
        batch = generate_corpus(
            dataclasses.replace(cfg, target_count=need), rng=rng, seen=seen
        )
        for rec in batch:
            matrix_rng = derive_rng(cfg.seed, MATRIX_STREAM, rec.skeleton.canonical_string)
            try:
                matrix = sample_matrix(rec.expression, k=k, dom=cfg.dom, rng=matrix_rng, noise=noise)
            except UnsatisfiableDomain:
                continue  # skeleton stays in `seen`; the stream generates a fresh one
            kept.append((rec, matrix))
    else:
        raise GenerationExhausted(
            f"{len(kept)}/{cfg.target_count} sampled records after {BUILD_ROUNDS} rounds"
        )

    records = [
        dataclasses.replace(rec, id=f"eq-{i:06d}") for i, (rec, _) in enumerate(kept)
    ]
    if test_fraction is not None:
        train, test = split_by_skeleton(records, test_fraction, seed=cfg.seed)
        split_map = {r.id: r.split for r in train + test}
        records = [dataclasses.replace(r, split=split_map[r.id]) for r in records]
    return [
        DatasetEntry(record=rec, matrix=matrix, noise_sigma=noise_sigma)
        for rec, (_, matrix) in zip(records, kept)
    ]


# ---------------------------------------------------------------------------
# serialization

def entry_to_obj(entry: DatasetEntry) -> dict:
    """The JSONL record object for one dataset entry."""
    record, matrix = entry.record, entry.matrix
    points = np.column_stack([matrix.x, matrix.y])
    return {
        "id": record.id,
        "expression": to_string(record.expression),
        "skeleton": record.skeleton.canonical_string,
        "n_vars": record.n_vars,
        "depth": record.depth,
        "split": record.split,
        "dom": matrix.dom,
        "distribution": matrix.distribution,
        "points": [list(row) for row in points.tolist()],
        "noise_sigma": entry.noise_sigma,
    }


def entry_from_obj(obj: dict) -> DatasetEntry:
    """Validate and rebuild one dataset entry from its JSON object."""
    missing = [key for key in _REQUIRED_KEYS if key not in obj]
    if missing:
        raise ValueError(f"missing keys {missing}")
    try:
        expr = parse(obj["expression"])
        skel_expr = parse(obj["skeleton"])
    except ParseError as exc:
        raise ValueError(f"unparsable equation: {exc}") from exc
    skeleton = Skeleton(expr=skel_expr, canonical_string=to_string(skel_expr))
    if extract_skeleton(expr).canonical_string != skeleton.canonical_string:
        raise ValueError("skeleton does not match expression")
    points = np.asarray(obj["points"], dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != obj["n_vars"] + 1:
        raise ValueError("points width must be n_vars + 1")
    record = EquationRecord(
        id=obj["id"],
        expression=expr,
        skeleton=skeleton,
        n_vars=int(obj["n_vars"]),
        depth=int(obj["depth"]),
        split=obj["split"],
    )
    matrix = DataMatrix(
        x=points[:, :-1],
        y=points[:, -1],
        distribution=obj["distribution"],
        dom=float(obj["dom"]),
    )
    return DatasetEntry(record=record, matrix=matrix, noise_sigma=float(obj["noise_sigma"]))


def write_dataset(
    records: Sequence[EquationRecord],
    matrices: Sequence[DataMatrix],
    path,
    noise_sigma: float = 0.0,
) -> None:
    """One JSON object per line; numbers keep full double precision so
    read(write(x)) is bit-exact."""
    if len(records) != len(matrices):
        raise ValueError("records and matrices must align")
    write_entries(
        [DatasetEntry(r, m, noise_sigma) for r, m in zip(records, matrices)], path
    )


def write_entries(entries: Sequence[DatasetEntry], path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(json.dumps(entry_to_obj(e)))
            fh.write("\n")


_REQUIRED_KEYS = (
    "id", "expression", "skeleton", "n_vars", "depth", "split",
    "dom", "distribution", "points", "noise_sigma",
)


def read_dataset(path) -> list[DatasetEntry]:
    """Parse a JSONL dataset, validating each line independently."""
    entries: list[DatasetEntry] = []
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(path, lineno, f"bad JSON: {exc}") from exc
            try:
                entries.append(entry_from_obj(obj))
            except ValueError as exc:
                raise MalformedLine(path, lineno, str(exc)) from exc
    return entries


def read_predictions(path) -> dict[str, str]:
    """JSONL of {"id": ..., "equation": ...} lines."""
    out: dict[str, str] = {}
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out[obj["id"]] = obj["equation"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise MalformedLine(path, lineno, f"bad prediction line: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# evaluation harness

@dataclass(frozen=True)
class EvaluationRow:
    id: str
    prediction: str
    report: MetricReport
    error: str | None = None


@dataclass(frozen=True)
class RunReport:
    rows: list[EvaluationRow]
    summary: AggregateSummary
    tau: float
    wall_clock: float
    config: dict = field(default_factory=dict)


def _scalar_predictions(expr, matrix: DataMatrix) -> np.ndarray:
    """Row-by-row scalar evaluation; domain failures charge the fixed penalty."""
    out = np.empty(matrix.k)
    for i in range(matrix.k):
        try:
            out[i] = evaluate(expr, matrix.x[i])
        except DomainError:
            out[i] = matrix.y[i] + PENALTY_RESIDUAL
    return out


_ZERO_FEATURES = {name: 0.0 for name in ("operators", "functions", "variables", "constants", "pattern", "complexity")}


def evaluate_predictions(
    entries: Sequence[DatasetEntry],
    predictions: Mapping[str, str],
    tau: float = DEFAULT_TAU,
    fit_budget: int = DEFAULT_BUDGET,
    fit_restarts: int = DEFAULT_RESTARTS,
    fit_seed: int = 0,
) -> RunReport:
    """Score predictions against their records: refit coefficients on the
    record's matrix, then compute fit, tolerance accuracy, and form similarity.
    Unparsable (or unevaluable) predictions score zero across the board."""
    t_start = time.perf_counter()
    by_id = {e.record.id: e for e in entries}
    unknown = [pid for pid in predictions if pid not in by_id]
    if unknown:
        raise UnknownId(f"prediction ids not in dataset: {sorted(unknown)[:5]}")
    rows: list[EvaluationRow] = []
    for pid in predictions:
        entry = by_id[pid]
        text = sanitize_candidate(predictions[pid])
        error = None
        try:
            fitres = fit_equation_text(
                text, entry.matrix, budget=fit_budget, restarts=fit_restarts, seed=fit_seed
            )
            pred_skel = extract_skeleton(parse(text))
            y_pred = _scalar_predictions(fitres.expression, entry.matrix)
            r2 = r_squared(y_pred, entry.matrix.y)
            acc = acc_tau(y_pred, entry.matrix.y, tau)
            s_struct, per_feature = form_similarity(pred_skel, entry.record.skeleton)
        except (ParseError, Unfittable, ValueError) as exc:
            error = type(exc).__name__
            r2, acc, s_struct, per_feature = 0.0, 0, 0.0, dict(_ZERO_FEATURES)
        rows.append(
            EvaluationRow(
                id=pid,
                prediction=text,
                report=MetricReport(
                    r2=r2, acc_tau=acc, s_struct=s_struct, per_feature=per_feature, tau=tau
                ),
                error=error,
            )
        )
    summary = aggregate([row.report for row in rows])
    return RunReport(
        rows=rows,
        summary=summary,
        tau=tau,
        wall_clock=time.perf_counter() - t_start,
        config={"fit_budget": fit_budget, "fit_restarts": fit_restarts, "fit_seed": fit_seed},
    )


def report_to_dict(report: RunReport, include_timing: bool = False) -> dict:
    """JSON form of a report. Timing is excluded by default so report files
    written with identical flags and seed stay byte-identical."""
    out = {
        "summary": dataclasses.asdict(report.summary),
        "tau": report.tau,
        "config": report.config,
        "rows": [
            {
                "id": row.id,
                "prediction": row.prediction,
                "r2": row.report.r2,
                "acc_tau": row.report.acc_tau,
                "s_struct": row.report.s_struct,
                "per_feature": dict(row.report.per_feature),
                "error": row.error,
            }
            for row in report.rows
        ],
    }
    if include_timing:
        out["wall_clock"] = report.wall_clock
    return out


# ---------------------------------------------------------------------------
# corpus statistics

def corpus_stats(entries: Sequence[DatasetEntry]) -> dict:
    """Counts and histograms for a dataset, including a re-check of skeleton
    uniqueness."""
    by_split: dict[str, int] = {}
    depth_hist: dict[int, int] = {}
    vars_hist: dict[int, int] = {}
    op_freq: dict[str, int] = {}
    fn_freq: dict[str, int] = {}
    skeleton_counts: dict[str, int] = {}
    for e in entries:
        rec = e.record
        by_split[rec.split] = by_split.get(rec.split, 0) + 1
        depth_hist[rec.depth] = depth_hist.get(rec.depth, 0) + 1
        vars_hist[rec.n_vars] = vars_hist.get(rec.n_vars, 0) + 1
        features = extract_features(rec.skeleton)
        for op in features.operators:
            op_freq[op] = op_freq.get(op, 0) + 1
        for fn in features.functions:
            fn_freq[fn] = fn_freq.get(fn, 0) + 1
        key = rec.skeleton.canonical_string
        skeleton_counts[key] = skeleton_counts.get(key, 0) + 1
    duplicates = sum(c - 1 for c in skeleton_counts.values() if c > 1)
    return {
        "total": len(entries),
        "by_split": dict(sorted(by_split.items())),
        "depth_histogram": dict(sorted(depth_hist.items())),
        "n_vars_histogram": dict(sorted(vars_hist.items())),
        "operator_frequency": dict(sorted(op_freq.items())),
        "function_frequency": dict(sorted(fn_freq.items())),
        "duplicate_skeletons": duplicates,
    }
