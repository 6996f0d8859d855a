"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


# -- expressions -------------------------------------------------------------

class ParseRequest(BaseModel):
    text: str


class ParseResponse(BaseModel):
    canonical: str
    skeleton: str
    n_vars: int
    depth: int
    placeholders: int


class EvaluateRequest(BaseModel):
    text: str
    x: list[float]


class EvaluateResponse(BaseModel):
    value: float


class FeaturesRequest(BaseModel):
    skeleton: str


class FeaturesResponse(BaseModel):
    operators: list[str]
    functions: list[str]
    variables: list[int]
    constant_count: int
    structural_pattern: str
    complexity_score: int


# -- metrics -----------------------------------------------------------------

class R2Request(BaseModel):
    y_pred: list[float]
    y_true: list[float]


class R2Response(BaseModel):
    r2: float


class AccuracyRequest(BaseModel):
    y_pred: list[float]
    y_true: list[float]
    tau: float = 0.05


class AccuracyResponse(BaseModel):
    accepted: int


class FormSimilarityRequest(BaseModel):
    pred: str
    truth: str


class FormSimilarityResponse(BaseModel):
    s_struct: float
    per_feature: dict[str, float]


# -- rewards -----------------------------------------------------------------

class RewardRequest(BaseModel):
    """Score one candidate against a ground-truth skeleton and its data points
    (each row is [x_0, ..., x_{n-1}, y])."""

    pred: str
    truth_skeleton: str
    points: list[list[float]]
    weights: list[float] = Field(default=[1.0, 2.0, 2.0, 4.0], min_length=4, max_length=4)
    probe_seed: int = 0
    fit_seed: int = 0
    dom: float = 10.0


class RewardResponse(BaseModel):
    format: float
    similarity: float
    numerical: float
    equiv: float
    total: float
    group_advantage: Optional[float] = None


class AdvantagesRequest(BaseModel):
    rewards: list[float]


class AdvantagesResponse(BaseModel):
    advantages: list[float]


# -- fitting and sampling ----------------------------------------------------

class FitRequest(BaseModel):
    skeleton: str
    points: list[list[float]]
    budget: int = 500
    restarts: int = 8
    seed: int = 0
    dom: float = 10.0


class FitResponse(BaseModel):
    expression: str
    r2: float
    converged: bool
    n_restarts_used: int


class SampleRequest(BaseModel):
    expression: str
    k: int = 200
    dom: float = 10.0
    seed: int = 0
    noise_sigma: float = 0.0


class SampleResponse(BaseModel):
    points: list[list[float]]
    distribution: str


# -- datasets ----------------------------------------------------------------

class DatasetRecord(BaseModel):
    """Wire twin of one dataset JSONL line."""

    id: str
    expression: str
    skeleton: str
    n_vars: int
    depth: int
    split: str
    dom: float
    distribution: str
    points: list[list[float]]
    noise_sigma: float


class GenerateRequest(BaseModel):
    count: int = Field(ge=0)
    seed: int = 0
    max_vars: int = 3
    min_depth: int = 4
    max_depth: int = 12
    dom: float = 10.0
    points: int = 200
    noise_sigma: float = 0.0
    test_fraction: Optional[float] = None


class GenerateResponse(BaseModel):
    records: list[DatasetRecord]


class StatsRequest(BaseModel):
    records: list[DatasetRecord]


class StatsResponse(BaseModel):
    total: int
    by_split: dict[str, int]
    depth_histogram: dict[int, int]
    n_vars_histogram: dict[int, int]
    operator_frequency: dict[str, int]
    function_frequency: dict[str, int]
    duplicate_skeletons: int


class EvaluatePredictionsRequest(BaseModel):
    records: list[DatasetRecord]
    predictions: dict[str, str]
    tau: float = 0.05
    fit_seed: int = 0


class EvaluationRowModel(BaseModel):
    id: str
    prediction: str
    r2: float
    acc_tau: int
    s_struct: float
    per_feature: dict[str, float]
    error: Optional[str] = None


class SummaryModel(BaseModel):
    s_struct: float
    acc_tau: float
    r2: float
    r2_unclipped: float
    count: int


class EvaluatePredictionsResponse(BaseModel):
    summary: SummaryModel
    rows: list[EvaluationRowModel]
    tau: float


# -- search ------------------------------------------------------------------

class SearchRequest(BaseModel):
    """Run the hypothesis loop on inline data points."""

    points: list[list[float]]
    iterations: int = 5
    hypotheses: int = 6
    prompt_points: int = 40
    verify_points: int = 5
    backend: str = "local"
    temperature: float = 0.7
    seed: int = 0
    dom: float = 10.0


class MemoryEntryModel(BaseModel):
    equation: str
    score: float
    comments: str


class SearchResponse(BaseModel):
    best: MemoryEntryModel
    trace: list[list[MemoryEntryModel]]
