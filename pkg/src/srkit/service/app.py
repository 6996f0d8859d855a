"""FastAPI service exposing the toolkit: expression utilities, metrics, reward
scoring, coefficient fitting, sampling, corpus generation, evaluation, and the
hypothesis search loop. Intended to run as a long-lived scorer, e.g. next to
an RL trainer or an evaluation farm."""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..chat import ChatBackendError
from ..dataset import (
    DatasetEntry,
    UnknownId,
    build_dataset,
    corpus_stats,
    entry_from_obj,
    entry_to_obj,
    evaluate_predictions,
)
from ..expressions import (
    DomainError,
    arity,
    count_placeholders,
    depth,
    evaluate,
    extract_features,
    extract_skeleton,
    to_string,
)
from ..fitting import Unfittable, fit
from ..generator import GenerationExhausted, GeneratorConfig
from ..metrics import acc_tau, form_similarity, r_squared
from ..parsing import ParseError, parse
from ..rewards import RewardWeights, compute_reward, group_advantages
from ..sampling import DataMatrix, NoiseSpec, UnsatisfiableDomain, sample_matrix
from ..search import EmptySearch, GeneratorFailure, SearchConfig, search
from . import schemas


def _matrix_from_points(points: list[list[float]], dom: float, distribution: str = "uniform") -> DataMatrix:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValueError("points must be rows of [x..., y]")
    return DataMatrix(x=arr[:, :-1], y=arr[:, -1], distribution=distribution, dom=dom)


def _skeleton(text: str):
    return extract_skeleton(parse(text))


def create_app() -> FastAPI:
    app = FastAPI(title="srkit service", version=__version__)

    @app.exception_handler(ParseError)
    @app.exception_handler(DomainError)
    @app.exception_handler(ValueError)
    @app.exception_handler(Unfittable)
    @app.exception_handler(UnsatisfiableDomain)
    @app.exception_handler(GenerationExhausted)
    @app.exception_handler(EmptySearch)
    @app.exception_handler(GeneratorFailure)
    async def _unprocessable(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(UnknownId)
    async def _unknown_id(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(ChatBackendError)
    async def _backend_down(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=502, content={"detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    # -- expressions ---------------------------------------------------------

    @app.post("/expressions/parse", response_model=schemas.ParseResponse)
    def parse_expression(req: schemas.ParseRequest) -> dict:
        expr = parse(req.text)
        return {
            "canonical": to_string(expr),
            "skeleton": extract_skeleton(expr).canonical_string,
            "n_vars": arity(expr),
            "depth": depth(expr),
            "placeholders": count_placeholders(expr),
        }

    @app.post("/expressions/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate_expression(req: schemas.EvaluateRequest) -> dict:
        return {"value": evaluate(parse(req.text), req.x)}

    @app.post("/expressions/features", response_model=schemas.FeaturesResponse)
    def features(req: schemas.FeaturesRequest) -> dict:
        fv = extract_features(_skeleton(req.skeleton))
        return {
            "operators": sorted(fv.operators),
            "functions": sorted(fv.functions),
            "variables": sorted(fv.variables),
            "constant_count": fv.constant_count,
            "structural_pattern": fv.structural_pattern,
            "complexity_score": fv.complexity_score,
        }

    # -- metrics -------------------------------------------------------------

    @app.post("/metrics/r2", response_model=schemas.R2Response)
    def metric_r2(req: schemas.R2Request) -> dict:
        return {"r2": r_squared(req.y_pred, req.y_true)}

    @app.post("/metrics/accuracy", response_model=schemas.AccuracyResponse)
    def metric_accuracy(req: schemas.AccuracyRequest) -> dict:
        return {"accepted": acc_tau(req.y_pred, req.y_true, req.tau)}

    @app.post("/metrics/form-similarity", response_model=schemas.FormSimilarityResponse)
    def metric_form_similarity(req: schemas.FormSimilarityRequest) -> dict:
        value, per_feature = form_similarity(_skeleton(req.pred), _skeleton(req.truth))
        return {"s_struct": value, "per_feature": per_feature}

    # -- rewards -------------------------------------------------------------

    @app.post("/rewards/score", response_model=schemas.RewardResponse)
    def reward_score(req: schemas.RewardRequest) -> dict:
        matrix = _matrix_from_points(req.points, req.dom)
        weights = RewardWeights(*req.weights)
        parts = compute_reward(
            req.pred,
            _skeleton(req.truth_skeleton),
            matrix,
            weights=weights,
            probe_seed=req.probe_seed,
            fit_seed=req.fit_seed,
        )
        return {
            "format": parts.format,
            "similarity": parts.similarity,
            "numerical": parts.numerical,
            "equiv": parts.equiv,
            "total": parts.total,
            "group_advantage": parts.group_advantage,
        }

    @app.post("/rewards/advantages", response_model=schemas.AdvantagesResponse)
    def reward_advantages(req: schemas.AdvantagesRequest) -> dict:
        return {"advantages": group_advantages(req.rewards).tolist()}

    # -- fitting and sampling --------------------------------------------------

    @app.post("/fit", response_model=schemas.FitResponse)
    def fit_skeleton(req: schemas.FitRequest) -> dict:
        matrix = _matrix_from_points(req.points, req.dom)
        result = fit(
            _skeleton(req.skeleton),
            matrix,
            budget=req.budget,
            restarts=req.restarts,
            seed=req.seed,
        )
        return {
            "expression": to_string(result.expression),
            "r2": result.r2,
            "converged": result.converged,
            "n_restarts_used": result.n_restarts_used,
        }

    @app.post("/sample", response_model=schemas.SampleResponse)
    def sample(req: schemas.SampleRequest) -> dict:
        matrix = sample_matrix(
            parse(req.expression),
            k=req.k,
            dom=req.dom,
            rng=np.random.default_rng(req.seed),
            noise=NoiseSpec(req.noise_sigma),
        )
        points = np.column_stack([matrix.x, matrix.y])
        return {"points": points.tolist(), "distribution": matrix.distribution}

    # -- datasets --------------------------------------------------------------

    @app.post("/generate", response_model=schemas.GenerateResponse)
    def generate(req: schemas.GenerateRequest) -> dict:
        cfg = GeneratorConfig(
            max_vars=req.max_vars,
            min_depth=req.min_depth,
            max_depth=req.max_depth,
            seed=req.seed,
            target_count=req.count,
            dom=req.dom,
        )
        entries = build_dataset(
            cfg, k=req.points, noise_sigma=req.noise_sigma, test_fraction=req.test_fraction
        )
        return {"records": [entry_to_obj(e) for e in entries]}

    @app.post("/stats", response_model=schemas.StatsResponse)
    def stats(req: schemas.StatsRequest) -> dict:
        entries = [entry_from_obj(r.model_dump()) for r in req.records]
        return corpus_stats(entries)

    @app.post("/evaluate", response_model=schemas.EvaluatePredictionsResponse)
    def evaluate_against(req: schemas.EvaluatePredictionsRequest) -> dict:
        entries = [entry_from_obj(r.model_dump()) for r in req.records]
        report = evaluate_predictions(
            entries, req.predictions, tau=req.tau, fit_seed=req.fit_seed
        )
        return {
            "summary": {
                "s_struct": report.summary.s_struct,
                "acc_tau": report.summary.acc_tau,
                "r2": report.summary.r2,
                "r2_unclipped": report.summary.r2_unclipped,
                "count": report.summary.count,
            },
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
            "tau": report.tau,
        }

    # -- search ----------------------------------------------------------------

    @app.post("/search", response_model=schemas.SearchResponse)
    def run_search(req: schemas.SearchRequest) -> dict:
        matrix = _matrix_from_points(req.points, req.dom)
        cfg = SearchConfig(
            iterations=req.iterations,
            hypotheses_per_iter=req.hypotheses,
            prompt_points=req.prompt_points,
            verify_points=req.verify_points,
            generator=req.backend,
            temperature=req.temperature,
        )
        best, trace = search(matrix, cfg, seed=req.seed)
        return {
            "best": {"equation": best.equation, "score": best.score, "comments": best.comments},
            "trace": trace,
        }

    return app


app = create_app()
