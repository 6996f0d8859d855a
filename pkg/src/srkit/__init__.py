"""Symbolic regression toolkit: benchmark generation, evaluation metrics,
reward shaping, coefficient fitting, and an iterative hypothesis search."""

__version__ = "0.1.0"

from .expressions import (
    BinaryOp,
    C,
    Constant,
    ConstPlaceholder,
    DomainError,
    Expression,
    FeatureVector,
    Skeleton,
    UnaryFn,
    Variable,
    depth,
    evaluate,
    evaluate_rows,
    extract_features,
    extract_skeleton,
    to_string,
)
from .fitting import FitResult, Unfittable, fd_gradient, fit, fit_equation_text
from .generator import (
    EquationRecord,
    GenerationExhausted,
    GeneratorConfig,
    generate_corpus,
    generate_tree,
    instantiate_coefficients,
    is_unique,
    split_by_skeleton,
)
from .memory import MemoryBank, MemoryEntry
from .metrics import (
    AggregateSummary,
    MetricReport,
    acc_tau,
    aggregate,
    form_similarity,
    jaccard,
    pattern_sim,
    r_squared,
    ratio_sim,
)
from .parsing import ParseError, parse
from .prompts import build_prompt
from .rewards import (
    RewardBreakdown,
    RewardWeights,
    compute_reward,
    equiv_reward,
    format_reward,
    group_advantages,
    is_valid,
    numerical_reward,
    similarity_reward,
    total_reward,
)
from .sampling import DataMatrix, NoiseSpec, UnsatisfiableDomain, sample_matrix, screen
from .search import EmptySearch, GeneratorFailure, SearchConfig, revise, run_iteration, search

__all__ = [
    "__version__",
    "BinaryOp", "C", "Constant", "ConstPlaceholder", "DomainError", "Expression",
    "FeatureVector", "Skeleton", "UnaryFn", "Variable", "depth", "evaluate",
    "evaluate_rows", "extract_features", "extract_skeleton", "to_string",
    "FitResult", "Unfittable", "fd_gradient", "fit", "fit_equation_text",
    "EquationRecord", "GenerationExhausted", "GeneratorConfig", "generate_corpus",
    "generate_tree", "instantiate_coefficients", "is_unique", "split_by_skeleton",
    "MemoryBank", "MemoryEntry",
    "AggregateSummary", "MetricReport", "acc_tau", "aggregate", "form_similarity",
    "jaccard", "pattern_sim", "r_squared", "ratio_sim",
    "ParseError", "parse", "build_prompt",
    "RewardBreakdown", "RewardWeights", "compute_reward", "equiv_reward",
    "format_reward", "group_advantages", "is_valid", "numerical_reward",
    "similarity_reward", "total_reward",
    "DataMatrix", "NoiseSpec", "UnsatisfiableDomain", "sample_matrix", "screen",
    "EmptySearch", "GeneratorFailure", "SearchConfig", "revise", "run_iteration", "search",
]
