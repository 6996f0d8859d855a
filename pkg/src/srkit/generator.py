"""Random equation synthesis: hole-expansion tree building, coefficient
instantiation, uniqueness bookkeeping, and skeleton-disjoint splitting."""

from __future__ import annotations

import dataclasses
import hashlib
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .expressions import (
    BINARY_KINDS,
    UNARY_KINDS,
    BinaryOp,
    C,
    Constant,
    Expression,
    Skeleton,
    UnaryFn,
    Variable,
    arity,
    count_placeholders,
    depth,
    extract_skeleton,
    substitute_placeholders,
    variables_in,
)

# hole-expansion mix; terminals are forced once a hole sits at max depth
P_BINARY = 0.4
P_UNARY = 0.2
P_TERMINAL = 0.4
P_TERMINAL_CONST = 0.5  # otherwise a variable
P_COEFF_WRAP = 0.5      # chance a binary operand becomes C*(...)

COEFF_LOW, COEFF_HIGH = -5.0, 5.0
COEFF_MIN_ABS = 0.1
POW_EXPONENTS = (2, 3, 4)

TREE_ATTEMPTS = 1000          # per-tree cap on variable-coverage resampling
CORPUS_ATTEMPTS_PER_RECORD = 100


class GenerationExhausted(RuntimeError):
    """The attempt budget ran out before enough valid equations were found."""


@dataclass(frozen=True)
class GeneratorConfig:
    max_vars: int = 3
    min_depth: int = 4
    max_depth: int = 12
    unary_pool: tuple[str, ...] = UNARY_KINDS
    binary_pool: tuple[str, ...] = BINARY_KINDS
    seed: int = 0
    target_count: int = 1000
    dom: float = 10.0  # sampling range used by the evaluability screen

    def __post_init__(self):
        if self.max_vars < 1:
            raise ValueError("max_vars must be >= 1")
        if self.min_depth < 2:
            raise ValueError("min_depth must be >= 2")
        if self.max_depth < self.min_depth:
            raise ValueError("max_depth must be >= min_depth")
        if not self.binary_pool:
            raise ValueError("binary_pool must not be empty")
        if not set(self.binary_pool) <= set(BINARY_KINDS):
            raise ValueError(f"unknown binary kinds {set(self.binary_pool) - set(BINARY_KINDS)}")
        if not set(self.unary_pool) <= set(UNARY_KINDS):
            raise ValueError(f"unknown unary kinds {set(self.unary_pool) - set(UNARY_KINDS)}")
        if self.target_count < 0:
            raise ValueError("target_count must be >= 0")
        if self.dom <= 0:
            raise ValueError("dom must be positive")


@dataclass(frozen=True)
class EquationRecord:
    id: str
    expression: Expression
    skeleton: Skeleton
    n_vars: int
    depth: int
    split: str = "train"


class _MutNode:
    """Scaffold node; frozen into real expression nodes once no holes remain."""

    __slots__ = ("kind", "payload", "children", "depth", "allow_const")

    def __init__(self, kind, payload=None, children=None, depth=0, allow_const=True):
        self.kind = kind  # 'hole' | 'binary' | 'unary' | 'leaf'
        self.payload = payload
        self.children = children if children is not None else []
        self.depth = depth
        self.allow_const = allow_const


def _freeze(node: _MutNode) -> Expression:
    if node.kind == "leaf":
        return node.payload
    if node.kind == "unary":
        return UnaryFn(node.payload, _freeze(node.children[0]))
    return BinaryOp(node.payload, _freeze(node.children[0]), _freeze(node.children[1]))


def _build_once(cfg: GeneratorConfig, n_vars: int, rng: np.random.Generator) -> Expression:
    root = _MutNode("hole", depth=1)
    queue: deque[_MutNode] = deque([root])

    def operand(d: int) -> _MutNode:
        # optionally prefix the operand with a coefficient: C*(...)
        if d < cfg.max_depth and rng.random() < P_COEFF_WRAP:
            inner = _MutNode("hole", depth=d + 1, allow_const=False)
            queue.append(inner)
            return _MutNode("binary", "mul", [_MutNode("leaf", C), inner], depth=d)
        hole = _MutNode("hole", depth=d)
        queue.append(hole)
        return hole

    while queue:
        hole = queue.popleft()
        can_expand = hole.depth < cfg.max_depth
        w_binary = P_BINARY if can_expand else 0.0
        w_unary = P_UNARY if (can_expand and cfg.unary_pool) else 0.0
        u = rng.random() * (w_binary + w_unary + P_TERMINAL)
        if u < w_binary:
            kind = cfg.binary_pool[rng.integers(0, len(cfg.binary_pool))]
            hole.kind, hole.payload = "binary", kind
            if kind == "pow":
                base = operand(hole.depth + 1)
                exponent = _MutNode(
                    "leaf", Constant(int(POW_EXPONENTS[rng.integers(0, len(POW_EXPONENTS))]))
                )
                hole.children = [base, exponent]
            else:
                hole.children = [operand(hole.depth + 1), operand(hole.depth + 1)]
        elif u < w_binary + w_unary:
            kind = cfg.unary_pool[rng.integers(0, len(cfg.unary_pool))]
            child = _MutNode("hole", depth=hole.depth + 1)
            queue.append(child)
            hole.kind, hole.payload, hole.children = "unary", kind, [child]
        else:
            if hole.allow_const and rng.random() < P_TERMINAL_CONST:
                hole.kind, hole.payload = "leaf", C
            else:
                hole.kind, hole.payload = "leaf", Variable(int(rng.integers(0, n_vars)))
    return _freeze(root)


def generate_tree(cfg: GeneratorConfig, rng: np.random.Generator) -> Expression:
    """Draw one syntactically valid skeleton tree.

    The variable count is sampled uniformly from 1..max_vars per tree and the
    tree is resampled until every declared index actually appears.
    """
    for _ in range(TREE_ATTEMPTS):
        n_vars = int(rng.integers(1, cfg.max_vars + 1))
        tree = _build_once(cfg, n_vars, rng)
        if variables_in(tree) == set(range(n_vars)):
            return tree
    raise GenerationExhausted(f"no variable-covering tree after {TREE_ATTEMPTS} attempts")


def draw_coefficient(rng: np.random.Generator) -> float:
    """Uniform on [-5, 5] with |c| >= 0.1, rounded to 3 decimals."""
    while True:
        v = float(rng.uniform(COEFF_LOW, COEFF_HIGH))
        if abs(v) >= COEFF_MIN_ABS:
            return round(v, 3)


def instantiate_coefficients(skel: Skeleton, rng: np.random.Generator) -> Expression:
    """Replace every placeholder with an independently drawn constant."""
    n = count_placeholders(skel.expr)
    if n == 0:
        return skel.expr
    values = [draw_coefficient(rng) for _ in range(n)]
    return substitute_placeholders(skel.expr, values)


def is_unique(skel: Skeleton, seen: set[str]) -> bool:
    return skel.canonical_string not in seen


SCREEN_STREAM = 1
MATRIX_STREAM = 2


def derive_rng(seed: int, stream: int, canonical: str) -> np.random.Generator:
    """Per-equation random stream keyed by (seed, purpose, skeleton), so a
    screening verdict or a record's data matrix can be reproduced without
    replaying the whole corpus generation."""
    digest = hashlib.blake2b(canonical.encode("utf-8"), digest_size=8).digest()
    return np.random.default_rng(
        [seed & 0xFFFFFFFFFFFFFFFF, stream, int.from_bytes(digest, "big")]
    )


def screen_rng_for(seed: int, canonical: str) -> np.random.Generator:
    return derive_rng(seed, SCREEN_STREAM, canonical)


def generate_corpus(
    cfg: GeneratorConfig,
    rng: np.random.Generator | None = None,
    seen: set[str] | None = None,
    id_offset: int = 0,
) -> list[EquationRecord]:
    """Produce exactly target_count records passing the depth filter, skeleton
    uniqueness, and the evaluability screen. Deterministic in cfg.seed.

    rng/seen/id_offset let a caller continue an earlier stream, e.g. to top a
    corpus back up after discarding records downstream.
    """
    from .sampling import screen

    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    seen = seen if seen is not None else set()
    records: list[EquationRecord] = []
    budget = CORPUS_ATTEMPTS_PER_RECORD * cfg.target_count
    attempts = 0
    while len(records) < cfg.target_count:
        if attempts >= budget:
            raise GenerationExhausted(
                f"{len(records)}/{cfg.target_count} records after {attempts} tree draws"
            )
        attempts += 1
        tree = generate_tree(cfg, rng)
        d = depth(tree)
        if not (cfg.min_depth <= d <= cfg.max_depth):
            continue
        skel = extract_skeleton(tree)
        if not is_unique(skel, seen):
            continue
        expr = instantiate_coefficients(skel, rng)
        if not screen(expr, cfg.dom, screen_rng_for(cfg.seed, skel.canonical_string)):
            continue
        seen.add(skel.canonical_string)
        records.append(
            EquationRecord(
                id=f"eq-{id_offset + len(records):06d}",
                expression=expr,
                skeleton=skel,
                n_vars=arity(expr),
                depth=d,
            )
        )
    return records


def split_by_skeleton(
    records: list[EquationRecord], test_fraction: float, seed: int = 0
) -> tuple[list[EquationRecord], list[EquationRecord]]:
    """Partition records so no skeleton string appears in both splits.

    Identical skeletons travel together; the cut is a seeded shuffle over
    skeleton groups. Disjointness is re-verified before returning.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    if not records:
        return [], []
    groups: dict[str, list[EquationRecord]] = {}
    for rec in records:
        groups.setdefault(rec.skeleton.canonical_string, []).append(rec)
    keys = list(groups)
    order = np.random.default_rng(seed).permutation(len(keys))
    n_test = int(round(len(keys) * test_fraction))
    test_keys = {keys[i] for i in order[:n_test]}
    train: list[EquationRecord] = []
    test: list[EquationRecord] = []
    for rec in records:
        if rec.skeleton.canonical_string in test_keys:
            test.append(dataclasses.replace(rec, split="test"))
        else:
            train.append(dataclasses.replace(rec, split="train"))
    overlap = {r.skeleton.canonical_string for r in train} & {
        r.skeleton.canonical_string for r in test
    }
    if overlap:
        raise RuntimeError(f"skeleton overlap across splits: {sorted(overlap)[:3]}")
    return train, test


def load_generator_config(path: str | Path, **overrides) -> GeneratorConfig:
    """Read a key=value config file; unknown keys are rejected. Pools are
    comma-separated kind lists."""
    values: dict = {}
    fields = {f.name: f for f in dataclasses.fields(GeneratorConfig)}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in fields:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        if key in ("unary_pool", "binary_pool"):
            values[key] = tuple(v.strip() for v in val.split(",") if v.strip())
        elif key == "dom":
            values[key] = float(val)
        else:
            values[key] = int(val)
    values.update(overrides)
    return GeneratorConfig(**values)
