"""Hypothesis generators: the chat-backed generator used in production and a
local mutation generator so the whole search loop runs offline."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .chat import ChatClient
from .expressions import (
    BINARY_KINDS,
    UNARY_KINDS,
    BinaryOp,
    C,
    Constant,
    Expression,
    UnaryFn,
    Variable,
    extract_skeleton,
    to_string,
)
from .generator import GeneratorConfig, generate_tree
from .memory import MemoryBank
from .parsing import ParseError, parse


@dataclass
class GenerationContext:
    """Everything a generator may draw on for one request."""

    messages: list[dict]
    bank: MemoryBank
    n_vars: int
    rng: np.random.Generator
    temperature: float = 0.7


class HypothesisGenerator(Protocol):
    def generate(self, ctx: GenerationContext, n: int) -> list[str]:
        """Produce exactly n candidate equation strings (possibly invalid)."""
        ...


_EQ_PREFIX = re.compile(r"^\s*(?:y|f\s*\([^)]*\))\s*=\s*", re.IGNORECASE)


def sanitize_candidate(text: str) -> str:
    """Extract the equation string from a raw model reply: drop code fences and
    surrounding prose, strip 'y =' style prefixes and TeX dollar signs, and
    return the first line that parses (or the first cleaned line if none do)."""
    lines = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("```"):
            continue
        line = line.strip("$").strip()
        line = _EQ_PREFIX.sub("", line).strip()
        if line:
            lines.append(line)
    if not lines:
        return ""
    for line in lines:
        try:
            parse(line)
            return line
        except ParseError:
            continue
    return lines[0]


class ChatHypothesisGenerator:
    """Requests one completion per hypothesis from a chat backend."""

    def __init__(self, client: ChatClient):
        self.client = client

    def generate(self, ctx: GenerationContext, n: int) -> list[str]:
        return [self.client.complete(ctx.messages, ctx.temperature) for _ in range(n)]


# mutation mix for the local generator
_P_FRESH = 0.25  # propose a brand-new tree even when the bank is non-empty


class LocalMutationGenerator:
    """Offline generator: mutates bank members (operator/function swaps, term
    insertion and deletion, subtree replacement) and falls back to fresh random
    trees when the bank is empty."""

    def __init__(
        self,
        n_vars: int,
        unary_pool: tuple[str, ...] = UNARY_KINDS,
        binary_pool: tuple[str, ...] = BINARY_KINDS,
        fresh_max_depth: int = 6,
    ):
        self.n_vars = n_vars
        self.unary_pool = unary_pool
        self.binary_pool = binary_pool
        self._fresh_cfg = GeneratorConfig(
            max_vars=n_vars,
            min_depth=2,
            max_depth=fresh_max_depth,
            unary_pool=unary_pool,
            binary_pool=binary_pool,
        )

    def generate(self, ctx: GenerationContext, n: int) -> list[str]:
        out = []
        for _ in range(n):
            if len(ctx.bank) == 0 or ctx.rng.random() < _P_FRESH:
                out.append(to_string(generate_tree(self._fresh_cfg, ctx.rng)))
            else:
                entry = ctx.bank.entries[int(ctx.rng.integers(0, len(ctx.bank)))]
                skel = extract_skeleton(parse(entry.equation)).expr
                out.append(to_string(self._mutate(skel, ctx.rng)))
        return out

    # -- tree surgery -------------------------------------------------------

    def _mutate(self, expr: Expression, rng: np.random.Generator) -> Expression:
        ops = ["swap_operator", "swap_function", "insert_term", "delete_term", "replace_subtree"]
        nodes = _paths(expr)
        applicable = [op for op in ops if self._applicable(op, expr, nodes)]
        choice = applicable[int(rng.integers(0, len(applicable)))]
        if choice == "swap_operator":
            path = _pick(nodes, rng, lambda nd: isinstance(nd, BinaryOp))
            node = _at(expr, path)
            return _replace(expr, path, BinaryOp(self._swap_kind(node.kind, rng), node.left, node.right))
        if choice == "swap_function":
            path = _pick(nodes, rng, lambda nd: isinstance(nd, UnaryFn))
            node = _at(expr, path)
            others = [k for k in self.unary_pool if k != node.kind] or list(self.unary_pool)
            kind = others[int(rng.integers(0, len(others)))]
            return _replace(expr, path, UnaryFn(kind, node.child))
        if choice == "insert_term":
            return BinaryOp("add", expr, BinaryOp("mul", C, self._small_term(rng)))
        if choice == "delete_term":
            path = _pick(nodes, rng, lambda nd: isinstance(nd, BinaryOp))
            node = _at(expr, path)
            keep = node.left if rng.random() < 0.5 else node.right
            return _replace(expr, path, keep)
        # replace_subtree
        path = _pick(nodes, rng, lambda nd: True)
        fresh = BinaryOp("mul", C, self._small_term(rng))
        return _replace(expr, path, fresh)

    def _applicable(self, op: str, expr: Expression, nodes: list) -> bool:
        if op == "swap_operator" or op == "delete_term":
            return any(isinstance(nd, BinaryOp) for _, nd in nodes)
        if op == "swap_function":
            return bool(self.unary_pool) and any(isinstance(nd, UnaryFn) for _, nd in nodes)
        return True

    def _swap_kind(self, kind: str, rng: np.random.Generator) -> str:
        pairs = {"add": "sub", "sub": "add", "mul": "div", "div": "mul", "pow": "mul"}
        swapped = pairs[kind]
        return swapped if swapped in self.binary_pool else kind

    def _small_term(self, rng: np.random.Generator) -> Expression:
        var = Variable(int(rng.integers(0, self.n_vars)))
        u = rng.random()
        if u < 0.4 or not self.unary_pool:
            return var
        if u < 0.7:
            kind = self.unary_pool[int(rng.integers(0, len(self.unary_pool)))]
            return UnaryFn(kind, var)
        return BinaryOp("pow", var, Constant(int(rng.integers(2, 4))))


def _paths(expr: Expression) -> list[tuple[tuple[int, ...], Expression]]:
    out: list[tuple[tuple[int, ...], Expression]] = []

    def walk(node: Expression, path: tuple[int, ...]) -> None:
        out.append((path, node))
        if isinstance(node, BinaryOp):
            walk(node.left, path + (0,))
            walk(node.right, path + (1,))
        elif isinstance(node, UnaryFn):
            walk(node.child, path + (0,))

    walk(expr, ())
    return out


def _pick(nodes, rng: np.random.Generator, want) -> tuple[int, ...]:
    matches = [path for path, nd in nodes if want(nd)]
    return matches[int(rng.integers(0, len(matches)))]


def _at(expr: Expression, path: tuple[int, ...]) -> Expression:
    node = expr
    for step in path:
        node = (node.left, node.right)[step] if isinstance(node, BinaryOp) else node.child
    return node


def _replace(expr: Expression, path: tuple[int, ...], new: Expression) -> Expression:
    if not path:
        return new
    step, rest = path[0], path[1:]
    if isinstance(expr, BinaryOp):
        if step == 0:
            return BinaryOp(expr.kind, _replace(expr.left, rest, new), expr.right)
        return BinaryOp(expr.kind, expr.left, _replace(expr.right, rest, new))
    return UnaryFn(expr.kind, _replace(expr.child, rest, new))
