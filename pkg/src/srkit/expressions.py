"""Expression trees: node types, canonical printing, evaluation, skeletons, features.

Every other module works in terms of these trees. Nodes are immutable, so
expressions can be shared freely across threads.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

BINARY_KINDS = ("add", "sub", "mul", "div", "pow")
UNARY_KINDS = ("sin", "cos", "arcsin", "arctan", "exp", "log", "sqrt")

BINARY_SYMBOLS = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "**"}

DIV_EPS = 1e-12


class DomainError(ArithmeticError):
    """Evaluation left the real domain (log/sqrt of a negative, |arcsin arg| > 1,
    near-zero denominator, or a non-finite intermediate)."""


@dataclass(frozen=True)
class Variable:
    index: int

    def __post_init__(self):
        if not isinstance(self.index, int) or self.index < 0:
            raise ValueError(f"variable index must be a nonnegative int, got {self.index!r}")


@dataclass(frozen=True)
class Constant:
    value: Union[int, float]

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, (int, float)):
            raise ValueError(f"constant value must be int or float, got {self.value!r}")
        if not math.isfinite(self.value):
            raise ValueError(f"constant value must be finite, got {self.value!r}")


@dataclass(frozen=True)
class ConstPlaceholder:
    """The abstract coefficient 'C' of a skeleton."""


@dataclass(frozen=True)
class UnaryFn:
    kind: str
    child: "Expression"

    def __post_init__(self):
        if self.kind not in UNARY_KINDS:
            raise ValueError(f"unknown unary function {self.kind!r}")


@dataclass(frozen=True)
class BinaryOp:
    kind: str
    left: "Expression"
    right: "Expression"

    def __post_init__(self):
        if self.kind not in BINARY_KINDS:
            raise ValueError(f"unknown binary operator {self.kind!r}")


Expression = Union[BinaryOp, UnaryFn, Variable, Constant, ConstPlaceholder]

C = ConstPlaceholder()


# ---------------------------------------------------------------------------
# traversal helpers

def iter_nodes(expr: Expression) -> Iterator[Expression]:
    """Depth-first, left-to-right iteration over all nodes."""
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, BinaryOp):
            stack.append(node.right)
            stack.append(node.left)
        elif isinstance(node, UnaryFn):
            stack.append(node.child)


def depth(expr: Expression) -> int:
    """Number of node layers; a lone leaf has depth 1."""
    if isinstance(expr, BinaryOp):
        return 1 + max(depth(expr.left), depth(expr.right))
    if isinstance(expr, UnaryFn):
        return 1 + depth(expr.child)
    return 1


def variables_in(expr: Expression) -> set[int]:
    return {n.index for n in iter_nodes(expr) if isinstance(n, Variable)}


def arity(expr: Expression) -> int:
    """1 + the largest variable index, or 0 for a variable-free expression."""
    vs = variables_in(expr)
    return max(vs) + 1 if vs else 0


def count_placeholders(expr: Expression) -> int:
    return sum(1 for n in iter_nodes(expr) if isinstance(n, ConstPlaceholder))


def validate(expr: Expression) -> None:
    """Structural check independent of any builder: correct node types, arities
    and leaf payloads all the way down. Raises ValueError on a malformed tree."""
    if isinstance(expr, BinaryOp):
        if expr.kind not in BINARY_KINDS:
            raise ValueError(f"bad binary kind {expr.kind!r}")
        validate(expr.left)
        validate(expr.right)
    elif isinstance(expr, UnaryFn):
        if expr.kind not in UNARY_KINDS:
            raise ValueError(f"bad unary kind {expr.kind!r}")
        validate(expr.child)
    elif isinstance(expr, Variable):
        if not isinstance(expr.index, int) or expr.index < 0:
            raise ValueError(f"bad variable index {expr.index!r}")
    elif isinstance(expr, Constant):
        if not isinstance(expr.value, (int, float)) or not math.isfinite(expr.value):
            raise ValueError(f"bad constant {expr.value!r}")
    elif not isinstance(expr, ConstPlaceholder):
        raise ValueError(f"not an expression node: {expr!r}")


# ---------------------------------------------------------------------------
# canonical printing

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_NEG = 2.5  # a negative literal carries its sign; binds tighter than * but looser than **
_PREC_POW = 3
_PREC_ATOM = 4

_KIND_PREC = {"add": _PREC_ADD, "sub": _PREC_ADD, "mul": _PREC_MUL, "div": _PREC_MUL, "pow": _PREC_POW}


def _prec(node: Expression) -> float:
    if isinstance(node, BinaryOp):
        return _KIND_PREC[node.kind]
    if isinstance(node, Constant) and node.value < 0:
        return _PREC_NEG
    return _PREC_ATOM


def _render(node: Expression) -> str:
    if isinstance(node, Variable):
        return f"x_{node.index}"
    if isinstance(node, ConstPlaceholder):
        return "C"
    if isinstance(node, Constant):
        return repr(node.value)
    if isinstance(node, UnaryFn):
        return f"{node.kind}({_render(node.child)})"
    op = node.kind
    lp, rp = _prec(node.left), _prec(node.right)
    if op == "pow":
        left = _paren(node.left) if lp <= _PREC_POW else _render(node.left)
        right = _paren(node.right) if rp < _PREC_POW else _render(node.right)
        return f"{left}**{right}"
    p = _KIND_PREC[op]
    left = _paren(node.left) if lp < p else _render(node.left)
    # equal precedence on the right must be bracketed so the tree re-parses
    # identically under left associativity
    right = _paren(node.right) if rp <= p else _render(node.right)
    sym = BINARY_SYMBOLS[op]
    if op in ("add", "sub"):
        return f"{left} {sym} {right}"
    return f"{left}{sym}{right}"


def _paren(node: Expression) -> str:
    return f"({_render(node)})"


def to_string(expr: Expression) -> str:
    """Canonical infix rendering: minimal parentheses, '**' for powers,
    function-call syntax, 'C' for placeholders. Deterministic."""
    return _render(expr)


# ---------------------------------------------------------------------------
# skeletons

@dataclass(frozen=True)
class Skeleton:
    """An expression with every coefficient abstracted to the placeholder C."""

    expr: Expression
    canonical_string: str


def _is_structural_exponent(node: Expression) -> bool:
    # integer-typed power exponents (x_0**2) are structure, not coefficients
    return isinstance(node, Constant) and type(node.value) is int


def _abstract_constants(node: Expression) -> Expression:
    if isinstance(node, Constant):
        return C
    if isinstance(node, (Variable, ConstPlaceholder)):
        return node
    if isinstance(node, UnaryFn):
        return UnaryFn(node.kind, _abstract_constants(node.child))
    left = _abstract_constants(node.left)
    if node.kind == "pow" and _is_structural_exponent(node.right):
        right = node.right
    else:
        right = _abstract_constants(node.right)
    return BinaryOp(node.kind, left, right)


def extract_skeleton(expr: Expression) -> Skeleton:
    """Replace every coefficient constant with the placeholder C.

    Adjacent placeholders are never merged and integer power exponents are
    kept literal, so the shape of the tree is untouched.
    """
    skel_expr = _abstract_constants(expr)
    return Skeleton(expr=skel_expr, canonical_string=to_string(skel_expr))


def skeleton_of_text(canonical: str) -> Skeleton:
    """Skeleton wrapper for an already-parsed canonical string (no abstraction)."""
    from .parsing import parse

    return extract_skeleton(parse(canonical))


# ---------------------------------------------------------------------------
# structural features

_VAR_TOKEN = re.compile(r"x_\d+")


@dataclass(frozen=True)
class FeatureVector:
    """The six structural features a skeleton is compared on."""

    operators: frozenset
    functions: frozenset
    variables: frozenset
    constant_count: int
    structural_pattern: str
    complexity_score: int


def max_paren_depth(text: str) -> int:
    deepest = cur = 0
    for ch in text:
        if ch == "(":
            cur += 1
            deepest = max(deepest, cur)
        elif ch == ")":
            cur -= 1
    return deepest


def extract_features(skel: Skeleton) -> FeatureVector:
    operators: set[str] = set()
    functions: set[str] = set()
    variables: set[int] = set()
    constant_count = 0
    n_binary = n_unary = 0
    for node in iter_nodes(skel.expr):
        if isinstance(node, BinaryOp):
            operators.add(BINARY_SYMBOLS[node.kind])
            n_binary += 1
        elif isinstance(node, UnaryFn):
            functions.add(node.kind)
            n_unary += 1
        elif isinstance(node, Variable):
            variables.add(node.index)
        elif isinstance(node, ConstPlaceholder):
            constant_count += 1
    pattern = _VAR_TOKEN.sub("VAR", skel.canonical_string)
    complexity = n_binary + n_unary + max_paren_depth(skel.canonical_string)
    return FeatureVector(
        operators=frozenset(operators),
        functions=frozenset(functions),
        variables=frozenset(variables),
        constant_count=constant_count,
        structural_pattern=pattern,
        complexity_score=complexity,
    )


# ---------------------------------------------------------------------------
# placeholder substitution

def substitute_placeholders(expr: Expression, values: Sequence[float]) -> Expression:
    """Replace placeholders, depth-first left-to-right, with the given constants."""
    values = list(values)
    if len(values) != count_placeholders(expr):
        raise ValueError(
            f"expected {count_placeholders(expr)} values, got {len(values)}"
        )
    it = iter(values)

    def sub(node: Expression) -> Expression:
        if isinstance(node, ConstPlaceholder):
            return Constant(float(next(it)))
        if isinstance(node, UnaryFn):
            return UnaryFn(node.kind, sub(node.child))
        if isinstance(node, BinaryOp):
            left = sub(node.left)
            return BinaryOp(node.kind, left, sub(node.right))
        return node

    return sub(expr)


def literal_constants(expr: Expression) -> list[float]:
    """Coefficient constants in depth-first order (structural exponents excluded)."""
    out: list[float] = []

    def visit(node: Expression) -> None:
        if isinstance(node, Constant):
            out.append(float(node.value))
        elif isinstance(node, UnaryFn):
            visit(node.child)
        elif isinstance(node, BinaryOp):
            visit(node.left)
            if node.kind == "pow" and _is_structural_exponent(node.right):
                return
            visit(node.right)

    visit(expr)
    return out


# ---------------------------------------------------------------------------
# evaluation

def evaluate(expr: Expression, x: Sequence[float]) -> float:
    """Evaluate at a single point with IEEE-754 double semantics.

    Raises DomainError when the computation leaves the real domain and
    ValueError when the tree still contains placeholders or references a
    variable beyond len(x).
    """

    def ev(node: Expression) -> float:
        if isinstance(node, Variable):
            if node.index >= len(x):
                raise ValueError(
                    f"x has {len(x)} entries but the expression uses x_{node.index}"
                )
            return float(x[node.index])
        if isinstance(node, Constant):
            return float(node.value)
        if isinstance(node, ConstPlaceholder):
            raise ValueError("cannot evaluate an expression containing placeholders")
        if isinstance(node, UnaryFn):
            u = ev(node.child)
            try:
                if node.kind == "sin":
                    out = math.sin(u)
                elif node.kind == "cos":
                    out = math.cos(u)
                elif node.kind == "arcsin":
                    if abs(u) > 1.0:
                        raise DomainError(f"arcsin argument {u} outside [-1, 1]")
                    out = math.asin(u)
                elif node.kind == "arctan":
                    out = math.atan(u)
                elif node.kind == "exp":
                    out = math.exp(u)
                elif node.kind == "log":
                    if u <= 0.0:
                        raise DomainError(f"log argument {u} not positive")
                    out = math.log(u)
                else:  # sqrt
                    if u < 0.0:
                        raise DomainError(f"sqrt argument {u} negative")
                    out = math.sqrt(u)
            except (ValueError, OverflowError) as exc:
                raise DomainError(str(exc)) from exc
        else:
            l = ev(node.left)
            r = ev(node.right)
            try:
                if node.kind == "add":
                    out = l + r
                elif node.kind == "sub":
                    out = l - r
                elif node.kind == "mul":
                    out = l * r
                elif node.kind == "div":
                    if abs(r) < DIV_EPS:
                        raise DomainError(f"denominator magnitude {abs(r)} below {DIV_EPS}")
                    out = l / r
                else:  # pow
                    out = math.pow(l, r)
            except (ValueError, OverflowError, ZeroDivisionError) as exc:
                raise DomainError(str(exc)) from exc
        if not math.isfinite(out):
            raise DomainError(f"non-finite intermediate {out}")
        return out

    return ev(expr)


def evaluate_rows(expr: Expression, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized evaluation over a K x C matrix of inputs.

    Returns (y, valid): y holds NaN wherever valid is False. Applies the same
    domain guards as evaluate(); used for screening and fitting where per-row
    exceptions would be too slow.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-d input matrix, got shape {x.shape}")
    n = x.shape[0]
    invalid = np.zeros(n, dtype=bool)

    def ev(node: Expression) -> np.ndarray:
        nonlocal invalid
        if isinstance(node, Variable):
            if node.index >= x.shape[1]:
                raise ValueError(
                    f"matrix has {x.shape[1]} columns but the expression uses x_{node.index}"
                )
            return x[:, node.index].copy()
        if isinstance(node, Constant):
            return np.full(n, float(node.value))
        if isinstance(node, ConstPlaceholder):
            raise ValueError("cannot evaluate an expression containing placeholders")
        if isinstance(node, UnaryFn):
            u = ev(node.child)
            if node.kind == "log":
                bad = u <= 0.0
                invalid |= bad
                out = np.log(np.where(bad, 1.0, u))
            elif node.kind == "sqrt":
                bad = u < 0.0
                invalid |= bad
                out = np.sqrt(np.where(bad, 0.0, u))
            elif node.kind == "arcsin":
                bad = np.abs(u) > 1.0
                invalid |= bad
                out = np.arcsin(np.where(bad, 0.0, u))
            elif node.kind == "sin":
                out = np.sin(u)
            elif node.kind == "cos":
                out = np.cos(u)
            elif node.kind == "arctan":
                out = np.arctan(u)
            else:  # exp
                out = np.exp(u)
        else:
            l = ev(node.left)
            r = ev(node.right)
            if node.kind == "add":
                out = l + r
            elif node.kind == "sub":
                out = l - r
            elif node.kind == "mul":
                out = l * r
            elif node.kind == "div":
                bad = np.abs(r) < DIV_EPS
                invalid |= bad
                out = l / np.where(bad, 1.0, r)
            else:  # pow
                out = np.power(l, r)
        bad = ~np.isfinite(out)
        invalid |= bad
        return np.where(invalid, 0.0, out)

    with np.errstate(all="ignore"):
        y = ev(expr)
    y = np.where(invalid, np.nan, y)
    return y, ~invalid
