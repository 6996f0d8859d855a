"""Infix parser for the equation grammar.

Grammar (whitespace-insensitive on input; to_string produces the canonical
spacing):

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | factor
    factor := base ('**' unary)?          # right-associative
    base   := NUMBER | 'C' | VAR | FUNC '(' expr ')' | '(' expr ')'

Powers bind tighter than unary minus, so "-x_0**2" is -(x_0**2). A unary
minus folds into a numeric literal (Constant(-2.5)) and otherwise becomes
Constant(-1) * operand, keeping the node set closed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .expressions import (
    UNARY_KINDS,
    BinaryOp,
    C,
    Constant,
    Expression,
    UnaryFn,
    Variable,
)


class ParseError(ValueError):
    """Syntax error with the offending position in the input string."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[+\-*/()])"
    r")"
)

_INT_RE = re.compile(r"\d+\Z")
_VAR_RE = re.compile(r"x_(\d+)\Z")


@dataclass(frozen=True)
class _Token:
    kind: str  # 'number' | 'name' | 'op' | 'end'
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None or m.lastgroup is None:
            stripped = text[i:].lstrip()
            if not stripped:
                break
            pos = len(text) - len(stripped)
            raise ParseError(f"unexpected character {stripped[0]!r}", pos)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), m.start(kind)))
        i = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        t = self.tok
        self.i += 1
        return t

    def accept_op(self, *ops: str) -> _Token | None:
        if self.tok.kind == "op" and self.tok.text in ops:
            return self.advance()
        return None

    def expect_op(self, op: str) -> None:
        if not self.accept_op(op):
            raise ParseError(f"expected {op!r}", self.tok.pos)

    def parse(self) -> Expression:
        expr = self.parse_expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected trailing input {self.tok.text!r}", self.tok.pos)
        return expr

    def parse_expr(self) -> Expression:
        node = self.parse_term()
        while True:
            t = self.accept_op("+", "-")
            if t is None:
                return node
            kind = "add" if t.text == "+" else "sub"
            node = BinaryOp(kind, node, self.parse_term())

    def parse_term(self) -> Expression:
        node = self.parse_unary()
        while True:
            t = self.accept_op("*", "/")
            if t is None:
                return node
            kind = "mul" if t.text == "*" else "div"
            node = BinaryOp(kind, node, self.parse_unary())

    def parse_unary(self) -> Expression:
        if self.accept_op("-"):
            operand = self.parse_unary()
            if isinstance(operand, Constant):
                return Constant(-operand.value)
            return BinaryOp("mul", Constant(-1), operand)
        return self.parse_factor()

    def parse_factor(self) -> Expression:
        base = self.parse_base()
        if self.accept_op("**"):
            return BinaryOp("pow", base, self.parse_unary())
        return base

    def parse_base(self) -> Expression:
        t = self.tok
        if t.kind == "number":
            self.advance()
            if _INT_RE.match(t.text):
                return Constant(int(t.text))
            return Constant(float(t.text))
        if t.kind == "name":
            self.advance()
            if t.text == "C":
                return C
            var = _VAR_RE.match(t.text)
            if var:
                return Variable(int(var.group(1)))
            if t.text in UNARY_KINDS:
                self.expect_op("(")
                inner = self.parse_expr()
                self.expect_op(")")
                return UnaryFn(t.text, inner)
            raise ParseError(f"unknown identifier {t.text!r}", t.pos)
        if self.accept_op("("):
            inner = self.parse_expr()
            self.expect_op(")")
            return inner
        if t.kind == "end":
            raise ParseError("unexpected end of input", t.pos)
        raise ParseError(f"expected a value, got {t.text!r}", t.pos)


def parse(text: str) -> Expression:
    """Parse an infix equation string into an expression tree."""
    return _Parser(text).parse()
