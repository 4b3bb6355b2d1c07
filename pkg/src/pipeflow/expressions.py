"""Tiny arithmetic expression language over the plane coordinates.

Grammar (precedence climbing):
    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | primary ('^' factor)?   # right-associative power
    primary:= NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

Identifiers: variables ``x`` and ``y``, constants ``pi`` and ``e``,
functions ``sin``, ``cos``, ``exp``.  Expressions compile to vectorized
evaluators over (n, 2) point arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
CONSTANTS = {"pi": math.pi, "e": math.e}
VARIABLES = ("x", "y")


class ExpressionError(ValueError):
    def __init__(self, message: str, pos: int):
        self.pos = pos
        super().__init__(f"{message} (column {pos + 1})")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(src: str) -> list[Token]:
    out = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
        elif c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and (src[j].isdigit() or src[j] == "."):
                j += 1
            if j < n and src[j] in "eE" and (j + 1 < n and (src[j + 1].isdigit() or src[j + 1] in "+-")):
                j += 2
                while j < n and src[j].isdigit():
                    j += 1
            out.append(Token("num", src[i:j], i))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            out.append(Token("ident", src[i:j], i))
            i = j
        elif c in "+-*/^(),":
            out.append(Token(c, c, i))
            i += 1
        else:
            raise ExpressionError(f"unexpected character {c!r}", i)
    out.append(Token("end", "", n))
    return out


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.next()
        if tok.kind != kind:
            raise ExpressionError(f"expected {kind!r}, found {tok.text or 'end of input'!r}", tok.pos)
        return tok

    def expr(self):
        node = self.term()
        while self.peek().kind in "+-":
            op = self.next().kind
            node = ("add" if op == "+" else "sub", node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek().kind in "*/":
            op = self.next().kind
            node = ("mul" if op == "*" else "div", node, self.factor())
        return node

    def factor(self):
        # unary minus binds looser than the right-associative power
        if self.peek().kind == "-":
            self.next()
            return ("neg", self.factor())
        node = self.primary()
        if self.peek().kind == "^":
            self.next()
            node = ("pow", node, self.factor())
        return node

    def primary(self):
        tok = self.next()
        if tok.kind == "num":
            try:
                return ("num", float(tok.text))
            except ValueError:
                raise ExpressionError(f"bad number {tok.text!r}", tok.pos) from None
        if tok.kind == "ident":
            name = tok.text
            if self.peek().kind == "(":
                if name not in FUNCTIONS:
                    raise ExpressionError(f"unknown function {name!r}", tok.pos)
                self.next()
                arg = self.expr()
                self.expect(")")
                return ("call", name, arg)
            if name in VARIABLES:
                return ("var", name)
            if name in CONSTANTS:
                return ("num", CONSTANTS[name])
            raise ExpressionError(f"unknown identifier {name!r}", tok.pos)
        if tok.kind == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExpressionError(f"unexpected token {tok.text or 'end of input'!r}", tok.pos)


def parse_ast(src: str):
    parser = _Parser(tokenize(src))
    node = parser.expr()
    tok = parser.peek()
    if tok.kind != "end":
        raise ExpressionError(f"trailing input {tok.text!r}", tok.pos)
    return node


def _eval(node, x, y):
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "var":
        return x if node[1] == "x" else y
    if kind == "neg":
        return -_eval(node[1], x, y)
    if kind == "call":
        return FUNCTIONS[node[1]](_eval(node[2], x, y))
    a = _eval(node[1], x, y)
    b = _eval(node[2], x, y)
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "div":
        return a / b
    if kind == "pow":
        return a ** b
    raise AssertionError(f"unknown node {kind}")


@dataclass(frozen=True)
class Expression:
    """Compiled scalar expression of the point coordinates."""

    source: str
    ast: tuple

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        val = _eval(self.ast, pts[:, 0], pts[:, 1])
        return np.broadcast_to(np.asarray(val, dtype=float), (len(pts),)).copy()


def parse_expression(src: str) -> Expression:
    return Expression(src.strip(), parse_ast(src))


@dataclass(frozen=True)
class VectorExpression:
    """Pair of scalar expressions evaluated as an (n, 2) field."""

    x_expr: Expression
    y_expr: Expression

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.column_stack([self.x_expr(pts), self.y_expr(pts)])


def split_vector_literal(src: str) -> list[str]:
    """Split "(a, b, ...)" at top-level commas."""
    s = src.strip()
    if not (s.startswith("(") and s.endswith(")")):
        raise ExpressionError("vector literal must be parenthesized", 0)
    inner = s[1:-1]
    parts, depth, start = [], 0, 0
    for i, c in enumerate(inner):
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
            if depth < 0:
                raise ExpressionError("unbalanced parentheses", i + 1)
        elif c == "," and depth == 0:
            parts.append(inner[start:i])
            start = i + 1
    parts.append(inner[start:])
    if depth != 0:
        raise ExpressionError("unbalanced parentheses", len(src) - 1)
    return [p.strip() for p in parts]


def parse_vector(src: str) -> VectorExpression:
    parts = split_vector_literal(src)
    if len(parts) != 2:
        raise ExpressionError(f"vector literal needs 2 components, found {len(parts)}", 0)
    return VectorExpression(parse_expression(parts[0]), parse_expression(parts[1]))
