"""Recursive-descent parser for the field expression language.

Grammar (lowest to highest precedence)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" exponent)?
    exponent:= number | "-" number | "(" "-"? number ")"
    atom    := number | ident | ident "(" expr ")" | "(" expr ")"

Identifiers are ``x1..xn``, ``y1..yn`` and ``t``; functions are
``exp log sin cos sqrt`` plus ``pos`` (positive part) and ``bump``
(the compactly supported ``exp(1 - 1/(1-s))`` profile, zero for ``s >= 1``).
"""

from __future__ import annotations

import re

from ..errors import ParseError, ValidationError
from .expr import FUNCTIONS, BinOp, Const, FieldExpr, Func, Neg, Pow, Var

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)
_VAR = re.compile(r"^(x|y)([1-9][0-9]*)$")


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            col = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[col]!r}", text, col)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, message: str, position: int | None = None):
        raise ParseError(message, self.text, self.tok[2] if position is None else position)

    def accept(self, value: str) -> bool:
        if self.tok[0] == "op" and self.tok[1] == value:
            self.i += 1
            return True
        return False

    def expect(self, value: str):
        if not self.accept(value):
            found = self.tok[1] or "end of input"
            self.error(f"expected {value!r}, found {found!r}")

    def parse(self) -> FieldExpr:
        e = self.expr()
        if self.tok[0] != "end":
            self.error(f"unexpected token {self.tok[1]!r}")
        return e

    def expr(self) -> FieldExpr:
        e = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.tok[1]
            self.i += 1
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> FieldExpr:
        e = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.tok[1]
            self.i += 1
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> FieldExpr:
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> FieldExpr:
        base = self.atom()
        if self.accept("^"):
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> float:
        paren = self.accept("(")
        sign = -1.0 if self.accept("-") else 1.0
        if self.tok[0] != "num":
            self.error("exponent must be a numeric literal")
        value = sign * float(self.tok[1])
        self.i += 1
        if paren:
            self.expect(")")
        return value

    def atom(self) -> FieldExpr:
        kind, value, pos = self.tok
        if kind == "num":
            self.i += 1
            return Const(float(value))
        if kind == "id":
            self.i += 1
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(value, arg)
            if value == "t":
                return Var("t")
            m = _VAR.match(value)
            if not m:
                raise ParseError(f"unknown identifier {value!r}", self.text, pos)
            idx = int(m.group(2))
            if idx > self.n:
                raise ParseError(f"variable index {idx} exceeds n={self.n} in {value!r}", self.text, pos)
            return Var(m.group(1), idx)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.error(f"unexpected {'end of input' if kind == 'end' else repr(value)}")


def parse_field(text: str, n: int) -> FieldExpr:
    """Parse ``text`` into an expression over ``x1..xn, y1..yn, t``."""
    if not isinstance(text, str) or not text.strip():
        raise ValidationError("field expression must be a nonempty string")
    if n < 1:
        raise ValidationError(f"CR dimension n must be >= 1, got {n}")
    return _Parser(text, n).parse()
