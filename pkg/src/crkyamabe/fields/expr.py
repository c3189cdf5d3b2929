"""Immutable expression trees for scalar fields on the Heisenberg group.

Coordinates are ordered ``(x_1..x_n, y_1..y_n, t)``; ``Var.axis(n)`` gives the
column of a variable in that layout.  Numeric constants are nonnegative:
a negative literal is ``Neg(Const(c))``, which keeps printing and parsing
structurally inverse to each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt", "pos", "bump")
BINARY_OPS = ("+", "-", "*", "/")

# binding strength used by the printer; mirrors the parser's grammar
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


class FieldExpr:
    """Base class of all expression nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)

    # arithmetic sugar for building trees in Python
    def __add__(self, other):
        return BinOp("+", self, _lift(other))

    def __radd__(self, other):
        return BinOp("+", _lift(other), self)

    def __sub__(self, other):
        return BinOp("-", self, _lift(other))

    def __rsub__(self, other):
        return BinOp("-", _lift(other), self)

    def __mul__(self, other):
        return BinOp("*", self, _lift(other))

    def __rmul__(self, other):
        return BinOp("*", _lift(other), self)

    def __truediv__(self, other):
        return BinOp("/", self, _lift(other))

    def __rtruediv__(self, other):
        return BinOp("/", _lift(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, exponent):
        return Pow(self, float(exponent))


def _lift(value) -> FieldExpr:
    if isinstance(value, FieldExpr):
        return value
    value = float(value)
    return Const(value) if value >= 0 else Neg(Const(-value))


@dataclass(frozen=True, eq=True)
class Const(FieldExpr):
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError(f"constants must be finite and nonnegative, got {self.value}")


@dataclass(frozen=True, eq=True)
class Var(FieldExpr):
    kind: str  # "x", "y" or "t"
    index: int = 0  # 1-based for x/y, 0 for t

    def __post_init__(self):
        if self.kind not in ("x", "y", "t"):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == "t" and self.index != 0:
            raise ValueError("t carries no index")
        if self.kind != "t" and self.index < 1:
            raise ValueError("x/y indices start at 1")

    @property
    def name(self) -> str:
        return "t" if self.kind == "t" else f"{self.kind}{self.index}"

    def axis(self, n: int) -> int:
        if self.kind == "t":
            return 2 * n
        return self.index - 1 + (n if self.kind == "y" else 0)


@dataclass(frozen=True, eq=True)
class Neg(FieldExpr):
    arg: FieldExpr


@dataclass(frozen=True, eq=True)
class BinOp(FieldExpr):
    op: str
    left: FieldExpr
    right: FieldExpr

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown operator {self.op!r}")


@dataclass(frozen=True, eq=True)
class Pow(FieldExpr):
    base: FieldExpr
    exponent: float

    def __post_init__(self):
        if not math.isfinite(self.exponent):
            raise ValueError("exponent must be finite")

    @property
    def integral(self) -> bool:
        return float(self.exponent).is_integer()


@dataclass(frozen=True, eq=True)
class Func(FieldExpr):
    name: str
    arg: FieldExpr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")


def variables(expr: FieldExpr) -> set:
    """All ``Var`` nodes occurring in ``expr``."""
    out = set()
    stack = [expr]
    while stack:
        e = stack.pop()
        if isinstance(e, Var):
            out.add(e)
        elif isinstance(e, (Neg, Func)):
            stack.append(e.arg)
        elif isinstance(e, BinOp):
            stack.extend((e.left, e.right))
        elif isinstance(e, Pow):
            stack.append(e.base)
    return out


def max_index(expr: FieldExpr) -> int:
    return max((v.index for v in variables(expr)), default=0)


def depth(expr: FieldExpr) -> int:
    if isinstance(expr, (Const, Var)):
        return 1
    if isinstance(expr, (Neg, Func)):
        return 1 + depth(expr.arg)
    if isinstance(expr, Pow):
        return 1 + depth(expr.base)
    return 1 + max(depth(expr.left), depth(expr.right))


def _num(value: float) -> str:
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _prec(expr: FieldExpr) -> int:
    if isinstance(expr, BinOp):
        return _PREC[expr.op]
    if isinstance(expr, Neg):
        return _PREC["neg"]
    if isinstance(expr, Pow):
        return _PREC["^"]
    return _PREC["atom"]


def to_text(expr: FieldExpr) -> str:
    """Print with the minimal parentheses the grammar needs."""
    if isinstance(expr, Const):
        return _num(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Func):
        return f"{expr.name}({to_text(expr.arg)})"
    if isinstance(expr, Neg):
        inner = to_text(expr.arg)
        # unary minus binds looser than ^ and tighter than * /
        if _prec(expr.arg) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(expr, Pow):
        base = to_text(expr.base)
        if _prec(expr.base) <= _PREC["^"]:
            base = f"({base})"
        e = expr.exponent
        exp_text = _num(e) if e >= 0 else f"(-{_num(-e)})"
        return f"{base}^{exp_text}"
    if isinstance(expr, BinOp):
        p = _PREC[expr.op]
        left = to_text(expr.left)
        if _prec(expr.left) < p:
            left = f"({left})"
        right = to_text(expr.right)
        # left associativity: a right operand of equal precedence needs parens
        if _prec(expr.right) <= p:
            right = f"({right})"
        return f"{left} {expr.op} {right}"
    raise TypeError(f"not an expression node: {expr!r}")
