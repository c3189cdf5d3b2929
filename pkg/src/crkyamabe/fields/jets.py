"""Degree-3 truncated multivariate Taylor arithmetic.

A :class:`Jet3` holds the value, gradient, Hessian and third-derivative
tensor of a scalar field at a batch of points; every array carries the
batch shape in front.  Derivatives are propagated exactly through the AST
(up to roundoff), so the Hessian and third tensor are symmetric by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EvaluationError
from .expr import BinOp, Const, FieldExpr, Func, Neg, Pow, Var, to_text


@dataclass
class Jet3:
    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    third: np.ndarray | None = None
    point: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.grad.shape[-1]

    @property
    def order(self) -> int:
        return 2 if self.third is None else 3

    def __getitem__(self, idx) -> "Jet3":
        return Jet3(
            self.value[idx],
            self.grad[idx],
            self.hess[idx],
            None if self.third is None else self.third[idx],
            None if self.point is None else self.point[idx],
        )

    # linear combinations are exact and cheap, which the variational code uses
    def __add__(self, other: "Jet3") -> "Jet3":
        return Jet3(
            self.value + other.value,
            self.grad + other.grad,
            self.hess + other.hess,
            None if self.third is None or other.third is None else self.third + other.third,
            self.point,
        )

    def scale(self, c: float) -> "Jet3":
        return Jet3(
            c * self.value, c * self.grad, c * self.hess, None if self.third is None else c * self.third, self.point
        )

    def axpy(self, c: float, other: "Jet3") -> "Jet3":
        """``self + c * other``."""
        return self + other.scale(c)

    def max_order_abs(self) -> tuple:
        return (
            float(np.max(np.abs(self.grad))),
            float(np.max(np.abs(self.hess))),
            float(np.max(np.abs(self.third))) if self.third is not None else 0.0,
        )


def _sym3(H: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``H_ij g_k + H_ik g_j + H_jk g_i``."""
    return H[..., :, :, None] * g[..., None, None, :] + H[..., :, None, :] * g[..., None, :, None] + H[..., None, :, :] * g[..., :, None, None]


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


def _outer3(a, b, c):
    return a[..., :, None, None] * b[..., None, :, None] * c[..., None, None, :]


def constant_jet(c: float, shape: tuple, d: int, order: int = 3) -> Jet3:
    return Jet3(
        np.full(shape, float(c)),
        np.zeros(shape + (d,)),
        np.zeros(shape + (d, d)),
        np.zeros(shape + (d, d, d)) if order >= 3 else None,
    )


def coordinate_jet(points: np.ndarray, axis: int, order: int = 3) -> Jet3:
    shape, d = points.shape[:-1], points.shape[-1]
    g = np.zeros(shape + (d,))
    g[..., axis] = 1.0
    return Jet3(
        points[..., axis].astype(float),
        g,
        np.zeros(shape + (d, d)),
        np.zeros(shape + (d, d, d)) if order >= 3 else None,
    )


def jet_mul(a: Jet3, b: Jet3) -> Jet3:
    av, bv = a.value[..., None], b.value[..., None]
    grad = a.grad * bv + av * b.grad
    hess = a.hess * bv[..., None] + av[..., None] * b.hess + _outer(a.grad, b.grad) + _outer(b.grad, a.grad)
    third = None
    if a.third is not None and b.third is not None:
        third = (
            a.third * bv[..., None, None]
            + av[..., None, None] * b.third
            + _sym3(a.hess, b.grad)
            + _sym3(b.hess, a.grad)
        )
    return Jet3(a.value * b.value, grad, hess, third)


def jet_compose(a: Jet3, f0, f1, f2, f3) -> Jet3:
    """Apply a univariate function given its derivatives at ``a.value``."""
    g = f1[..., None] * a.grad
    hess = f1[..., None, None] * a.hess + f2[..., None, None] * _outer(a.grad, a.grad)
    third = None
    if a.third is not None:
        third = (
            f1[..., None, None, None] * a.third
            + f2[..., None, None, None] * _sym3(a.hess, a.grad)
            + f3[..., None, None, None] * _outer3(a.grad, a.grad, a.grad)
        )
    return Jet3(np.asarray(f0, dtype=float), g, hess, third)


def _fail(expr: FieldExpr, mask: np.ndarray, points: np.ndarray, why: str):
    idx = tuple(np.argwhere(mask)[0]) if mask.ndim else ()
    pt = points[idx] if points is not None else None
    raise EvaluationError(
        f"{why} in subexpression '{to_text(expr)}' at point {None if pt is None else np.round(pt, 12).tolist()}",
        point=pt,
        subexpression=to_text(expr),
    )


def _bump_derivs(s: np.ndarray):
    """``g(s) = exp(1 - 1/(1-s))`` for ``s < 1``, else 0, and three derivatives."""
    inside = s < 1.0
    q = np.where(inside, 1.0 / np.where(inside, 1.0 - s, 1.0), 0.0)
    # beyond q ~ 700 the exponential underflows; clamp to avoid inf * 0
    live = inside & (q < 700.0)
    qs = np.where(live, q, 0.0)
    g = np.where(live, np.exp(1.0 - qs), 0.0)
    g1 = -qs**2 * g
    g2 = g * (qs**4 - 2 * qs**3)
    g3 = g * (-(qs**6) + 6 * qs**5 - 6 * qs**4)
    return g, g1, g2, g3


def _pow_derivs(x: np.ndarray, p: float):
    out = [np.power(x, p)]
    coef = 1.0
    for j in range(1, 4):
        coef *= p - (j - 1)
        if coef == 0.0:
            out.append(np.zeros_like(x))
        else:
            out.append(coef * np.power(x, p - j))
    return out


def _eval(expr: FieldExpr, points: np.ndarray, n: int, order: int, cache: dict) -> Jet3:
    key = id(expr)
    if key in cache:
        return cache[key][1]
    shape, d = points.shape[:-1], points.shape[-1]
    if isinstance(expr, Const):
        out = constant_jet(expr.value, shape, d, order)
    elif isinstance(expr, Var):
        out = coordinate_jet(points, expr.axis(n), order)
    elif isinstance(expr, Neg):
        out = _eval(expr.arg, points, n, order, cache).scale(-1.0)
    elif isinstance(expr, BinOp):
        a = _eval(expr.left, points, n, order, cache)
        b = _eval(expr.right, points, n, order, cache)
        if expr.op == "+":
            out = a + b
        elif expr.op == "-":
            out = a + b.scale(-1.0)
        elif expr.op == "*":
            out = jet_mul(a, b)
        else:
            bad = b.value == 0.0
            if np.any(bad):
                _fail(expr, bad, points, "division by zero")
            x = b.value
            inv = jet_compose(b, 1.0 / x, -1.0 / x**2, 2.0 / x**3, -6.0 / x**4)
            out = jet_mul(a, inv)
    elif isinstance(expr, Pow):
        a = _eval(expr.base, points, n, order, cache)
        x = a.value
        p = expr.exponent
        if not expr.integral:
            bad = x <= 0.0
            if np.any(bad):
                _fail(expr, bad, points, "non-integer power of a nonpositive base")
        elif p < 0:
            bad = x == 0.0
            if np.any(bad):
                _fail(expr, bad, points, "negative power of zero")
        if expr.integral and p == 2.0:
            out = jet_mul(a, a)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                out = jet_compose(a, *_pow_derivs(x, p))
    elif isinstance(expr, Func):
        a = _eval(expr.arg, points, n, order, cache)
        x = a.value
        name = expr.name
        if name == "exp":
            e = np.exp(x)
            out = jet_compose(a, e, e, e, e)
        elif name == "log":
            bad = x <= 0.0
            if np.any(bad):
                _fail(expr, bad, points, "log of a nonpositive value")
            out = jet_compose(a, np.log(x), 1.0 / x, -1.0 / x**2, 2.0 / x**3)
        elif name == "sqrt":
            bad = x <= 0.0
            if np.any(bad):
                _fail(expr, bad, points, "sqrt at a nonpositive value")
            r = np.sqrt(x)
            out = jet_compose(a, r, 0.5 / r, -0.25 / (r * x), 0.375 / (r * x * x))
        elif name == "sin":
            s, c = np.sin(x), np.cos(x)
            out = jet_compose(a, s, c, -s, -c)
        elif name == "cos":
            s, c = np.sin(x), np.cos(x)
            out = jet_compose(a, c, -s, -c, s)
        elif name == "pos":
            on = (x > 0.0).astype(float)
            zero = np.zeros_like(x)
            out = jet_compose(a, x * on, on, zero, zero)
        elif name == "bump":
            out = jet_compose(a, *_bump_derivs(x))
        else:  # pragma: no cover - Func validates names
            raise EvaluationError(f"unknown function {name}")
    else:
        raise TypeError(f"not an expression node: {expr!r}")
    # keep expr alive so id() stays unique while the cache lives
    cache[key] = (expr, out)
    return out


def eval_jet3(expr: FieldExpr, points, n: int, order: int = 3) -> Jet3:
    """Jets of ``expr`` at ``points`` (shape ``(..., 2n+1)``).

    ``order=2`` skips the third-derivative tensor, which is all the
    curvature integrands need.
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != 2 * n + 1:
        raise ValueError(f"points must have last axis 2n+1={2 * n + 1}, got {pts.shape}")
    if order not in (2, 3):
        raise ValueError("order must be 2 or 3")
    with np.errstate(over="ignore"):
        jet = _eval(expr, pts, n, order, {})
    jet = Jet3(
        np.broadcast_to(jet.value, pts.shape[:-1]).copy(),
        np.broadcast_to(jet.grad, pts.shape[:-1] + jet.grad.shape[-1:]).copy(),
        jet.hess.copy(),
        None if jet.third is None else jet.third.copy(),
        pts,
    )
    bad = ~np.isfinite(jet.value)
    if np.any(bad):
        _fail(expr, bad, pts, "non-finite value")
    return jet


def _eval_values(expr: FieldExpr, points: np.ndarray, n: int, dtype):
    if isinstance(expr, Const):
        return np.full(points.shape[:-1], expr.value, dtype=dtype)
    if isinstance(expr, Var):
        return points[..., expr.axis(n)]
    if isinstance(expr, Neg):
        return -_eval_values(expr.arg, points, n, dtype)
    if isinstance(expr, BinOp):
        a = _eval_values(expr.left, points, n, dtype)
        b = _eval_values(expr.right, points, n, dtype)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        bad = b == 0
        if np.any(bad):
            _fail(expr, bad, points, "division by zero")
        return a / b
    if isinstance(expr, Pow):
        a = _eval_values(expr.base, points, n, dtype)
        p = expr.exponent
        if not expr.integral:
            bad = a <= 0
            if np.any(bad):
                _fail(expr, bad, points, "non-integer power of a nonpositive base")
            return np.power(a, dtype(p))
        if p < 0 and np.any(a == 0):
            _fail(expr, a == 0, points, "negative power of zero")
        return np.power(a, int(p)) if p >= 0 else 1 / np.power(a, -int(p))
    if isinstance(expr, Func):
        a = _eval_values(expr.arg, points, n, dtype)
        name = expr.name
        if name == "log":
            bad = a <= 0
            if np.any(bad):
                _fail(expr, bad, points, "log of a nonpositive value")
            return np.log(a)
        if name == "sqrt":
            bad = a < 0
            if np.any(bad):
                _fail(expr, bad, points, "sqrt of a negative value")
            return np.sqrt(a)
        if name == "exp":
            return np.exp(a)
        if name == "sin":
            return np.sin(a)
        if name == "cos":
            return np.cos(a)
        if name == "pos":
            return np.where(a > 0, a, dtype(0))
        if name == "bump":
            inside = a < 1
            q = np.where(inside, 1 / np.where(inside, 1 - a, dtype(1)), dtype(0))
            return np.where(inside & (q < 700), np.exp(dtype(1) - q), dtype(0))
    raise TypeError(f"not an expression node: {expr!r}")


def eval_values(expr: FieldExpr, points, n: int, dtype=np.float64) -> np.ndarray:
    """Plain values of ``expr``; ``dtype=np.longdouble`` gives extended precision."""
    pts = np.asarray(points, dtype=dtype)
    with np.errstate(over="ignore"):
        out = np.asarray(_eval_values(expr, pts, n, dtype), dtype=dtype)
    return np.broadcast_to(out, pts.shape[:-1]).copy()


def factorial_weight(order: int) -> float:
    return 1.0 / math.factorial(order)
