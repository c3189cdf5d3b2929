"""Shared helpers: random expression trees that stay inside their domain."""

from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from crkyamabe.fields.expr import BinOp, Const, FieldExpr, Func, Neg, Pow, Var


def _vars(n: int):
    return [Var("x", i) for i in range(1, n + 1)] + [Var("y", i) for i in range(1, n + 1)] + [Var("t")]


def _one_plus_sq(e: FieldExpr) -> FieldExpr:
    return BinOp("+", Const(1.0), Pow(e, 2.0))


def random_expr(rng: np.random.Generator, n: int, depth: int = 3) -> FieldExpr:
    """A smooth expression defined on all of R^{2n+1}.

    Unsafe primitives are wrapped: log and sqrt act on ``1 + e^2``,
    quotients divide by ``1.5 + sin(e)``, and exp acts on ``sin(e)``.
    """
    if depth <= 1 or rng.random() < 0.2:
        if rng.random() < 0.75:
            return _vars(n)[rng.integers(2 * n + 1)]
        return Const(float(np.round(rng.uniform(0.1, 2.0), 3)))
    a = random_expr(rng, n, depth - 1)
    choice = rng.integers(11)
    if choice <= 2:
        b = random_expr(rng, n, depth - 1)
        return BinOp("+-*"[choice], a, b)
    if choice == 3:
        return BinOp("/", a, BinOp("+", Const(1.5), Func("sin", random_expr(rng, n, depth - 1))))
    if choice == 4:
        return Func("exp", Func("sin", a))
    if choice == 5:
        return Func("sin", a)
    if choice == 6:
        return Func("cos", a)
    if choice == 7:
        return Func("log", _one_plus_sq(a))
    if choice == 8:
        return Func("sqrt", _one_plus_sq(a))
    if choice == 9:
        return Pow(a, float(rng.integers(2, 4)))
    return Neg(a)


def expr_strategy(n: int = 1, max_leaves: int = 8):
    """Hypothesis strategy over domain-safe expressions (same wrappers as :func:`random_expr`)."""
    leaves = st.one_of(
        st.sampled_from(_vars(n)),
        st.floats(0.1, 3.0, allow_nan=False).map(lambda v: Const(round(v, 3))),
    )

    def extend(children):
        return st.one_of(
            st.tuples(st.sampled_from("+-*"), children, children).map(lambda t: BinOp(t[0], t[1], t[2])),
            children.map(lambda e: Func("sin", e)),
            children.map(lambda e: Func("exp", Func("sin", e))),
            children.map(lambda e: Func("log", _one_plus_sq(e))),
            st.tuples(children, st.integers(2, 3)).map(lambda t: Pow(t[0], float(t[1]))),
            children.map(Neg),
        )

    return st.recursive(leaves, extend, max_leaves=max_leaves)


# -- acceptance reporting ---------------------------------------------------

ACCEPTANCE_LINES: list = []


def acceptance_line(capsys, name: str, passed: bool, detail: str, tag: str | None = None) -> None:
    """Print one verdict line immediately and keep it for the end-of-run summary."""
    line = f"[{tag or ('PASS' if passed else 'FAIL')}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    with capsys.disabled():
        print("\n" + line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
