"""Named fields used throughout the toolkit.

``v0`` is the Cayley factor of the standard sphere structure.  ``bump``,
``gaussian`` and ``monomial`` are test fields and perturbation directions.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .expr import BinOp, Const, FieldExpr, Func, Neg, Pow, Var

CATALOG = ("v0", "bump", "gaussian", "monomial")


def _const(c: float) -> FieldExpr:
    return Const(c) if c >= 0 else Neg(Const(-c))


def _sum(terms) -> FieldExpr:
    terms = list(terms)
    out = terms[0]
    for t in terms[1:]:
        out = BinOp("+", out, t)
    return out


def _prod(factors) -> FieldExpr:
    factors = list(factors)
    out = factors[0]
    for f in factors[1:]:
        out = BinOp("*", out, f)
    return out


def _shift(v: Var, c: float) -> FieldExpr:
    if c == 0:
        return v
    return BinOp("-", v, Const(c)) if c > 0 else BinOp("+", v, Const(-c))


def _coords(n: int):
    return [Var("x", i) for i in range(1, n + 1)] + [Var("y", i) for i in range(1, n + 1)] + [Var("t")]


def _get_n(params: dict) -> int:
    if "n" not in params:
        raise ValidationError("missing parameter 'n'")
    n = params["n"]
    if isinstance(n, bool) or int(n) != n or int(n) < 1:
        raise ValidationError(f"parameter 'n' must be a positive integer, got {n!r}")
    return int(n)


def _center(params: dict, n: int) -> np.ndarray:
    c = params.get("center")
    if c is None:
        return np.zeros(2 * n + 1)
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.shape != (2 * n + 1,) or not np.all(np.isfinite(c)):
        raise ValidationError(f"center must list {2 * n + 1} finite coordinates (x.., y.., t)")
    return c


def _positive(params: dict, key: str, default=None) -> float:
    if key not in params:
        if default is None:
            raise ValidationError(f"missing parameter {key!r}")
        return float(default)
    val = float(params[key])
    if not np.isfinite(val) or val <= 0:
        raise ValidationError(f"parameter {key!r} must be positive, got {params[key]!r}")
    return val


def v0_field(n: int) -> FieldExpr:
    """``|w + i|^{-n}`` with ``w = t + i|z|^2``, i.e. ``(t^2 + (1+|z|^2)^2)^{-n/2}``."""
    x = _coords(n)
    zz = _sum(Pow(v, 2.0) for v in x[:-1])
    return Pow(BinOp("+", Pow(x[-1], 2.0), Pow(BinOp("+", Const(1.0), zz), 2.0)), -n / 2.0)


def catalog_field(name: str, params: dict | None = None) -> FieldExpr:
    """Build a named field; every entry needs ``n``.

    - ``v0``: no further parameters.
    - ``bump``: ``radius`` (default 1), ``center`` (2n+1 coordinates, default
      origin), ``profile`` ``"smooth"`` (radial, C-infinity, support the ball
      ``|z-c|^2 + (t-c_t)^2 < R^2``) or ``"product"`` (tensor product of
      ``(1 - s^2)_+^4``, C^3, support the cube of half-width R).
    - ``gaussian``: ``a`` > 0 in ``exp(-a(|z|^2 + t^2))``.
    - ``monomial``: ``powers``, either 2n+1 nonnegative integers or a
      mapping from variable names to exponents; optional ``coeff``.
    """
    params = dict(params or {})
    if name not in CATALOG:
        raise ValidationError(f"unknown catalog field {name!r}; choose from {', '.join(CATALOG)}")
    n = _get_n(params)
    x = _coords(n)
    if name == "v0":
        return v0_field(n)
    if name == "gaussian":
        a = _positive(params, "a")
        r2 = _sum(Pow(v, 2.0) for v in x)
        return Func("exp", Neg(BinOp("*", Const(a), r2)))
    if name == "bump":
        R = _positive(params, "radius", 1.0)
        c = _center(params, n)
        profile = params.get("profile", "smooth")
        if profile == "smooth":
            r2 = _sum(Pow(_shift(v, ci), 2.0) for v, ci in zip(x, c))
            return Func("bump", BinOp("/", r2, Const(R * R)))
        if profile == "product":
            return _prod(
                Pow(Func("pos", BinOp("-", Const(1.0), Pow(BinOp("/", _shift(v, ci), Const(R)), 2.0))), 4.0)
                for v, ci in zip(x, c)
            )
        raise ValidationError(f"unknown bump profile {profile!r}; choose 'smooth' or 'product'")
    # monomial
    if "powers" not in params:
        raise ValidationError("missing parameter 'powers'")
    powers = params["powers"]
    names = [v.name for v in x]
    if isinstance(powers, dict):
        unknown = set(powers) - set(names)
        if unknown:
            raise ValidationError(f"unknown variables in powers: {sorted(unknown)}")
        exps = [powers.get(nm, 0) for nm in names]
    else:
        exps = list(powers)
        if len(exps) != 2 * n + 1:
            raise ValidationError(f"powers must list {2 * n + 1} exponents")
    if any(isinstance(e, bool) or int(e) != e or e < 0 for e in exps):
        raise ValidationError("monomial exponents must be nonnegative integers")
    coeff = float(params.get("coeff", 1.0))
    factors = [Pow(v, float(e)) if e > 1 else v for v, e in zip(x, exps) if e > 0]
    if coeff != 1.0 or not factors:
        factors.insert(0, _const(coeff))
    return _prod(factors)


def support_box(name: str, params: dict | None = None):
    """Axis-aligned box ``(lo, hi)`` containing the support of a bump, else None."""
    if name != "bump":
        return None
    params = dict(params or {})
    n = _get_n(params)
    R = _positive(params, "radius", 1.0)
    c = _center(params, n)
    return c - R, c + R
