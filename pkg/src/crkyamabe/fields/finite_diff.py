"""Central-difference oracle for :class:`Jet3`.

Independent of the jet engine: it only evaluates plain values, in extended
precision (``np.longdouble``) so that the ``h^-3`` amplification of
roundoff in the third-order stencils stays below the O(h^2) truncation
error for ``h`` around 1e-4.
"""

from __future__ import annotations

import itertools

import numpy as np

from .expr import FieldExpr
from .jets import Jet3, eval_values


def _stencil(d: int):
    """Offsets (in units of h) and the recipe to combine them for every entry."""
    offsets = {}

    def off(*pairs):
        v = [0] * d
        for axis, step in pairs:
            v[axis] += step
        key = tuple(v)
        if key not in offsets:
            offsets[key] = len(offsets)
        return offsets[key]

    first = []
    for i in range(d):
        first.append([(off((i, 1)), 0.5), (off((i, -1)), -0.5)])
    second = {}
    for i in range(d):
        second[(i, i)] = [(off((i, 1)), 1.0), (off(), -2.0), (off((i, -1)), 1.0)]
        for j in range(i + 1, d):
            second[(i, j)] = [
                (off((i, 1), (j, 1)), 0.25),
                (off((i, 1), (j, -1)), -0.25),
                (off((i, -1), (j, 1)), -0.25),
                (off((i, -1), (j, -1)), 0.25),
            ]
    third = {}
    for i in range(d):
        third[(i, i, i)] = [
            (off((i, 2)), 0.5),
            (off((i, 1)), -1.0),
            (off((i, -1)), 1.0),
            (off((i, -2)), -0.5),
        ]
        for j in range(d):
            if j == i:
                continue
            # d^2/dx_i^2 of the central first difference in x_j
            rec = []
            for sj, wj in ((1, 0.5), (-1, -0.5)):
                rec += [
                    (off((i, 1), (j, sj)), wj),
                    (off((j, sj)), -2.0 * wj),
                    (off((i, -1), (j, sj)), wj),
                ]
            third[tuple(sorted((i, i, j)))] = rec
        for j, k in itertools.combinations(range(i + 1, d), 2):
            rec = []
            for si, sj, sk in itertools.product((1, -1), repeat=3):
                rec.append((off((i, si), (j, sj), (k, sk)), 0.125 * si * sj * sk))
            third[(i, j, k)] = rec
    return offsets, first, second, third


def fd_jet3(expr: FieldExpr, point, n: int, h: float = 1e-4) -> Jet3:
    """Central differences of orders 1-3 at a single point, truncation O(h^2).

    Raises the same :class:`EvaluationError` as the jet engine when a stencil
    node falls outside the expression's domain.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    x0 = np.asarray(point, dtype=np.longdouble)
    d = 2 * n + 1
    if x0.shape != (d,):
        raise ValueError(f"point must have {d} coordinates")
    offsets, first, second, third = _stencil(d)
    hl = np.longdouble(h)
    grid = np.array(list(offsets.keys()), dtype=np.longdouble)
    vals = eval_values(expr, x0 + hl * grid, n, dtype=np.longdouble)

    def comb(rec, scale):
        return float(sum(np.longdouble(w) * vals[i] for i, w in rec) / scale)

    value = float(vals[offsets[(0,) * d]])
    grad = np.array([comb(r, hl) for r in first])
    hess = np.zeros((d, d))
    for (i, j), r in second.items():
        hess[i, j] = hess[j, i] = comb(r, hl * hl)
    tens = np.zeros((d, d, d))
    for key, r in third.items():
        v = comb(r, hl**3)
        for p in set(itertools.permutations(key)):
            tens[p] = v
    return Jet3(np.array(value), grad, hess, tens, np.asarray(point, dtype=float))


def jet_agreement(ad: Jet3, fd: Jet3) -> tuple:
    """Per-order discrepancy ``max|AD - FD| / max(1, max|AD|)`` for orders 1, 2, 3."""
    out = []
    for a, b in ((ad.grad, fd.grad), (ad.hess, fd.hess), (ad.third, fd.third)):
        scale = max(1.0, float(np.max(np.abs(a))))
        out.append(float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) / scale)
    return tuple(out)
