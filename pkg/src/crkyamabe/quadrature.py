"""Quadrature over the Heisenberg group.

Three grid classes:

- ``tensor``: tensor-product Gauss-Legendre in every real coordinate after
  the compactifying map ``x = L tan(pi xi / 2)``.  General, but the node
  count grows like ``m^(2n+1)``.
- ``unitary``: for integrands invariant under ``z -> Uz`` (``U`` unitary),
  integrates over ``(r, t)`` only with the exact sphere-shell weight
  ``2 pi^n r^(2n-1) / (n-1)!``; nodes sit at ``z = (r, 0, ..., 0)``.
- ``box``: tensor Gauss-Legendre on a bounded box, for integrands supported
  in it (bump perturbations).

Error estimates compare the rule with its refinement (node count doubled).
Reductions use ``math.fsum`` over a fixed node order, so results do not
depend on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import IntegrationError, ValidationError
from .heisenberg import ModelConvention

GRID_KINDS = ("tensor", "unitary", "box")


@lru_cache(maxsize=64)
def _gauss(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def mapped_line(m: int, scale: float):
    """Nodes/weights on the real line via ``x = L tan(pi xi / 2)``."""
    xi, w = _gauss(m)
    a = 0.5 * math.pi * xi
    x = scale * np.tan(a)
    wx = w * scale * 0.5 * math.pi / np.cos(a) ** 2
    return x, wx


def mapped_half_line(m: int, scale: float):
    """Nodes/weights on ``(0, inf)`` via ``r = L tan(pi (xi + 1) / 4)``."""
    xi, w = _gauss(m)
    a = 0.25 * math.pi * (xi + 1.0)
    r = scale * np.tan(a)
    wr = w * scale * 0.25 * math.pi / np.cos(a) ** 2
    return r, wr


def box_line(m: int, lo: float, hi: float):
    xi, w = _gauss(m)
    half = 0.5 * (hi - lo)
    return lo + half * (xi + 1.0), w * half


@dataclass(frozen=True)
class QuadratureGrid:
    """Grid description; ``level`` doubles the per-axis node count.

    ``points_per_axis`` is the count at level 0.  For ``box`` grids, ``lo`` and
    ``hi`` give the box corners (``2n+1`` coordinates each).
    """

    n: int
    kind: str = "unitary"
    level: int = 0
    points_per_axis: int = 48
    scale: float = 1.0
    lo: tuple | None = None
    hi: tuple | None = None

    def __post_init__(self):
        if self.kind not in GRID_KINDS:
            raise ValidationError(f"unknown grid kind {self.kind!r}; choose from {', '.join(GRID_KINDS)}")
        if self.n < 1 or self.level < 0 or self.points_per_axis < 2 or self.scale <= 0:
            raise ValidationError("grid needs n >= 1, level >= 0, points_per_axis >= 2, scale > 0")
        if self.kind == "box":
            if self.lo is None or self.hi is None:
                raise ValidationError("box grid needs lo and hi corners")
            lo, hi = tuple(map(float, self.lo)), tuple(map(float, self.hi))
            if len(lo) != 2 * self.n + 1 or len(hi) != 2 * self.n + 1 or any(a >= b for a, b in zip(lo, hi)):
                raise ValidationError("box corners must have 2n+1 coordinates with lo < hi")
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)

    @property
    def m(self) -> int:
        return self.points_per_axis * 2**self.level

    def refined(self, steps: int = 1) -> "QuadratureGrid":
        return replace(self, level=self.level + steps)

    @property
    def size(self) -> int:
        d = 2 * self.n + 1
        return self.m**2 if self.kind == "unitary" else self.m**d

    def nodes(self):
        """``(points, weights)`` with weights against ``dx dy dt`` (no volume constant)."""
        n, m = self.n, self.m
        d = 2 * n + 1
        if self.kind == "unitary":
            r, wr = mapped_half_line(m, self.scale)
            t, wt = mapped_line(m, self.scale)
            R, Tt = np.meshgrid(r, t, indexing="ij")
            shell = 2.0 * math.pi**n / math.factorial(n - 1)
            W = np.outer(wr * shell * r ** (2 * n - 1), wt)
            pts = np.zeros((m * m, d))
            pts[:, 0] = R.ravel()
            pts[:, -1] = Tt.ravel()
            return pts, W.ravel()
        if self.kind == "tensor":
            lines = [mapped_line(m, self.scale)] * d
        else:
            lines = [box_line(m, a, b) for a, b in zip(self.lo, self.hi)]
        grids = np.meshgrid(*[ln[0] for ln in lines], indexing="ij")
        wgrids = np.meshgrid(*[ln[1] for ln in lines], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        W = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
        return pts, W

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "level": self.level, "points_per_axis": self.points_per_axis, "scale": self.scale}
        if self.kind == "box":
            out["lo"] = list(self.lo)
            out["hi"] = list(self.hi)
        out["nodes"] = self.size
        return out


@dataclass
class IntegralResult:
    value: float
    error: float
    coarse: float
    grid: dict
    history: list = field(default_factory=list)

    @property
    def rel_error(self) -> float:
        return self.error / abs(self.value) if self.value != 0 else self.error

    def to_dict(self) -> dict:
        return {"value": self.value, "error": self.error, "coarse": self.coarse, "grid": self.grid, "history": self.history}


def evaluate_nodes(integrand, pts: np.ndarray, workers: int = 1, chunk: int = 20000) -> np.ndarray:
    """Evaluate a batched integrand over nodes in fixed-size chunks, in order.

    Returns shape ``(N,)`` for scalar integrands and ``(N, m)`` for
    integrands returning ``m`` columns.
    """
    chunks = [pts[i : i + chunk] for i in range(0, len(pts), chunk)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(integrand, chunks))
    else:
        parts = [integrand(c) for c in chunks]
    parts = [np.asarray(p, dtype=float) for p in parts]
    return np.concatenate([p.reshape(len(c), -1) if p.ndim > 1 else p for p, c in zip(parts, chunks)])


def _rule(grid: QuadratureGrid, integrand, conv: ModelConvention, weight, workers: int) -> np.ndarray:
    pts, W = grid.nodes()
    vals = evaluate_nodes(integrand, pts, workers)
    vals = vals.reshape(len(pts), -1)
    if weight is not None:
        vals = vals * evaluate_nodes(weight, pts, workers)[:, None]
    bad = ~np.all(np.isfinite(vals), axis=1)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise IntegrationError(f"non-finite integrand sample at node {pts[i].tolist()}", node=pts[i].tolist())
    prod = vals * W[:, None]
    return np.array([conv.volume_const * math.fsum(prod[:, j].tolist()) for j in range(prod.shape[1])])


def conformal_volume_weight(u_expr, conv: ModelConvention):
    """``e^{2(n+1)u}`` as a batched point function, for ``dV`` of ``e^{2u}`` times the flat form."""
    from .fields.jets import eval_values

    def weight(pts):
        return np.exp(2.0 * (conv.n + 1) * eval_values(u_expr, pts, conv.n))

    return weight


def integrate_many(
    grid: QuadratureGrid,
    integrand,
    conv: ModelConvention,
    conformal_weight=None,
    workers: int = 1,
    rel_tol: float | None = None,
    max_level: int | None = None,
) -> list:
    """Like :func:`integrate` for an integrand returning several columns; one result per column.

    Convergence with ``rel_tol`` is judged on every column.
    """
    if grid.n != conv.n:
        raise ValidationError("grid and convention disagree on n")
    weight = None
    if conformal_weight is not None:
        weight = conformal_weight if callable(conformal_weight) else conformal_volume_weight(conformal_weight, conv)
    g = grid
    prev = _rule(g, integrand, conv, weight, workers)
    history = [(g.level, g.size, prev)]
    top = grid.level + 1 if rel_tol is None else (max_level if max_level is not None else grid.level + 3)
    while True:
        g = g.refined()
        cur = _rule(g, integrand, conv, weight, workers)
        history.append((g.level, g.size, cur))
        err = np.abs(cur - prev)
        done = rel_tol is None or bool(np.all((err <= rel_tol * np.abs(cur)) | (cur == prev)))
        if done or g.level >= top:
            results = [
                IntegralResult(
                    float(cur[j]),
                    float(err[j]),
                    float(prev[j]),
                    g.to_dict(),
                    [{"level": lv, "nodes": sz, "value": float(v[j])} for lv, sz, v in history],
                )
                for j in range(len(cur))
            ]
            if not done:
                raise IntegrationError(
                    f"quadrature did not converge to rel_tol={rel_tol} by level {g.level}",
                    history=[r.history for r in results] if len(results) > 1 else results[0].history,
                )
            return results
        prev = cur


def integrate(
    grid: QuadratureGrid,
    integrand,
    conv: ModelConvention,
    conformal_weight=None,
    workers: int = 1,
    rel_tol: float | None = None,
    max_level: int | None = None,
) -> IntegralResult:
    """``int f dV`` with ``dV = kappa dx dy dt``, times ``e^{2(n+1)u}`` if a log factor ``u`` is given.

    ``integrand`` maps an ``(N, 2n+1)`` array of points to ``N`` values.
    Without ``rel_tol`` the rule is applied at ``grid`` and its refinement
    and the finer value is returned.  With ``rel_tol`` refinement continues
    until successive values agree; failure to converge by ``max_level``
    raises :class:`IntegrationError` with the refinement history.
    """
    res = integrate_many(grid, integrand, conv, conformal_weight, workers, rel_tol, max_level)
    if len(res) != 1:
        raise ValidationError("integrand returned several columns; use integrate_many")
    return res[0]


def rotation_invariance_defect(integrand, n: int, radii, ts, seed: int = 0) -> float:
    """Max relative change of ``integrand`` under random unitary rotations of ``z``.

    Guards the ``unitary`` grid: it is only valid for invariant integrands.
    """
    from .symmetric_functions import random_unitary

    rng = np.random.default_rng(seed)
    radii, ts = np.asarray(radii, float), np.asarray(ts, float)
    base = np.zeros((len(radii), 2 * n + 1))
    base[:, 0], base[:, -1] = radii, ts
    ref = np.asarray(integrand(base), dtype=float)
    U = random_unitary(rng, n)
    z = U @ np.eye(n, dtype=complex)[0]
    rot = np.zeros_like(base)
    rot[:, :n] = np.outer(radii, z.real)
    rot[:, n : 2 * n] = np.outer(radii, z.imag)
    rot[:, -1] = ts
    val = np.asarray(integrand(rot), dtype=float)
    scale = max(1e-300, float(np.max(np.abs(ref))))
    return float(np.max(np.abs(val - ref))) / scale
