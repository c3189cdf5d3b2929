"""The k-Yamabe functional and its sphere constants.

For a power-form factor ``v`` (``theta = v^{p-2} Theta_0``, ``p = 2 + 2/n``)

    J_k(v) = int v^{p(1-k)+k} sigma_k(V/c) dV / (int v^p dV)^{1 - 2k/(np)},

and ``(2/n)^k J_k`` equals the total ``sigma_k`` curvature divided by
``vol^{1 - 2k/(np)}``, the quantity whose infimum is the sphere constant
``C(n,k) pi^k``.  The variational identity is checked on

    F_k(u) = int sigma_k(theta_u) dV_{theta_u} = int e^{2(n+1-k)u} sigma_k(S_lower/c) dV.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .conformal import ConformalStructure, _check_k, cotton_full_from, cotton_reduced_from, geometry, schouten_lower, v_tensor_lower
from .errors import HypothesisError, IntegrationError, ValidationError
from .fields.catalog import catalog_field, support_box, v0_field
from .fields.expr import BinOp, Const, FieldExpr, Func
from .fields.jets import eval_jet3, eval_values
from .heisenberg import ModelConvention, frame_derivatives
from .quadrature import QuadratureGrid, integrate_many, rotation_invariance_defect
from .symmetric_functions import sigma_all

COTTON_TOL = 1e-8


def pseudo_einstein_sigma(n: int, k: int, R: float) -> float:
    """``C(n,k) R^k / (2n(n+1))^k``: sigma_k of a pseudo-Einstein structure with scalar curvature R."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    _check_k(k, n)
    return math.comb(n, k) * R**k / (2.0 * n * (n + 1)) ** k


def sphere_target(n: int, k: int) -> float:
    return math.comb(n, k) * math.pi**k


def check_exponent(n: int, k: int) -> float:
    """Denominator exponent ``1 - 2k/(np)``; rejects the degenerate value 0."""
    e = 1.0 - k / (n + 1.0)
    if abs(e) < 1e-14:
        raise ValidationError(f"normalization exponent vanishes for n={n}, k={k}")
    return e


# ---------------------------------------------------------------------------
# integrands


def numerator_integrand(cs: ConformalStructure, k: int):
    """``v^{p(1-k)+k} sigma_k(V/c)`` as a batched point function."""
    p = cs.p

    def f(pts):
        g = geometry(cs, pts, check=False)
        sk = sigma_all(g.V / cs.conv.c, k)[..., k]
        return g.v ** (p * (1 - k) + k) * sk

    return f


def volume_integrand(cs: ConformalStructure):
    p = cs.p

    def f(pts):
        return eval_values(cs.factor, pts, cs.n) ** p

    return f


def _guard_unitary(grid: QuadratureGrid, integrands, n: int) -> float:
    if grid.kind != "unitary":
        return 0.0
    radii = np.array([0.3, 0.9, 1.7, 3.1])
    ts = np.array([-0.8, 0.2, 1.1, -2.3])
    defect = max(rotation_invariance_defect(f, n, radii, ts, seed=7) for f in integrands)
    if defect > 1e-8:
        raise ValidationError(
            f"integrand is not invariant under unitary rotations of z (defect {defect:.2e}); use a tensor grid"
        )
    return defect


@dataclass
class FunctionalReport:
    n: int
    k: int
    Y_k: float
    volume: float
    J_k: float
    lambda_estimate: float
    numerator: float
    grid: dict
    error: float
    history: list = field(default_factory=list)
    normalized_total: float = 0.0  # Y_k / volume^(1 - 2k/(np))

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_Jk(
    cs: ConformalStructure,
    k: int,
    grid: QuadratureGrid,
    workers: int = 1,
    rel_tol: float | None = None,
) -> FunctionalReport:
    """Both integrals of ``J_k`` with refinement error estimates."""
    if cs.factor_form != "power":
        cs = cs.converted()
    n = cs.n
    _check_k(k, n)
    e = check_exponent(n, k)
    num_f, vol_f = numerator_integrand(cs, k), volume_integrand(cs)
    _guard_unitary(grid, (num_f, vol_f), n)
    N, D = integrate_many(grid, lambda x: np.stack([num_f(x), vol_f(x)], axis=-1), cs.conv, workers=workers, rel_tol=rel_tol)
    if not D.value > 0:
        raise IntegrationError(f"volume integral is not positive ({D.value})", history=D.history)
    J = N.value / D.value**e
    lam = (2.0 / n) ** k * J
    Y = (2.0 / n) ** k * N.value
    rel = N.rel_error + e * D.rel_error
    history = [
        {"level": a["level"], "nodes": a["nodes"], "numerator": a["value"], "volume": b["value"],
         "lambda": (2.0 / n) ** k * a["value"] / b["value"] ** e}
        for a, b in zip(N.history, D.history)
    ]
    return FunctionalReport(
        n=n,
        k=k,
        Y_k=Y,
        volume=D.value,
        J_k=J,
        lambda_estimate=lam,
        numerator=N.value,
        grid=N.grid,
        error=abs(lam) * rel,
        history=history,
        normalized_total=Y / D.value**e,
    )


@dataclass
class SphereReport:
    n: int
    k: int
    estimate: float
    target: float
    deviation: float
    error: float
    pointwise_sigma: float
    pseudo_einstein: float
    consistency: float  # estimate vs sigma_k * volume^(2k/(np))
    functional: FunctionalReport

    def to_dict(self) -> dict:
        return asdict(self)


def sphere_structure(n: int, conv: ModelConvention | None = None) -> ConformalStructure:
    conv = ModelConvention(n) if conv is None else conv
    return ConformalStructure(conv, "power", v0_field(n))


def sphere_lambda(
    n: int,
    k: int,
    grid: QuadratureGrid | None = None,
    conv: ModelConvention | None = None,
    workers: int = 1,
    rel_tol: float | None = None,
    seed: int = 0,
) -> SphereReport:
    """``(2/n)^k J_k(v0)`` against ``C(n,k) pi^k``, with the pointwise cross-checks."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    _check_k(k, n)
    cs = sphere_structure(n, conv)
    grid = QuadratureGrid(n, "unitary", 0, 32, 1.0) if grid is None else grid
    rep = evaluate_Jk(cs, k, grid, workers=workers, rel_tol=rel_tol)
    # pointwise: the mixed Schouten block is scalar, so sigma_k is constant
    pts = np.random.default_rng(seed).standard_normal((8, 2 * n + 1))
    g = geometry(cs, pts)
    s = sigma_all(g.S_mixed, k)
    sk = float(np.mean(s[:, k]))
    # scalar curvature from sigma_1 = R / (2(n+1))
    R = float(np.mean(s[:, 1])) * 2.0 * (n + 1)
    pe = pseudo_einstein_sigma(n, k, R)
    chain = sk * rep.volume ** (k / (n + 1.0))
    target = sphere_target(n, k)
    return SphereReport(
        n=n,
        k=k,
        estimate=rep.lambda_estimate,
        target=target,
        deviation=abs(rep.lambda_estimate - target) / target,
        error=rep.error,
        pointwise_sigma=sk,
        pseudo_einstein=pe,
        consistency=abs(rep.lambda_estimate - chain) / abs(chain),
        functional=rep,
    )


# ---------------------------------------------------------------------------
# variational identity


def sphere_log_factor(n: int) -> FieldExpr:
    """``u = log(v0)/n``, the log form of the sphere factor."""
    return BinOp("/", Func("log", v0_field(n)), Const(float(n)))


def bump_direction(n: int, radius: float = 0.8, center=None, profile: str = "smooth") -> tuple:
    params = {"n": n, "radius": radius, "profile": profile}
    if center is not None:
        params["center"] = list(center)
    return catalog_field("bump", params), support_box("bump", params)


def _support_samples(phi: FieldExpr, box, n: int, count: int, seed: int) -> np.ndarray:
    lo, hi = np.asarray(box[0]), np.asarray(box[1])
    rng = np.random.default_rng(seed)
    pts = lo + (hi - lo) * rng.random((8 * count, 2 * n + 1))
    inside = eval_values(phi, pts, n) != 0.0
    return pts[inside][:count]


def cotton_on_support(u: FieldExpr, phi: FieldExpr, box, conv: ModelConvention, count: int = 256, seed: int = 0) -> dict:
    """Max full and reduced Cotton norms at random points of ``supp phi``."""
    pts = _support_samples(phi, box, conv.n, count, seed)
    if len(pts) == 0:
        raise ValidationError("direction field vanishes on its support box")
    jet = eval_jet3(u, pts, conv.n, 3)
    cj = frame_derivatives(jet, None, conv)
    full = cotton_full_from(cj, schouten_lower(cj, conv), conv)
    red = cotton_reduced_from(cj)
    return {
        "full": float(np.max(np.linalg.norm(full.reshape(len(pts), -1), axis=-1))),
        "reduced": float(np.max(np.linalg.norm(red.reshape(len(pts), -1), axis=-1))),
        "samples": int(len(pts)),
    }


def _Fk_density(cj, u_val, conv: ModelConvention, k: int) -> np.ndarray:
    n = conv.n
    sk = sigma_all(schouten_lower(cj, conv) / conv.c, k)[..., k]
    return np.exp(2.0 * (n + 1 - k) * u_val) * sk


@dataclass
class VariationReport:
    n: int
    k: int
    direction: str
    fd_derivative: float
    fd_half_step: float
    fd_richardson: float
    integral: float  # int phi sigma_k dV_theta
    predicted_stated: float  # -2(n+k+1) * integral
    predicted_consistent: float  # 2(n+1-k) * integral
    gap_stated: float
    gap_consistent: float
    abs_gap_stated: float
    abs_gap_consistent: float
    step: float
    quadrature_error: float
    cotton_full: float
    cotton_reduced: float
    grid: dict

    def passed(self, rtol: float = 1e-3, atol: float = 1e-8, which: str = "stated") -> bool:
        gap, ab = (
            (self.gap_stated, self.abs_gap_stated) if which == "stated" else (self.gap_consistent, self.abs_gap_consistent)
        )
        return gap <= rtol or ab <= atol

    def to_dict(self) -> dict:
        return asdict(self)


def stated_coefficient(n: int, k: int) -> float:
    return -2.0 * (n + k + 1)


def consistent_coefficient(n: int, k: int) -> float:
    return 2.0 * (n + 1 - k)


def _gap(a: float, b: float) -> tuple:
    diff = abs(a - b)
    ref = max(abs(a), abs(b))
    return (diff / ref if ref > 0 else 0.0), diff


def variational_derivative(
    u: FieldExpr,
    phi: FieldExpr,
    k: int,
    grid: QuadratureGrid,
    step: float = 1e-4,
    conv: ModelConvention | None = None,
    workers: int = 1,
    cotton_tol: float = COTTON_TOL,
    box=None,
) -> VariationReport:
    """Central difference of ``F_k`` along ``u + s phi`` against ``c int phi sigma_k dV``.

    ``grid`` must be a box grid covering ``supp phi``; ``F_k(u + s phi) -
    F_k(u - s phi)`` vanishes outside it, so only the box is integrated.
    The vanishing-Cotton hypothesis is checked with the full Cotton
    tensor at random points of the support.
    """
    conv = ModelConvention(grid.n) if conv is None else conv
    n = conv.n
    _check_k(k, n)
    if grid.kind != "box":
        raise ValidationError("variational_derivative needs a box grid over the support of phi")
    if step <= 0:
        raise ValidationError("step must be positive")
    box = (grid.lo, grid.hi) if box is None else box
    cot = cotton_on_support(u, phi, box, conv)
    if cot["full"] > cotton_tol:
        raise HypothesisError(
            f"Cotton tensor of the base does not vanish on supp(phi): max norm {cot['full']:.3e} > {cotton_tol:g}",
            max_violation=cot["full"],
        )

    def pointwise(pts):
        uj = eval_jet3(u, pts, n, 2)
        pj = eval_jet3(phi, pts, n, 2)
        cu = frame_derivatives(uj, None, conv)
        cp = frame_derivatives(pj, None, conv)
        vals = [
            _Fk_density(cu.axpy(s, cp), uj.value + s * pj.value, conv, k)
            for s in (step, -step, 0.5 * step, -0.5 * step)
        ]
        out = np.empty((len(pts), 3))
        out[:, 0] = (vals[0] - vals[1]) / (2 * step)
        out[:, 1] = (vals[2] - vals[3]) / step
        sk_theta = np.exp(-2.0 * k * uj.value) * sigma_all(schouten_lower(cu, conv) / conv.c, k)[..., k]
        out[:, 2] = pj.value * sk_theta * np.exp(2.0 * (n + 1) * uj.value)
        return out

    fd, half, integral = integrate_many(grid, pointwise, conv, workers=workers)
    rich = (4.0 * half.value - fd.value) / 3.0
    ps = stated_coefficient(n, k) * integral.value
    pc = consistent_coefficient(n, k) * integral.value
    gs, ags = _gap(rich, ps)
    gc, agc = _gap(rich, pc)
    qerr = max(fd.error, half.error, abs(consistent_coefficient(n, k)) * integral.error)
    return VariationReport(
        n=n,
        k=k,
        direction=str(phi),
        fd_derivative=fd.value,
        fd_half_step=half.value,
        fd_richardson=rich,
        integral=integral.value,
        predicted_stated=ps,
        predicted_consistent=pc,
        gap_stated=gs,
        gap_consistent=gc,
        abs_gap_stated=ags,
        abs_gap_consistent=agc,
        step=step,
        quadrature_error=qerr,
        cotton_full=cot["full"],
        cotton_reduced=cot["reduced"],
        grid=half.grid,
    )


# ---------------------------------------------------------------------------
# criticality of the sphere factor


@dataclass
class CriticalityReport:
    n: int
    k: int
    derivatives: list  # relative directional derivatives dJ/J
    labels: list
    max_abs: float
    J: float

    def to_dict(self) -> dict:
        return asdict(self)


def criticality_check(
    k: int,
    grid: QuadratureGrid,
    directions: list,
    conv: ModelConvention | None = None,
    step: float = 1e-4,
    box_points: int = 16,
    workers: int = 1,
    include_scale: bool = True,
) -> CriticalityReport:
    """Relative directional derivatives of ``J_k`` at ``v0``.

    ``directions`` holds ``(phi, box)`` pairs of compactly supported fields
    with a support box.  Each is rescaled so that ``max |phi| / v0 = 1`` on its
    support, making the derivatives comparable.  ``grid`` (unitary) provides
    the unperturbed integrals; perturbed ones differ only on the box.
    """
    n = grid.n
    conv = ModelConvention(n) if conv is None else conv
    _check_k(k, n)
    e = check_exponent(n, k)
    cs = sphere_structure(n, conv)
    p = cs.p
    base = evaluate_Jk(cs, k, grid, workers=workers)
    N0, D0 = base.numerator, base.volume
    v0 = cs.factor
    a = p * (1 - k) + k

    def dens(v_jet):
        cj = frame_derivatives(v_jet, None, conv, order=2)
        V = v_tensor_lower(cj, v_jet.value, conv)
        return v_jet.value**a * sigma_all(V / conv.c, k)[..., k], v_jet.value**p

    derivs, labels = [], []
    for phi, box in directions:
        lo, hi = np.asarray(box[0], float), np.asarray(box[1], float)
        bg = QuadratureGrid(n, "box", 0, box_points, 1.0, tuple(lo), tuple(hi))
        pts, _ = bg.nodes()
        ratio = np.abs(eval_values(phi, pts, n)) / eval_values(v0, pts, n)
        scale = float(ratio.max())
        if scale == 0:
            raise ValidationError("direction vanishes on its box")

        def pieces(pts, phi=phi, scale=scale):
            vj = eval_jet3(v0, pts, n, 2)
            pj = eval_jet3(phi, pts, n, 2).scale(1.0 / scale)
            np_, dp = dens(vj.axpy(step, pj))
            nm, dm = dens(vj.axpy(-step, pj))
            return np.stack([(np_ - nm) / (2 * step), (dp - dm) / (2 * step)], axis=-1)

        rN, rD = integrate_many(bg, pieces, conv, workers=workers)
        dN, dD = rN.value, rD.value
        dJ_over_J = dN / N0 - e * dD / D0
        derivs.append(dJ_over_J)
        labels.append(str(phi))
    if include_scale:
        # v0 -> (1 +- s) v0, integrated on the full grid: J_k is scale invariant
        Js = []
        for sgn in (1.0, -1.0):
            scaled = ConformalStructure(conv, "power", BinOp("*", Const(1.0 + sgn * step), v0))
            Js.append(evaluate_Jk(scaled, k, grid, workers=workers).J_k)
        derivs.append((Js[0] - Js[1]) / (2 * step) / base.J_k)
        labels.append("scale")
    return CriticalityReport(n, k, derivs, labels, float(max(abs(d) for d in derivs)), base.J_k)
