"""Conformal deformations ``theta = e^{2u} Theta_0`` of the flat model.

A deformation is given either in log form (the field is ``u``) or in power
form (the field is ``v > 0`` with ``e^{2u} = v^{2/n}``).  All quantities are
computed by batched kernels over ``(N, 2n+1)`` point arrays; the
single-point functions wrap them.

Index conventions: ``S_lower[a, b]`` is the component ``S_{a bbar}`` in the
flat frame, so the deformed Levi form is ``e^{2u} c I`` and the mixed block
is ``S_mixed = e^{-2u} S_lower / c``.  On the flat base the undeformed
Schouten tensor vanishes, so

    S_{a bbar} = -2 u_{a bbar} + (i u_0 - |du|^2) h_{a bbar},

which is exactly hermitian because of the commutation identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, DomainError, FactorDomainError, PreconditionError, ValidationError
from .fields.expr import FieldExpr
from .fields.jets import eval_jet3, jet_compose
from .fields.point import HPoint, as_points
from .heisenberg import CovariantJet, ModelConvention, frame_derivatives, grad_norm_sq, sublaplacian
from .symmetric_functions import (
    HermitianMatrix,
    cone_from_sigmas,
    hermitize,
    newton_batch,
    sigma_all,
)

FORMS = ("log", "power")
SCHOUTEN_AGREEMENT_TOL = 1e-8


@dataclass(frozen=True)
class ConformalStructure:
    conv: ModelConvention
    factor_form: str
    factor: FieldExpr

    def __post_init__(self):
        if self.factor_form not in FORMS:
            raise ValidationError(f"factor_form must be 'log' or 'power', got {self.factor_form!r}")

    @property
    def n(self) -> int:
        return self.conv.n

    @property
    def p(self) -> float:
        return 2.0 + 2.0 / self.n

    def jets(self, points, order: int = 2) -> tuple:
        """``(u_jet, v_jet)`` at the points, the non-native one by exact composition.

        In power form ``v_jet`` is the parsed field and must be positive.
        """
        pts = as_points(points, self.n)
        base = eval_jet3(self.factor, pts, self.n, order)
        n = self.n
        if self.factor_form == "log":
            e = np.exp(n * base.value)
            v = jet_compose(base.scale(float(n)), e, e, e, e)
            v.point = pts
            return base, v
        bad = ~(base.value > 0)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise FactorDomainError(
                f"power-form factor must be positive; v = {base.value[i]:.6g} at point {pts[i].tolist()}",
                point=pts[i],
                subexpression=str(self.factor),
            )
        x = base.value
        u = jet_compose(base, np.log(x), 1.0 / x, -1.0 / x**2, 2.0 / x**3).scale(1.0 / n)
        u.point = pts
        return u, base

    def converted(self) -> "ConformalStructure":
        """The same structure in the other form (power <-> log) as a new expression."""
        from .fields.expr import BinOp, Const, Func

        n = float(self.n)
        if self.factor_form == "log":
            return ConformalStructure(self.conv, "power", Func("exp", BinOp("*", Const(n), self.factor)))
        return ConformalStructure(self.conv, "log", BinOp("/", Func("log", self.factor), Const(n)))

    def to_dict(self) -> dict:
        return {"form": self.factor_form, "factor": str(self.factor), "convention": self.conv.to_dict()}


@dataclass
class SchoutenAtPoint:
    S_lower: HermitianMatrix
    S_mixed: HermitianMatrix
    u: float
    point: np.ndarray
    agreement: float | None = None  # u-path vs V-path relative gap, power form only


@dataclass
class CottonAtPoint:
    C: np.ndarray  # [a, b, s] = C_{a bbar; s}

    def norm(self) -> float:
        return float(np.linalg.norm(self.C))


@dataclass
class Geometry:
    """Batched pointwise data of a deformed structure."""

    points: np.ndarray
    u: np.ndarray
    cj: CovariantJet
    S_lower: np.ndarray
    S_mixed: np.ndarray
    V: np.ndarray | None = None
    v: np.ndarray | None = None
    agreement: np.ndarray | None = None
    extras: dict = field(default_factory=dict)


def schouten_lower(cj: CovariantJet, conv: ModelConvention) -> np.ndarray:
    """``-2 u_{a bbar} + (i u_0 - |du|^2) c I``, hermitized to remove roundoff."""
    n = conv.n
    diag = (1j * cj.u0 - grad_norm_sq(cj, conv)) * conv.c
    S = -2.0 * cj.u_albe_bar + diag[..., None, None] * np.eye(n)
    return hermitize(S)


def v_tensor_lower(cj_v: CovariantJet, v: np.ndarray, conv: ModelConvention) -> np.ndarray:
    """``V = -v_{a bbar} + v_a v_bbar / v + (1/2)(i v_0 - |dv|^2/(n v)) c I``."""
    n = conv.n
    va = cj_v.u_alpha
    outer = np.einsum("...a,...b->...ab", va, np.conj(va)) / v[..., None, None]
    diag = 0.5 * (1j * cj_v.u0 - grad_norm_sq(cj_v, conv) / (n * v)) * conv.c
    V = -cj_v.u_albe_bar + outer + diag[..., None, None] * np.eye(n)
    return hermitize(V)


def geometry(cs: ConformalStructure, points, order: int = 2, check: bool = True) -> Geometry:
    """Deformed Schouten data at each point; power form also computes ``V`` and cross-checks."""
    conv = cs.conv
    u_jet, v_jet = cs.jets(points, order)
    cj = frame_derivatives(u_jet, None, conv)
    S = schouten_lower(cj, conv)
    mixed = np.exp(-2.0 * u_jet.value)[..., None, None] * S / conv.c
    geo = Geometry(u_jet.point, u_jet.value, cj, S, mixed)
    if cs.factor_form == "power":
        cjv = frame_derivatives(v_jet, None, conv, order=2)
        V = v_tensor_lower(cjv, v_jet.value, conv)
        S_v = (2.0 / cs.n) * V / v_jet.value[..., None, None]
        diff = np.linalg.norm(S - S_v, axis=(-2, -1))
        scale = np.maximum(np.linalg.norm(S, axis=(-2, -1)), np.linalg.norm(S_v, axis=(-2, -1)))
        agreement = np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0), 0.0)
        if check:
            bad = diff > SCHOUTEN_AGREEMENT_TOL * scale + 1e-12
            if np.any(bad):
                i = int(np.argmax(agreement))
                raise ConsistencyError(
                    f"u-form and V-form Schouten tensors disagree by {agreement[i]:.3e} (relative) at {geo.points[i].tolist()}"
                )
        geo.V, geo.v, geo.agreement = V, v_jet.value, agreement
    return geo


def _single(points) -> np.ndarray:
    if isinstance(points, HPoint):
        return points.to_real()[None]
    return np.atleast_2d(np.asarray(points, dtype=float))


def schouten(cs: ConformalStructure, point) -> SchoutenAtPoint:
    g = geometry(cs, _single(point))
    return SchoutenAtPoint(
        S_lower=HermitianMatrix(g.S_lower[0], atol=1e-9 * (1 + np.abs(g.S_lower[0]).max())),
        S_mixed=HermitianMatrix(g.S_mixed[0], atol=1e-9 * (1 + np.abs(g.S_mixed[0]).max())),
        u=float(g.u[0]),
        point=g.points[0],
        agreement=None if g.agreement is None else float(g.agreement[0]),
    )


def V_tensor(cs: ConformalStructure, point) -> HermitianMatrix:
    if cs.factor_form != "power":
        raise ValidationError("V_tensor needs a power-form structure")
    g = geometry(cs, _single(point))
    return HermitianMatrix(g.V[0], atol=1e-9 * (1 + np.abs(g.V[0]).max()))


def _check_k(k: int, n: int) -> None:
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= n:
        raise DomainError(f"k={k!r} must be an integer with 1 <= k <= n={n}")


def sigma_k_values(cs: ConformalStructure, points, k: int) -> np.ndarray:
    """``sigma_k`` of the deformed structure at each point."""
    _check_k(k, cs.n)
    g = geometry(cs, points)
    return sigma_all(g.S_mixed, k)[..., k]


def sigma_k_curvature(cs: ConformalStructure, point, k: int) -> float:
    return float(sigma_k_values(cs, _single(point), k)[0])


def sigma1_sublaplacian(cs: ConformalStructure, points) -> np.ndarray:
    """The k = 1 curvature written with the sublaplacian: ``e^{-2u}(Lap_b u - n |du|^2)``."""
    u_jet, _ = cs.jets(points, 2)
    cj = frame_derivatives(u_jet, None, cs.conv)
    return np.exp(-2.0 * u_jet.value) * (sublaplacian(cj, cs.conv) - cs.n * grad_norm_sq(cj, cs.conv))


def lambda_hat_constants(n: int, k: int, lam: float) -> dict:
    """Power-form constant for a u-form constant ``lam``: derived and as printed in the source."""
    return {"derived": (n / 2.0) ** k * lam, "printed": (n**k / 2.0**k) * k * lam}


@dataclass
class ResidualReport:
    u_form: np.ndarray
    v_form: np.ndarray
    lam: float
    lambda_hat: float
    lambda_hat_printed: float


def yamabe_residuals(cs: ConformalStructure, points, k: int, lam: float, lambda_hat: float | None = None) -> ResidualReport:
    """Both residual forms at each point.

    u form: ``sigma_k(S_lower/c) - lam e^{2ku}``.
    v form: ``v^{(1-k)(n+2)/n} sigma_k(V/c) - lambda_hat v^{(n+2)/n}``, with
    ``lambda_hat = (n/2)^k lam`` unless given.
    """
    _check_k(k, cs.n)
    n = cs.n
    g = geometry(cs, points)
    sk_lower = sigma_all(g.S_lower / cs.conv.c, k)[..., k]
    res_u = sk_lower - lam * np.exp(2.0 * k * g.u)
    if cs.factor_form == "power":
        V, v = g.V, g.v
    else:
        _, v_jet = cs.jets(points, 2)
        cjv = frame_derivatives(v_jet, None, cs.conv, order=2)
        v = v_jet.value
        V = v_tensor_lower(cjv, v, cs.conv)
    consts = lambda_hat_constants(n, k, lam)
    lh = consts["derived"] if lambda_hat is None else float(lambda_hat)
    skV = sigma_all(V / cs.conv.c, k)[..., k]
    q = (n + 2.0) / n
    res_v = v ** ((1 - k) * q) * skV - lh * v**q
    return ResidualReport(res_u, res_v, float(lam), lh, consts["printed"])


def yamabe_residual(cs: ConformalStructure, k: int, lam: float, point, lambda_hat: float | None = None) -> tuple:
    r = yamabe_residuals(cs, _single(point), k, lam, lambda_hat)
    return float(r.u_form[0]), float(r.v_form[0])


def auto_lambda(cs: ConformalStructure, k: int, point) -> float:
    """The u-form constant that makes the residual vanish at ``point``."""
    return sigma_k_curvature(cs, point, k)


# ---------------------------------------------------------------------------
# Cotton tensor


def cotton_reduced_from(cj: CovariantJet) -> np.ndarray:
    """``-2 (u_a u_{bbar s} - u_s u_{bbar a})`` as ``C[..., a, b, s]``."""
    ua = cj.u_alpha
    ubs = cj.u_albar_be  # [b, s] = u_{bbar s}
    t1 = np.einsum("...a,...bs->...abs", ua, ubs)
    t2 = np.einsum("...s,...ba->...abs", ua, ubs)
    return -2.0 * (t1 - t2)


def cotton_full_from(cj: CovariantJet, S_lower: np.ndarray, conv: ModelConvention) -> np.ndarray:
    """Cotton tensor of the deformed Tanaka-Webster connection, flat-frame components.

    In the flat frame the deformed connection has
    ``nabla_{T_s} T_a = 2(u_s T_a + u_a T_s)`` and
    ``nabla_{T_s} T_bbar = -2 h_{s bbar} u^gbar T_gbar``, which gives

        C_{a bbar s} = T_s S_{a bbar} - T_a S_{s bbar}
                       + 2 u^gbar (h_{s bbar} S_{a gbar} - h_{a bbar} S_{s gbar}).

    It vanishes whenever the mixed Schouten block is a constant multiple
    of the identity.  Requires third-order jets.
    """
    if cj.third is None:
        raise ValidationError("full Cotton tensor needs order-3 jets")
    n, c = conv.n, conv.c
    ua = cj.u_alpha
    # T_s |du|^2 = (2/c) sum_g (u_{g s} conj(u_g) + u_g u_{gbar s})
    d_grad = (2.0 / c) * (
        np.einsum("...gs,...g->...s", cj.u_alpha_beta, np.conj(ua)) + np.einsum("...g,...gs->...s", ua, cj.u_albar_be)
    )
    eye = np.eye(n)
    # dS[a, b, s] = T_s S_{a bbar}
    dS = -2.0 * cj.third + ((1j * cj.u0_alpha - d_grad) * c)[..., None, None, :] * eye[:, :, None]
    Su = np.einsum("...ag,...g->...a", S_lower, ua)  # S_{a gbar} u^gbar c
    corr = 2.0 * (
        np.einsum("sb,...a->...abs", eye, Su) - np.einsum("ab,...s->...abs", eye, Su)
    )
    return dS - np.swapaxes(dS, -3, -1) + corr


def cotton(cs: ConformalStructure, point) -> CottonAtPoint:
    """Torsion-free reduction ``-2(u_a u_{bbar s} - u_s u_{bbar a})``."""
    u_jet, _ = cs.jets(_single(point), 2)
    cj = frame_derivatives(u_jet, None, cs.conv)
    return CottonAtPoint(cotton_reduced_from(cj)[0])


def cotton_full(cs: ConformalStructure, points) -> np.ndarray:
    """Full Cotton tensor at each point, shape ``(N, n, n, n)``."""
    u_jet, _ = cs.jets(points, 3)
    cj = frame_derivatives(u_jet, None, cs.conv)
    return cotton_full_from(cj, schouten_lower(cj, cs.conv), cs.conv)


def cotton_admissible(field_expr: FieldExpr, points, tol: float, conv: ModelConvention) -> tuple:
    """``(admissible, max violation)`` of ``||u_a u_{bbar s} - u_s u_{bbar a}||`` over the samples."""
    pts = as_points(points, conv.n)
    if len(pts) == 0:
        raise ValidationError("sample set is empty")
    cs = ConformalStructure(conv, "log", field_expr)
    u_jet, _ = cs.jets(pts, 2)
    cj = frame_derivatives(u_jet, None, conv)
    viol = float(np.max(np.linalg.norm(0.5 * cotton_reduced_from(cj).reshape(len(pts), -1), axis=-1)))
    return viol <= tol, viol


def k_positive(cs: ConformalStructure, points, k: int) -> list:
    """Per-point Gamma_j^+ membership (j <= k) of the mixed Schouten block."""
    _check_k(k, cs.n)
    g = geometry(cs, points)
    s = sigma_all(g.S_mixed, k)
    return [cone_from_sigmas(row, k) for row in s]


# ---------------------------------------------------------------------------
# ellipticity


DEFAULT_DIRECTION = "exp(-(x1^2 + y1^2 + t^2)/2) * (1 + x1 - y1*t)"


@dataclass
class EllipticityReport:
    k: int
    min_eigenvalue: float
    argmin_point: list
    linearization_gap: float
    linearization_tol: float
    step: float
    per_point_min: list

    @property
    def elliptic(self) -> bool:
        return self.min_eigenvalue > 0

    @property
    def linearization_ok(self) -> bool:
        return self.linearization_gap <= self.linearization_tol

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "min_eigenvalue": self.min_eigenvalue,
            "argmin_point": self.argmin_point,
            "linearization_gap": self.linearization_gap,
            "linearization_tol": self.linearization_tol,
            "step": self.step,
            "elliptic": self.elliptic,
            "linearization_ok": self.linearization_ok,
        }


def _sigma_lower(cj: CovariantJet, conv: ModelConvention, k: int) -> np.ndarray:
    return sigma_all(schouten_lower(cj, conv) / conv.c, k)[..., k]


def linearization(cj: CovariantJet, cphi: CovariantJet, conv: ModelConvention, k: int) -> np.ndarray:
    """``sigma_1(T_{k-1}(A) dA)`` with ``A = S_lower/c`` and ``dA`` its derivative along ``phi``."""
    n, c = conv.n, conv.c
    A = schouten_lower(cj, conv) / c
    dgrad = (4.0 / c) * np.real(np.sum(cj.u_alpha * np.conj(cphi.u_alpha), axis=-1))
    dS = -2.0 * cphi.u_albe_bar + ((1j * cphi.u0 - dgrad) * c)[..., None, None] * np.eye(n)
    dA = hermitize(dS) / c
    T = newton_batch(A, k - 1)
    return np.real(np.einsum("...ij,...ji->...", T, dA))


def ellipticity_certificate(
    cs: ConformalStructure,
    k: int,
    points,
    phi: FieldExpr | None = None,
    step: float = 1e-5,
    tol: float = 1e-4,
) -> EllipticityReport:
    """Minimum eigenvalue of ``T_{k-1}`` of the mixed block, and a check of the linearization.

    The linearized operator of ``u -> sigma_k(S_lower/c)`` is compared with
    the central difference of that map along ``u + s phi``.
    """
    from .fields.parser import parse_field

    _check_k(k, cs.n)
    conv = cs.conv
    pts = as_points(points, cs.n)
    g = geometry(cs, pts)
    s = sigma_all(g.S_mixed, k)
    bad = ~(s[..., k] > 0)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise PreconditionError(
            f"sigma_{k} = {s[i, k]:.6g} is not positive at point {pts[i].tolist()}; ellipticity hypothesis fails"
        )
    T = newton_batch(g.S_mixed, k - 1, s)
    eigs = np.linalg.eigvalsh(T)
    per_point = eigs[..., 0]
    j = int(np.argmin(per_point))
    phi = parse_field(DEFAULT_DIRECTION, cs.n) if phi is None else phi
    u_jet, _ = cs.jets(pts, 2)
    phi_jet = eval_jet3(phi, pts, cs.n, 2)
    cj = g.cj
    cphi = frame_derivatives(phi_jet, None, conv)
    lin = linearization(cj, cphi, conv, k)
    plus = frame_derivatives(u_jet.axpy(step, phi_jet), None, conv)
    minus = frame_derivatives(u_jet.axpy(-step, phi_jet), None, conv)
    fd = (_sigma_lower(plus, conv, k) - _sigma_lower(minus, conv, k)) / (2.0 * step)
    scale = max(float(np.max(np.abs(lin))), 1e-300)
    gap = float(np.max(np.abs(fd - lin))) / scale
    return EllipticityReport(
        k=k,
        min_eigenvalue=float(per_point[j]),
        argmin_point=pts[j].tolist(),
        linearization_gap=gap,
        linearization_tol=tol,
        step=step,
        per_point_min=per_point.tolist(),
    )


def binomial(n: int, k: int) -> int:
    return math.comb(n, k)
