"""Flat Heisenberg model: conventions, complex frame derivatives, sublaplacian.

The frame is ``T_a = d/dz_a + s i conj(z_a) d/dt`` with
``d/dz = (d/dx - i d/dy)/2``, its conjugates ``T_abar``, and the Reeb field
``T = (2s/c) d/dt``, normalized so that ``[T_bbar, T_a] = i h_{ab} T`` with
``h = c I``.  The flat Tanaka-Webster connection is trivial in this frame, so
covariant derivatives are iterated frame derivatives:
``u_{a bbar} = T_bbar T_a u``.

Every frame vector has affine coefficients in the real coordinates, which
lets the derivatives be assembled from a real Taylor jet by a closed formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import ValidationError
from .fields.jets import Jet3


@dataclass(frozen=True)
class ModelConvention:
    """Normalizations of the flat model, fixed once per run.

    ``volume_const`` is ``kappa`` in ``dV = kappa dx dy dt``; the default
    ``n! 2^(n-1) c^(n+1)`` is the density of ``theta ^ (d theta)^n`` and is
    the value under which the sphere constant for ``n = 1`` comes out as pi.
    """

    n: int
    levi_scale: float = 2.0
    frame_sign: int = 1
    volume_const: float | None = None

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"CR dimension n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not (math.isfinite(self.levi_scale) and self.levi_scale > 0):
            raise ValidationError("levi_scale must be positive")
        if self.frame_sign not in (1, -1):
            raise ValidationError("frame_sign must be +1 or -1")
        if self.volume_const is None:
            object.__setattr__(self, "volume_const", self.default_volume_const(self.n, self.levi_scale))
        elif not (math.isfinite(self.volume_const) and self.volume_const > 0):
            raise ValidationError("volume_const must be positive")

    @staticmethod
    def default_volume_const(n: int, c: float) -> float:
        return math.factorial(n) * 2.0 ** (n - 1) * c ** (n + 1)

    @property
    def c(self) -> float:
        return self.levi_scale

    @property
    def s(self) -> int:
        return self.frame_sign

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    @property
    def levi(self) -> np.ndarray:
        return self.levi_scale * np.eye(self.n)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "levi_scale": self.levi_scale,
            "frame_sign": self.frame_sign,
            "volume_const": self.volume_const,
        }


def frame_coefficients(points: np.ndarray, conv: ModelConvention) -> np.ndarray:
    """Complex coefficient vectors of ``T_1..T_n, T_1bar..T_nbar, T``, shape ``(..., 2n+1, 2n+1)``."""
    n, s = conv.n, conv.s
    pts = np.asarray(points, dtype=float)
    x, y = pts[..., :n], pts[..., n : 2 * n]
    P = np.zeros(pts.shape[:-1] + (2 * n + 1, 2 * n + 1), dtype=complex)
    idx = np.arange(n)
    P[..., idx, idx] = 0.5
    P[..., idx, n + idx] = -0.5j
    P[..., idx, 2 * n] = s * (1j * x + y)
    P[..., n + idx, idx] = 0.5
    P[..., n + idx, n + idx] = 0.5j
    P[..., n + idx, 2 * n] = s * (-1j * x + y)
    P[..., 2 * n, 2 * n] = 2.0 * s / conv.c
    return P


def frame_jacobian_rows(conv: ModelConvention) -> np.ndarray:
    """Row ``t`` of ``dP_A/dx``; all other rows vanish.  Shape ``(2n+1, 2n+1)``."""
    n, s = conv.n, conv.s
    r = np.zeros((2 * n + 1, 2 * n + 1), dtype=complex)
    idx = np.arange(n)
    r[idx, idx] = 1j * s
    r[idx, n + idx] = s
    r[n + idx, idx] = -1j * s
    r[n + idx, n + idx] = s
    return r


def frame_tensors(jet: Jet3, conv: ModelConvention, order: int | None = None):
    """All iterated frame derivatives ``D1[A]``, ``D2[A,B] = X_B X_A u`` and ``D3[A,B,C] = X_C X_B X_A u``.

    ``D3`` is None when ``order == 2`` or the jet carries no third tensor.
    """
    if jet.point is None:
        raise ValidationError("jet carries no evaluation point")
    if jet.dim != conv.dim:
        raise ValidationError(f"jet dimension {jet.dim} does not match 2n+1={conv.dim}")
    order = jet.order if order is None else min(order, jet.order)
    P = frame_coefficients(jet.point, conv)
    r = frame_jacobian_rows(conv)
    g = jet.grad
    H = jet.hess
    tdx = 2 * conv.n
    D1 = np.matmul(P, g[..., :, None])[..., 0]
    # M[A,B] = (dP_A P_B)_t: the only nonzero component of X_B applied to P_A
    M = np.matmul(P, r.T).swapaxes(-1, -2)
    HP = np.matmul(P, H)  # HP[B, i] = (H P_B)_i, H symmetric
    D2 = g[..., tdx, None, None] * M + np.matmul(P, HP.swapaxes(-1, -2))
    D3 = None
    if order >= 3:
        K = jet.third
        hP = HP[..., tdx]  # (H P_C)_t
        KP = np.einsum("...ijk,...Ck->...ijC", K, P)
        KPP = np.einsum("...ijC,...Bj->...iBC", KP, P)
        D3 = (
            M[..., :, :, None] * hP[..., None, None, :]
            + M[..., :, None, :] * hP[..., None, :, None]
            + M[..., None, :, :] * hP[..., :, None, None]
            + np.einsum("...iBC,...Ai->...ABC", KPP, P)
        )
    return D1, D2, D3


@dataclass
class CovariantJet:
    """Frame derivatives of a real function, possibly batched along leading axes.

    Matrix layouts: ``u_albe_bar[a, b] = u_{a bbar}``,
    ``u_bebar_al[a, b] = u_{bbar a}``, ``u_alpha_beta[a, b] = u_{ab}``,
    ``third[a, b, s] = u_{a bbar s}``.
    """

    u: np.ndarray
    u0: np.ndarray
    u_alpha: np.ndarray
    u_albe_bar: np.ndarray
    u_bebar_al: np.ndarray
    u_alpha_beta: np.ndarray
    third: np.ndarray | None = None
    u0_alpha: np.ndarray | None = None  # T_s T u
    u_albar_be: np.ndarray | None = None  # [a, s] = u_{abar s} = T_s T_abar u

    def axpy(self, c: float, other: "CovariantJet") -> "CovariantJet":
        """``self + c * other``; frame derivatives are linear in the function."""
        vals = {}
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            vals[f.name] = None if a is None or b is None else a + c * b
        return CovariantJet(**vals)

    @property
    def u_alpha_bar(self) -> np.ndarray:
        return np.conj(self.u_alpha)

    def commutation_defect(self, conv: ModelConvention) -> np.ndarray:
        """``max|u_{a bbar} - u_{bbar a} - i u0 h_{a bbar}|`` per point."""
        diff = self.u_albe_bar - self.u_bebar_al - 1j * self.u0[..., None, None] * conv.levi
        return np.max(np.abs(diff), axis=(-2, -1))


def frame_derivatives(jet: Jet3, point=None, conv: ModelConvention | None = None, order: int | None = None) -> CovariantJet:
    """Assemble the covariant jet of ``u`` from its real Taylor jet.

    ``point`` defaults to the jet's own evaluation point; passing a
    different one is an error since the frame is point dependent.
    """
    if conv is None:
        raise ValidationError("a ModelConvention is required")
    if point is not None:
        p = point.to_real() if hasattr(point, "to_real") else np.asarray(point, dtype=float)
        if jet.point is None:
            jet = Jet3(jet.value, jet.grad, jet.hess, jet.third, np.broadcast_to(p, jet.grad.shape).copy())
        elif not np.allclose(np.broadcast_to(p, jet.point.shape), jet.point):
            raise ValidationError("point does not match the jet's evaluation point")
    D1, D2, D3 = frame_tensors(jet, conv, order)
    n = conv.n
    a, b, T = slice(0, n), slice(n, 2 * n), 2 * n
    third = None if D3 is None else D3[..., a, b, a]
    return CovariantJet(
        u=np.asarray(jet.value, dtype=float),
        u0=D1[..., T].real,
        u_alpha=D1[..., a],
        u_albe_bar=D2[..., a, b],
        u_bebar_al=np.swapaxes(D2[..., b, a], -1, -2),
        u_alpha_beta=D2[..., a, a],
        third=third,
        u0_alpha=D2[..., T, a],
        u_albar_be=D2[..., b, a],
    )


def sublaplacian(cj: CovariantJet, conv: ModelConvention, return_residue: bool = False):
    """``-(u_a^a + u_abar^abar)`` with indices raised by ``h^{-1} = I/c``."""
    tr = np.trace(cj.u_albe_bar, axis1=-2, axis2=-1) + np.trace(cj.u_bebar_al, axis1=-2, axis2=-1)
    val = -tr / conv.c
    if return_residue:
        return val.real, np.abs(val.imag)
    return val.real


def grad_norm_sq(cj: CovariantJet, conv: ModelConvention) -> np.ndarray:
    """``2 u_a u_bbar h^{a bbar} = (2/c) sum |u_a|^2``."""
    return 2.0 * np.sum(np.abs(cj.u_alpha) ** 2, axis=-1) / conv.c


def volume_density(conv: ModelConvention, u=None) -> np.ndarray | float:
    """Density of ``dV`` against ``dx dy dt``, including ``e^{2(n+1)u}`` when a log factor is given."""
    if u is None:
        return conv.volume_const
    return conv.volume_const * np.exp(2.0 * (conv.n + 1) * np.asarray(u, dtype=float))
