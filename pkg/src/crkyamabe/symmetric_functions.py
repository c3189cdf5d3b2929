"""Elementary symmetric functions of hermitian spectra and related matrix facts.

Everything here is a pure function of its inputs.  The batched helpers
(``sigma_all``, ``newton_batch``) accept stacks of matrices with shape
``(..., n, n)`` and are what the geometry modules call on quadrature grids;
the single-matrix operations wrap them with validation.

The Kronecker-symbol formulas are kept only as independent oracles: their cost
grows like ``k!``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, PreconditionError, ValidationError

HERMITIAN_ATOL = 1e-12
MAX_DIM = 16


class HermitianMatrix:
    """An ``n x n`` complex self-adjoint matrix (1 <= n <= 16).

    The stored entries are the hermitized input ``(A + A*)/2``; the input must
    already be hermitian to within ``atol`` per entry.
    """

    __slots__ = ("_entries", "_eigenvalues")

    def __init__(self, entries, atol: float = HERMITIAN_ATOL):
        a = np.array(entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"expected a square matrix, got shape {a.shape}")
        n = a.shape[0]
        if not 1 <= n <= MAX_DIM:
            raise ValidationError(f"matrix order must be in 1..{MAX_DIM}, got {n}")
        if not np.all(np.isfinite(a)):
            raise ValidationError("matrix has non-finite entries")
        asym = np.max(np.abs(a - a.conj().T))
        if asym > atol:
            raise ValidationError(
                f"matrix is not hermitian: max |A - A*| = {asym:.3e} > {atol:.1e}"
            )
        a = 0.5 * (a + a.conj().T)
        a.setflags(write=False)
        self._entries = a
        self._eigenvalues = None

    @classmethod
    def diag(cls, values) -> "HermitianMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def identity(cls, n: int, scale: float = 1.0) -> "HermitianMatrix":
        return cls(scale * np.eye(n))

    @property
    def n(self) -> int:
        return self._entries.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def eigenvalues(self) -> np.ndarray:
        """Ascending real spectrum."""
        if self._eigenvalues is None:
            ev = np.linalg.eigvalsh(self._entries)
            ev.setflags(write=False)
            self._eigenvalues = ev
        return self._eigenvalues

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._entries, dtype=dtype)

    def __matmul__(self, other):
        return self._entries @ np.asarray(other)

    def __eq__(self, other):
        if not isinstance(other, HermitianMatrix):
            return NotImplemented
        return self.n == other.n and np.array_equal(self._entries, other._entries)

    __hash__ = None

    def __repr__(self) -> str:
        return f"HermitianMatrix(n={self.n}, eigenvalues={np.round(self.eigenvalues, 6).tolist()})"

    def to_json(self) -> dict:
        return {"real": self._entries.real.tolist(), "imag": self._entries.imag.tolist()}


def as_hermitian(A) -> HermitianMatrix:
    return A if isinstance(A, HermitianMatrix) else HermitianMatrix(A)


# ---------------------------------------------------------------------------
# batched kernels


def elementary_from_eigenvalues(eigs: np.ndarray, kmax: int | None = None) -> np.ndarray:
    """Return ``e[..., j] = sigma_j(eigs)`` for ``j = 0..kmax``.

    Uses the product expansion of ``prod_i (1 + lambda_i x)``.
    """
    eigs = np.asarray(eigs)
    n = eigs.shape[-1]
    kmax = n if kmax is None else kmax
    e = np.zeros(eigs.shape[:-1] + (kmax + 1,), dtype=eigs.dtype)
    e[..., 0] = 1.0
    for i in range(n):
        lam = eigs[..., i]
        for j in range(min(i + 1, kmax), 0, -1):
            e[..., j] = e[..., j] + lam * e[..., j - 1]
    return e


def hermitize(mats: np.ndarray) -> np.ndarray:
    return 0.5 * (mats + np.conj(np.swapaxes(mats, -1, -2)))


def sigma_all(mats: np.ndarray, kmax: int | None = None) -> np.ndarray:
    """sigma_0..sigma_kmax of each hermitian matrix in a stack."""
    eigs = np.linalg.eigvalsh(hermitize(np.asarray(mats, dtype=complex)))
    return elementary_from_eigenvalues(eigs, kmax)


def newton_batch(mats: np.ndarray, k: int, sigmas: np.ndarray | None = None) -> np.ndarray:
    """T_k of each matrix in a stack via T_j = sigma_j I - T_{j-1} A."""
    mats = hermitize(np.asarray(mats, dtype=complex))
    n = mats.shape[-1]
    if sigmas is None:
        sigmas = sigma_all(mats, k)
    eye = np.eye(n, dtype=complex)
    T = np.broadcast_to(eye, mats.shape).copy()
    for j in range(1, k + 1):
        T = sigmas[..., j, None, None] * eye - T @ mats
    return hermitize(T)


# ---------------------------------------------------------------------------
# single-matrix operations


def _check_k(k: int, lo: int, hi: int, what: str = "k") -> None:
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise DomainError(f"{what} must be an integer, got {k!r}")
    if not lo <= k <= hi:
        raise DomainError(f"{what}={k} outside the admissible range {lo}..{hi}")


def sigma_k(A, k: int) -> float:
    """k-th elementary symmetric function of the eigenvalues of ``A``."""
    A = as_hermitian(A)
    _check_k(k, 0, A.n)
    return float(elementary_from_eigenvalues(A.eigenvalues, k)[k])


def sigmas(A, kmax: int | None = None) -> np.ndarray:
    A = as_hermitian(A)
    return elementary_from_eigenvalues(A.eigenvalues, kmax)


@lru_cache(maxsize=None)
def _signed_permutations(k: int):
    perms = []
    for p in itertools.permutations(range(k)):
        inversions = sum(1 for i in range(k) for j in range(i + 1, k) if p[i] > p[j])
        perms.append((p, -1 if inversions % 2 else 1))
    return perms


def sigma_k_kronecker(A, k: int) -> float:
    """sigma_k through the generalized Kronecker symbol.

    ``(1/k!) sum delta^{i_1..i_k}_{j_1..j_k} A_{i_1}^{j_1} ... A_{i_k}^{j_k}``;
    the k! orderings of each index set contribute equally, so the sum runs
    over sorted index sets and signed permutations of them.
    """
    A = as_hermitian(A)
    _check_k(k, 0, A.n)
    if k == 0:
        return 1.0
    a = A.entries
    total = 0.0 + 0.0j
    perms = _signed_permutations(k)
    for idx in itertools.combinations(range(A.n), k):
        for p, sign in perms:
            prod = 1.0 + 0.0j
            for m in range(k):
                prod *= a[idx[m], idx[p[m]]]
            total += sign * prod
    return float(total.real)


def newton_transform(A, k: int) -> HermitianMatrix:
    """k-th Newton transformation ``T_k(A) = sigma_k I - sigma_{k-1} A + ... + (-1)^k A^k``."""
    A = as_hermitian(A)
    _check_k(k, 0, A.n - 1)
    return HermitianMatrix(newton_batch(A.entries, k), atol=1e-8 * (1 + np.abs(A.entries).max()) ** k)


def newton_transform_polynomial(A, k: int) -> np.ndarray:
    """Oracle: the alternating polynomial ``sum_j (-1)^j sigma_{k-j} A^j``."""
    A = as_hermitian(A)
    _check_k(k, 0, A.n - 1)
    s = sigmas(A, k)
    out = np.zeros((A.n, A.n), dtype=complex)
    power = np.eye(A.n, dtype=complex)
    for j in range(k + 1):
        out += (-1) ** j * s[k - j] * power
        power = power @ A.entries
    return out


def newton_transform_kronecker(A, k: int) -> np.ndarray:
    """Oracle: ``T_k(A)_j^i = (1/k!) sum delta^{i_1..i_k i}_{j_1..j_k j} A_{i_1}^{j_1}...``.

    Rows carry the lower index and columns the upper one, the same layout
    as ``A``, so the result is comparable entrywise with ``newton_transform``.
    """
    A = as_hermitian(A)
    _check_k(k, 0, A.n - 1)
    a = A.entries
    n = A.n
    out = np.zeros((n, n), dtype=complex)
    perms = _signed_permutations(k + 1)
    for idx in itertools.combinations(range(n), k):
        for i in range(n):
            if i in idx:
                continue
            upper = idx + (i,)
            for p, sign in perms:
                lower = tuple(upper[q] for q in p)
                prod = 1.0 + 0.0j
                for m in range(k):
                    prod *= a[upper[m], lower[m]]
                out[lower[k], i] += sign * prod
    return out


@dataclass(frozen=True)
class ConeReport:
    """Signs of sigma_1..sigma_k; ``in_cone[j-1]`` says whether A lies in Gamma_j^+."""

    k: int
    sigmas: tuple
    in_cone: tuple

    @property
    def in_gamma(self) -> bool:
        return all(self.in_cone)

    def to_json(self) -> dict:
        return {"k": self.k, "sigmas": list(self.sigmas), "in_cone": list(self.in_cone), "in_gamma": self.in_gamma}


def cone_from_sigmas(s, k: int) -> ConeReport:
    vals = tuple(float(x) for x in s[1 : k + 1])
    flags = []
    ok = True
    for v in vals:
        ok = ok and v > 0
        flags.append(ok)
    return ConeReport(k=k, sigmas=vals, in_cone=tuple(flags))


def cone_membership(A, k: int) -> ConeReport:
    A = as_hermitian(A)
    _check_k(k, 1, A.n)
    return cone_from_sigmas(sigmas(A, k), k)


@dataclass(frozen=True)
class InequalityReport:
    """Slacks of the Newton-Maclaurin type inequalities at one matrix.

    ``slack_newton`` is ``(n-k)/(n(k+1)) sigma_k sigma_1 - sigma_{k+1}``;
    ``slack_maclaurin`` is
    ``sigma_{k-1} - k/(n-k+1) C(n,k)^{1/k} sigma_k^{(k-1)/k}``.
    For ``k = n`` the first inequality is vacuous (both sides vanish) and is
    reported as not applicable.
    """

    n: int
    k: int
    slack_newton: float
    slack_maclaurin: float
    tol: float
    newton_applicable: bool
    equality: bool
    is_scalar: bool

    @property
    def ok(self) -> bool:
        return self.slack_newton >= -self.tol and self.slack_maclaurin >= -self.tol

    def to_json(self) -> dict:
        return dict(self.__dict__, ok=self.ok)


def is_scalar_matrix(A, tol: float = 1e-8) -> bool:
    A = as_hermitian(A)
    a = A.entries
    off = np.abs(a - np.diag(np.diag(a))).max() if A.n > 1 else 0.0
    spread = float(A.eigenvalues[-1] - A.eigenvalues[0])
    return off < tol and spread < tol


def inequality_suite(A, k: int) -> InequalityReport:
    A = as_hermitian(A)
    n = A.n
    _check_k(k, 1, n)
    s = elementary_from_eigenvalues(A.eigenvalues, n)
    if not np.all(s[1 : k + 1] > 0):
        raise PreconditionError(f"matrix is not in Gamma_{k}^+ (sigma_1..sigma_{k} = {s[1:k + 1].tolist()})")
    sk, s1 = float(s[k]), float(s[1])
    sk1 = float(s[k + 1]) if k < n else 0.0
    slack1 = (n - k) / (n * (k + 1)) * sk * s1 - sk1
    slack2 = float(s[k - 1]) - k / (n - k + 1) * math.comb(n, k) ** (1.0 / k) * sk ** ((k - 1) / k)
    tol = 1e-10 * max(1.0, abs(sk * s1))
    applicable = k < n
    return InequalityReport(
        n=n,
        k=k,
        slack_newton=float(slack1),
        slack_maclaurin=float(slack2),
        tol=tol,
        newton_applicable=applicable,
        equality=applicable and abs(slack1) <= tol,
        is_scalar=is_scalar_matrix(A),
    )


def concavity_check(A, B, k: int, t_samples: int = 11) -> float:
    """Minimum over ``t`` of ``sigma_k((1-t)A+tB)^{1/k} - (1-t) sigma_k(A)^{1/k} - t sigma_k(B)^{1/k}``."""
    A, B = as_hermitian(A), as_hermitian(B)
    if A.n != B.n:
        raise ValidationError("matrices must have the same order")
    _check_k(k, 1, A.n)
    if t_samples < 3:
        raise DomainError("t_samples must be at least 3")
    for name, M in (("A", A), ("B", B)):
        if not cone_membership(M, k).in_gamma:
            raise PreconditionError(f"{name} is not in Gamma_{k}^+")
    ts = np.linspace(0.0, 1.0, t_samples)
    mats = (1 - ts)[:, None, None] * A.entries + ts[:, None, None] * B.entries
    s = sigma_all(mats, k)
    for t, row in zip(ts, s):
        if not np.all(row[1:] > 0):
            raise PreconditionError(f"segment leaves Gamma_{k}^+ at t={t:.6g}")
    ra = sigma_k(A, k) ** (1.0 / k)
    rb = sigma_k(B, k) ** (1.0 / k)
    gaps = s[:, k] ** (1.0 / k) - (1 - ts) * ra - ts * rb
    return float(gaps.min())


def raise_index(S_lower, h) -> HermitianMatrix:
    """Mixed-index block ``S_alpha^gamma = S_{alpha beta-bar} h^{gamma beta-bar}``.

    As a matrix this is ``S h^{-1}``, which is hermitian only when ``h``
    commutes with ``S``.  The hermitian representative
    ``h^{-1/2} S h^{-1/2}`` (the same block written in an ``h``-unitary
    frame) is returned; it is similar to ``S h^{-1}``, so every sigma_k
    agrees, and it equals ``S/c`` when ``h = c I``.
    """
    S, H = as_hermitian(S_lower), as_hermitian(h)
    if S.n != H.n:
        raise ValidationError("S and h must have the same order")
    w, U = np.linalg.eigh(H.entries)
    if w[0] <= 0:
        raise PreconditionError(f"h is not positive definite (smallest eigenvalue {w[0]:.3e})")
    root_inv = (U / np.sqrt(w)) @ U.conj().T
    out = root_inv @ S.entries @ root_inv
    return HermitianMatrix(hermitize(out), atol=1e-9 * (1 + np.abs(out).max()))


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> HermitianMatrix:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return HermitianMatrix(scale * 0.5 * (z + z.conj().T))


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def with_spectrum(rng: np.random.Generator, eigenvalues) -> HermitianMatrix:
    """Random unitary conjugate of ``diag(eigenvalues)``."""
    U = random_unitary(rng, len(eigenvalues))
    return HermitianMatrix(hermitize(U @ np.diag(np.asarray(eigenvalues, dtype=float)) @ U.conj().T))


def random_cone_spectrum(rng: np.random.Generator, n: int, k: int, max_tries: int = 10_000) -> np.ndarray:
    """Eigenvalues in Gamma_k^+, mixing sign patterns near the cone boundary.

    Positive vectors are shifted down by a random fraction of the largest
    admissible shift, so negative entries appear whenever ``k < n``.
    """
    for _ in range(max_tries):
        lam = rng.uniform(0.1, 2.0, size=n)
        if k < n:
            shift = rng.uniform(0.0, 1.0) * lam.max()
            lam = lam - shift
        e = elementary_from_eigenvalues(lam, k)
        if np.all(e[1:] > 1e-6 * (1 + np.abs(lam).max()) ** np.arange(1, k + 1)):
            return lam
    raise RuntimeError("could not sample a cone spectrum")  # pragma: no cover
