"""Acceptance suite: one verdict line per primary criterion, at the fixed tolerances.

Run with ``pytest -v tests/test_acceptance.py``; the lines are printed as
each criterion finishes and repeated in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from conftest import acceptance_line, random_expr
from crkyamabe.cli import default_box_points, variation_directions
from crkyamabe.conformal import (
    ConformalStructure,
    ellipticity_certificate,
    sigma1_sublaplacian,
    sigma_k_values,
)
from crkyamabe.fields import catalog_field, eval_jet3, fd_jet3, jet_agreement, sample_points, v0_field
from crkyamabe.fields.expr import BinOp, Const, Func, Neg, Pow, Var
from crkyamabe.functional import (
    criticality_check,
    pseudo_einstein_sigma,
    sphere_lambda,
    sphere_log_factor,
    sphere_structure,
    variational_derivative,
)
from crkyamabe.heisenberg import ModelConvention, frame_derivatives
from crkyamabe.quadrature import QuadratureGrid
from crkyamabe.symmetric_functions import (
    concavity_check,
    inequality_suite,
    is_scalar_matrix,
    newton_transform,
    newton_transform_kronecker,
    newton_transform_polynomial,
    random_cone_spectrum,
    random_hermitian,
    sigma_k_kronecker,
    sigmas,
    with_spectrum,
)

SPHERE_PAIRS = [(1, 1), (2, 1), (2, 2), (3, 1), (3, 2), (3, 3)]
VARIATION_PAIRS = [(1, 1), (2, 1), (2, 2)]


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


# ---------------------------------------------------------------------------


def test_sphere_constant(capsys):
    worst, slowest, parts = 0.0, 0.0, []
    ok = True
    for n, k in SPHERE_PAIRS:
        tol = 1e-3 if n <= 2 else 1e-2
        start = time.perf_counter()
        rep = sphere_lambda(n, k, rel_tol=tol / 10.0)
        elapsed = time.perf_counter() - start
        good = rep.deviation <= tol and elapsed <= 120.0
        ok &= good
        worst, slowest = max(worst, rep.deviation), max(slowest, elapsed)
        parts.append(f"({n},{k}) {rep.estimate:.10g} vs {rep.target:.10g}")
    acceptance_line(
        capsys, "sphere constant C(n,k) pi^k", ok,
        f"max rel deviation {worst:.2e} (tol 1e-3 n<=2, 1e-2 n=3), slowest run {slowest:.2f}s (limit 120s); "
        + "; ".join(parts),
    )
    assert ok


def test_sphere_pointwise_constancy(capsys):
    worst_spread, worst_pe = 0.0, 0.0
    for n, k in SPHERE_PAIRS:
        pts = sample_points(n, 50, seed=100 + 10 * n + k)
        cs = sphere_structure(n)
        sk = sigma_k_values(cs, pts, k)
        spread = (sk.max() - sk.min()) / abs(sk.mean())
        # independent cross-check: scalar curvature from sigma_1, then the pseudo-Einstein formula
        R = 2.0 * (n + 1) * float(np.mean(sigma_k_values(cs, pts, 1)))
        pe = pseudo_einstein_sigma(n, k, R)
        worst_spread = max(worst_spread, spread)
        worst_pe = max(worst_pe, float(np.max(np.abs(sk - pe))) / abs(pe))
    ok = worst_spread <= 1e-6 and worst_pe <= 1e-7
    acceptance_line(
        capsys, "sphere pointwise constancy", ok,
        f"max relative spread {worst_spread:.2e} (tol 1e-6), pseudo-Einstein gap {worst_pe:.2e} (tol 1e-7), 50 points x 6 pairs",
    )
    assert ok


def test_symmetric_function_suite(capsys):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst_id, worst_kron = 0.0, 0.0
    for i in range(500):
        n = 2 + i % 5
        A = random_hermitian(rng, n)
        s = sigmas(A)
        for k in range(n):
            T = newton_transform(A, k).entries
            worst_id = max(
                worst_id,
                _rel(np.trace(T).real, (n - k) * s[k]),
                _rel(np.trace(T @ A.entries).real, (k + 1) * s[k + 1]),
            )
            for ref in (newton_transform_polynomial(A, k), newton_transform_kronecker(A, k)):
                worst_id = max(worst_id, float(np.abs(T - ref).max()) / max(1.0, float(np.abs(ref).max())))
        for k in range(n + 1):
            worst_kron = max(worst_kron, _rel(s[k], sigma_k_kronecker(A, k)))
    elapsed = time.perf_counter() - start
    ok = worst_id <= 1e-9 and worst_kron <= 1e-9 and elapsed <= 30.0
    acceptance_line(
        capsys, "symmetric-function suite", ok,
        f"500 matrices n=2..6: identity gap {worst_id:.2e}, spectral vs Kronecker {worst_kron:.2e} (tol 1e-9), "
        f"runtime {elapsed:.1f}s (limit 30s)",
    )
    assert ok


def test_inequality_suite(capsys):
    rng = np.random.default_rng(77)
    min_newton = min_mac = min_concave = min_eig = math.inf
    false_equal = 0
    scalar_misses = 0
    count = 0
    for n in range(2, 7):
        for k in range(1, n + 1):
            prev = None
            for _ in range(500):
                A = with_spectrum(rng, random_cone_spectrum(rng, n, k))
                rep = inequality_suite(A, k)
                if rep.newton_applicable:
                    min_newton = min(min_newton, rep.slack_newton)
                min_mac = min(min_mac, rep.slack_maclaurin)
                false_equal += int(rep.equality and not is_scalar_matrix(A))
                min_eig = min(min_eig, float(newton_transform(A, k - 1).eigenvalues[0]))
                if prev is not None:
                    min_concave = min(min_concave, concavity_check(prev, A, k))
                prev = A
                count += 1
            if k < n:
                for lam in (0.25, 1.0, 4.0):
                    rep = inequality_suite(with_spectrum(rng, [lam] * n), k)
                    scalar_misses += int(not rep.equality)
    ok = (
        min_newton >= -1e-10 and min_mac >= -1e-10 and min_concave >= -1e-10 and min_eig > 0
        and false_equal == 0 and scalar_misses == 0
    )
    acceptance_line(
        capsys, "inequality suite", ok,
        f"{count} cone samples n<=6: min Newton slack {min_newton:.2e}, min Maclaurin slack {min_mac:.2e}, "
        f"min concavity gap {min_concave:.2e} (tol -1e-10), min eig T_(k-1) {min_eig:.2e} (> 0), "
        f"equality false positives {false_equal}, misses on lambda*I {scalar_misses}",
    )
    assert ok


def test_calculus_oracle(capsys):
    rng = np.random.default_rng(31)
    worst = [0.0, 0.0, 0.0]
    worst_comm = 0.0
    cases = []
    for n in (1, 2):
        cases += [
            (v0_field(n), n),
            (catalog_field("bump", {"n": n, "radius": 2.5}), n),
            (catalog_field("gaussian", {"n": n, "a": 0.8}), n),
            (catalog_field("monomial", {"n": n, "powers": [2] + [1] * (2 * n - 1) + [3], "coeff": 0.5}), n),
        ]
    cases += [(random_expr(rng, 1 + i % 2, depth=4), 1 + i % 2) for i in range(50)]
    for expr, n in cases:
        pts = rng.uniform(-1.0, 1.0, size=(20, 2 * n + 1))
        ad = eval_jet3(expr, pts, n)
        conv = ModelConvention(n)
        worst_comm = max(worst_comm, float(frame_derivatives(ad, None, conv).commutation_defect(conv).max()))
        for j in range(20):
            for i, g in enumerate(jet_agreement(ad[j], fd_jet3(expr, pts[j], n))):
                worst[i] = max(worst[i], g)
    ok = worst[0] <= 1e-6 and worst[1] <= 1e-6 and worst[2] <= 1e-4 and worst_comm <= 1e-8
    acceptance_line(
        capsys, "calculus oracle", ok,
        f"{len(cases)} fields (catalog + 50 random trees) x 20 points: order 1 {worst[0]:.2e}, order 2 {worst[1]:.2e} "
        f"(tol 1e-6), order 3 {worst[2]:.2e} (tol 1e-4), commutation defect {worst_comm:.2e} (tol 1e-8)",
    )
    assert ok


def test_k1_reduction(capsys):
    rng = np.random.default_rng(8)
    worst = 0.0
    for i in range(100):
        n = 1 + i % 3
        expr = random_expr(rng, n, depth=3)
        cs = ConformalStructure(ModelConvention(n), "log", expr)
        pt = rng.uniform(-1.0, 1.0, size=(1, 2 * n + 1))
        a = float(sigma_k_values(cs, pt, 1)[0])
        b = float(sigma1_sublaplacian(cs, pt)[0])
        ref = max(abs(a), abs(b))
        worst = max(worst, abs(a - b) / ref if ref > 0 else 0.0)
    ok = worst <= 1e-9
    acceptance_line(capsys, "k = 1 reduction", ok, f"100 (field, point) pairs, max relative gap {worst:.2e} (tol 1e-9)")
    assert ok


@pytest.fixture(scope="module")
def variation_runs():
    out = {}
    for n, k in VARIATION_PAIRS:
        conv = ModelConvention(n)
        dirs = variation_directions(n, 3 if n == 1 else 1, seed=0)
        m = default_box_points(n)
        reps = [
            variational_derivative(
                sphere_log_factor(n), phi, k, QuadratureGrid(n, "box", 0, m, 1.0, tuple(box[0]), tuple(box[1])),
                conv=conv,
            )
            for phi, box in dirs
        ]
        crit = criticality_check(k, QuadratureGrid(n, "unitary", 0, 32), dirs, conv=conv, box_points=m)
        out[(n, k)] = (reps, crit)
    return out


def test_variational_identity(capsys, variation_runs):
    worst_stated = worst_consistent = worst_crit = 0.0
    ratios = []
    for (n, k), (reps, crit) in variation_runs.items():
        for r in reps:
            worst_stated = max(worst_stated, r.gap_stated)
            worst_consistent = max(worst_consistent, r.gap_consistent)
            ratios.append(f"({n},{k}) {r.fd_richardson / r.integral:.6f}")
        worst_crit = max(worst_crit, crit.max_abs)
    ok = worst_stated <= 1e-3 and worst_crit <= 5e-3
    acceptance_line(
        capsys, "variational identity", ok,
        f"FD vs -2(n+k+1) int phi sigma_k: max rel gap {worst_stated:.3e} (tol 1e-3); "
        f"criticality max |dJ/J| {worst_crit:.2e} (tol 5e-3)",
    )
    acceptance_line(
        capsys, "variational identity, coefficient 2(n+1-k)", worst_consistent <= 1e-3,
        f"max rel gap {worst_consistent:.2e}; observed FD / integral: " + ", ".join(ratios),
        tag="INFO",
    )
    assert worst_stated <= 1e-3 and worst_crit <= 5e-3


def test_ellipticity(capsys):
    conv_cases = []
    for n, k in SPHERE_PAIRS:
        conv = ModelConvention(n)
        # the sphere and a localized perturbation of it (power form)
        r2 = Pow(Var("t"), 2.0)
        for i in range(1, n + 1):
            r2 = BinOp("+", r2, BinOp("+", Pow(Var("x", i), 2.0), Pow(Var("y", i), 2.0)))
        bumpy = BinOp("*", v0_field(n), BinOp("+", Const(1.0), BinOp("*", Const(0.1), Func("exp", Neg(r2)))))
        conv_cases += [(ConformalStructure(conv, "power", v0_field(n)), k), (ConformalStructure(conv, "power", bumpy), k)]
    min_eig, worst_gap, used = math.inf, 0.0, 0
    for cs, k in conv_cases:
        pts = sample_points(cs.n, 30, seed=5)
        if not np.all(sigma_k_values(cs, pts, k) > 0):
            continue
        rep = ellipticity_certificate(cs, k, pts)
        min_eig = min(min_eig, rep.min_eigenvalue)
        worst_gap = max(worst_gap, rep.linearization_gap)
        used += 1
    ok = used > 0 and min_eig > 0 and worst_gap <= 1e-4
    acceptance_line(
        capsys, "ellipticity", ok,
        f"{used} structures with sigma_k > 0 at 30 samples: min eig T_(k-1) {min_eig:.3e} (> 0), "
        f"linearization vs FD {worst_gap:.2e} (tol 1e-4)",
    )
    assert ok
