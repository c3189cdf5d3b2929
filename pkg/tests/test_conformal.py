import math

import numpy as np
import pytest

from conftest import random_expr
from crkyamabe.conformal import (
    ConformalStructure,
    V_tensor,
    auto_lambda,
    cotton,
    cotton_admissible,
    cotton_full,
    ellipticity_certificate,
    geometry,
    k_positive,
    lambda_hat_constants,
    schouten,
    sigma1_sublaplacian,
    sigma_k_curvature,
    sigma_k_values,
    yamabe_residual,
    yamabe_residuals,
)
from crkyamabe.errors import DomainError, EvaluationError, FactorDomainError, PreconditionError, ValidationError
from crkyamabe.fields import parse_field, sample_points, v0_field
from crkyamabe.heisenberg import ModelConvention


def sphere(n, conv=None):
    return ConformalStructure(conv or ModelConvention(n), "power", v0_field(n))


def logform(text, n):
    return ConformalStructure(ModelConvention(n), "log", parse_field(text, n))


# -- frozen oracles ---------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sphere_mixed_schouten_is_identity(n):
    g = geometry(sphere(n), sample_points(n, 30, seed=n))
    assert np.allclose(g.S_mixed, np.eye(n), atol=1e-10)
    assert g.agreement.max() < 1e-12
    for k in range(1, n + 1):
        assert sigma_k_values(sphere(n), sample_points(n, 30, seed=n), k) == pytest.approx(math.comb(n, k), rel=1e-10)


def test_quadratic_log_factor_at_origin():
    # u = a|z|^2: S_lower = -2a I at z = 0, mixed = -a I
    cs = logform("0.3*(x1^2 + y1^2 + x2^2 + y2^2)", 2)
    s = schouten(cs, np.zeros(5))
    assert np.allclose(s.S_lower.entries, -0.6 * np.eye(2))
    assert np.allclose(s.S_mixed.entries, -0.3 * np.eye(2))
    assert sigma_k_curvature(cs, np.zeros(5), 2) == pytest.approx(0.09)


def test_flat_structure_has_zero_curvature():
    cs = logform("0", 2)
    assert np.all(sigma_k_values(cs, sample_points(2, 5, 0), 1) == 0.0)
    assert not any(c.in_gamma for c in k_positive(cs, sample_points(2, 5, 0), 1))


def test_sphere_V_tensor_is_scalar():
    # V = (n/2) v S_lower: on the sphere, S_lower = c e^{2u} I
    V = V_tensor(sphere(2), np.zeros(5))
    assert np.allclose(V.entries, 2.0 * np.eye(2))
    with pytest.raises(ValidationError):
        V_tensor(logform("t", 1), np.zeros(3))


def test_converted_structure_agrees():
    cs = ConformalStructure(ModelConvention(2), "power", parse_field("1 + 0.2*exp(-(x1^2 + t^2))*cos(y2)", 2))
    pts = sample_points(2, 10, 3)
    a = sigma_k_values(cs, pts, 2)
    b = sigma_k_values(cs.converted(), pts, 2)
    assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


def test_power_form_rejects_nonpositive_factor():
    cs = ConformalStructure(ModelConvention(1), "power", parse_field("x1", 1))
    with pytest.raises(FactorDomainError) as info:
        geometry(cs, np.array([[-1.0, 0.0, 0.0]]))
    assert isinstance(info.value, EvaluationError)
    assert info.value.point.tolist() == [-1.0, 0.0, 0.0]


def test_k_validation():
    with pytest.raises(DomainError):
        sigma_k_values(sphere(1), np.zeros((1, 3)), 2)
    with pytest.raises(ValidationError):
        ConformalStructure(ModelConvention(1), "exp", parse_field("t", 1))


# -- residuals --------------------------------------------------------------


@pytest.mark.parametrize("n,k", [(1, 1), (2, 1), (2, 2), (3, 2)])
def test_sphere_residuals_vanish(n, k):
    pts = sample_points(n, 20, seed=7)
    rep = yamabe_residuals(sphere(n), pts, k, float(math.comb(n, k)))
    assert np.abs(rep.u_form).max() < 1e-10
    assert np.abs(rep.v_form).max() < 1e-10
    assert rep.lambda_hat == pytest.approx((n / 2) ** k * math.comb(n, k))


def test_lambda_hat_constants():
    c = lambda_hat_constants(2, 2, 1.0)
    assert c == {"derived": 1.0, "printed": 2.0}
    assert lambda_hat_constants(3, 1, 2.0)["derived"] == lambda_hat_constants(3, 1, 2.0)["printed"] == 3.0


def test_auto_lambda_zeroes_residual_at_point():
    cs = logform("0.1*sin(x1)*t - 0.2*y1^2", 1)
    p = np.array([0.3, 0.2, -0.4])
    lam = auto_lambda(cs, 1, p)
    ru, rv = yamabe_residual(cs, 1, lam, p)
    assert abs(ru) < 1e-14 and abs(rv) < 1e-12


def test_k1_reduction_random_fields():
    rng = np.random.default_rng(12)
    for n in (1, 2):
        for _ in range(10):
            cs = ConformalStructure(ModelConvention(n), "log", random_expr(rng, n, depth=3))
            pts = sample_points(n, 5, seed=int(rng.integers(1000)), scale=0.7)
            a = sigma_k_values(cs, pts, 1)
            b = sigma1_sublaplacian(cs, pts)
            assert np.all(np.abs(a - b) <= 1e-9 * np.maximum(1.0, np.abs(b)))


# -- Cotton -----------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3])
def test_full_cotton_vanishes_on_sphere(n):
    C = cotton_full(sphere(n), sample_points(n, 10, seed=1))
    assert np.abs(C).max() < 1e-12


def test_reduced_cotton_nonzero_on_sphere_for_n2():
    C = cotton(sphere(2), np.array([0.3, 0.1, -0.2, 0.4, 0.5])).C
    assert np.linalg.norm(C) > 0.1
    assert cotton(sphere(1), np.array([0.3, 0.1, 0.5])).norm() < 1e-14


def test_full_cotton_vanishes_for_constant_and_nonzero_generically():
    assert np.abs(cotton_full(logform("0.7", 2), sample_points(2, 4, 0))).max() == 0.0
    assert np.abs(cotton_full(logform("x1*t + y2^2*x2", 2), sample_points(2, 4, 0))).max() > 1e-3


def test_cotton_admissible():
    pts = sample_points(1, 20, seed=2)
    assert cotton_admissible(parse_field("t", 1), pts, 1e-10, ModelConvention(1))[0]
    ok, viol = cotton_admissible(parse_field("t", 2), sample_points(2, 20, 2), 1e-10, ModelConvention(2))
    assert not ok and viol > 0.1
    with pytest.raises(ValidationError):
        cotton_admissible(parse_field("t", 1), np.zeros((0, 3)), 1e-10, ModelConvention(1))


# -- ellipticity ------------------------------------------------------------


@pytest.mark.parametrize("n,k", [(1, 1), (2, 1), (2, 2), (3, 2), (3, 3)])
def test_ellipticity_on_sphere(n, k):
    rep = ellipticity_certificate(sphere(n), k, sample_points(n, 15, seed=3))
    # T_{k-1}(I) = C(n-1, k-1) I
    assert rep.min_eigenvalue == pytest.approx(math.comb(n - 1, k - 1), rel=1e-9)
    assert rep.elliptic and rep.linearization_ok
    assert rep.linearization_gap < 1e-6


def test_ellipticity_precondition():
    with pytest.raises(PreconditionError):
        ellipticity_certificate(logform("0", 1), 1, sample_points(1, 3, 0))
