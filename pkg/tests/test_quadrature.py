import math

import numpy as np
import pytest

from crkyamabe.fields import catalog_field, eval_values, parse_field
from crkyamabe.errors import IntegrationError, ValidationError
from crkyamabe.heisenberg import ModelConvention
from crkyamabe.quadrature import (
    QuadratureGrid,
    evaluate_nodes,
    integrate,
    integrate_many,
    rotation_invariance_defect,
)


def gaussian(pts):
    return np.exp(-np.sum(pts**2, axis=-1))


@pytest.mark.parametrize("n,kind,m", [(1, "tensor", 32), (1, "unitary", 32), (2, "unitary", 32), (3, "unitary", 32)])
def test_gaussian_integral(n, kind, m):
    conv = ModelConvention(n)
    res = integrate(QuadratureGrid(n, kind, 0, m), gaussian, conv)
    exact = conv.volume_const * math.pi ** ((2 * n + 1) / 2)
    assert res.value == pytest.approx(exact, rel=1e-9)
    # the estimate is the gap to the coarser rule, so it bounds the fine error loosely
    assert res.error < 1e-5 * exact


def test_unitary_shell_weight_counts_sphere_area():
    # int_{|z|<1, |t|<1} 1 dx dy dt = 2 vol(B^{2n}) = 2 pi^n / n!
    n = 2
    grid = QuadratureGrid(n, "box", 0, 8, lo=(-1,) * 5, hi=(1,) * 5)
    conv = ModelConvention(n, volume_const=1.0)
    val = integrate(grid, lambda p: (np.sum(p[:, :4] ** 2, axis=1) < 1).astype(float), conv).value
    assert val == pytest.approx(2 * math.pi**2 / 2, rel=0.05)
    # unitary grid: radial indicator is smooth after the shell reduction
    f = lambda p: np.exp(-p[:, 0] ** 2 - p[:, -1] ** 2)
    res = integrate(QuadratureGrid(n, "unitary", 0, 32), f, conv)
    assert res.value == pytest.approx(math.pi ** 2.5, rel=1e-10)


def test_box_rule_exact_on_polynomials():
    conv = ModelConvention(1, volume_const=1.0)
    grid = QuadratureGrid(1, "box", 0, 4, lo=(0, 0, -1), hi=(1, 2, 1))
    res = integrate(grid, lambda p: p[:, 0] ** 3 * p[:, 1] + p[:, 2] ** 2, conv)
    assert res.value == pytest.approx(0.25 * 2 * 2 + 2 * 2.0 / 3.0, abs=1e-13)


def test_multi_column():
    conv = ModelConvention(1)
    grid = QuadratureGrid(1, "unitary", 0, 32)
    a, b = integrate_many(grid, lambda p: np.stack([gaussian(p), 2 * gaussian(p)], axis=1), conv)
    assert b.value == pytest.approx(2 * a.value, rel=1e-14)


def test_conformal_weight_matches_explicit_factor():
    conv = ModelConvention(1)
    grid = QuadratureGrid(1, "unitary", 0, 32)
    u = parse_field("-(x1^2 + y1^2 + t^2)/4", 1)
    w = integrate(grid, lambda p: np.ones(len(p)), conv, conformal_weight=u).value
    assert w == pytest.approx(integrate(grid, gaussian, conv).value, rel=1e-12)


def test_nonconvergence_reports_history():
    conv = ModelConvention(1)
    slow = lambda p: 1.0 / np.sqrt(1.0 + p[:, -1] ** 2)  # not integrable in t
    with pytest.raises(IntegrationError) as info:
        integrate(QuadratureGrid(1, "unitary", 0, 8), slow, conv, rel_tol=1e-8, max_level=2)
    assert len(info.value.history) == 3
    assert [h["level"] for h in info.value.history] == [0, 1, 2]


def test_nonfinite_sample_names_node():
    conv = ModelConvention(1)
    with pytest.raises(IntegrationError) as info, np.errstate(divide="ignore"):
        integrate(QuadratureGrid(1, "box", 0, 3, lo=(-1, -1, -1), hi=(1, 1, 1)), lambda p: 1.0 / p[:, 0], conv)
    assert info.value.node is not None


def test_worker_count_does_not_change_result():
    conv = ModelConvention(1)
    grid = QuadratureGrid(1, "tensor", 0, 32)  # 32768 nodes, two chunks
    f = lambda p: np.cos(p[:, 0]) * gaussian(p)
    assert integrate(grid, f, conv, workers=1).value == integrate(grid, f, conv, workers=3).value


def test_evaluate_nodes_chunking():
    pts = np.random.default_rng(0).normal(size=(50, 3))
    assert np.array_equal(evaluate_nodes(gaussian, pts, chunk=7), gaussian(pts))


def test_rotation_invariance_guard():
    radial = lambda p: np.exp(-np.sum(p[:, :-1] ** 2, axis=1))
    assert rotation_invariance_defect(radial, 2, [0.5, 1.0], [0.0, 1.0]) < 1e-14
    assert rotation_invariance_defect(lambda p: p[:, 0] + 2.0, 2, [0.5, 1.0], [0.0, 1.0]) > 1e-3


def test_grid_validation():
    with pytest.raises(ValidationError):
        QuadratureGrid(1, "sparse")
    with pytest.raises(ValidationError):
        QuadratureGrid(1, "box")
    with pytest.raises(ValidationError):
        QuadratureGrid(1, "box", lo=(0, 0, 0), hi=(1, 1, 0))
    with pytest.raises(ValidationError):
        integrate(QuadratureGrid(2), gaussian, ModelConvention(1))
    g = QuadratureGrid(2, "unitary", 1, 16)
    assert g.m == 32 and g.size == 1024 and g.refined().m == 64


def test_sphere_volume_is_stable_under_refinement():
    # f = v0^p, n = 1, p = 4: finite and stable under doubling
    conv = ModelConvention(1)
    v0p = lambda p: (p[:, 2] ** 2 + (1 + p[:, 0] ** 2 + p[:, 1] ** 2) ** 2) ** -2.0
    a = integrate(QuadratureGrid(1, "tensor", 0, 24), v0p, conv)
    b = integrate(QuadratureGrid(1, "tensor", 1, 24), v0p, conv)
    assert a.value > 0 and abs(a.value - b.value) <= 1e-3 * b.value
    assert b.value == pytest.approx(math.pi**2, rel=1e-3)


def test_bump_square_matches_riemann_sum():
    conv = ModelConvention(1, volume_const=1.0)
    bump = catalog_field("bump", {"n": 1, "radius": 0.9, "center": [0.2, 0.0, -0.1]})
    f = lambda p: eval_values(bump, p, 1) ** 2
    lo, hi = (-0.7, -0.9, -1.0), (1.1, 0.9, 0.8)
    gauss = integrate(QuadratureGrid(1, "box", 0, 48, lo=lo, hi=hi), f, conv).value
    m = 240
    axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(m) + 0.5) / m for i in range(3)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    riemann = float(f(pts).sum()) * np.prod(np.subtract(hi, lo)) / m**3
    assert gauss == pytest.approx(riemann, rel=1e-4)
    assert integrate(QuadratureGrid(1, "unitary", 0, 8), lambda p: np.zeros(len(p)), conv).value == 0.0
