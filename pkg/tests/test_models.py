from math import gamma, log, pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from shrinkerlab.errors import GridExtentError, PreconditionError
from shrinkerlab.grids import EUCLIDEAN, POLAR, RadialGrid, ball_volume, integrate_factor
from shrinkerlab.models import (
    curvature_norms, curvature_spectrum, entropy_constant, geometry_residuals, make_model,
    model_from_spec, potential_growth_margins, rigidity_condition, rigidity_epsilon,
    rigidity_quadratic_oracle, sphere_angle, volume_ball,
)


def sphere_entropy(k):
    """log of (4 pi)^{-k/2} e^{-k/2} |S^k| a^k with a^2 = 2(k-1)."""
    area = 2 * pi ** ((k + 1) / 2) / gamma((k + 1) / 2)
    return log(area * (2 * (k - 1)) ** (k / 2) * np.exp(-k / 2) / (4 * pi) ** (k / 2))


# -- catalog and entropy constant ---------------------------------------------

def test_catalog_dimensions(catalog):
    assert [(m.kind, m.n, m.k) for m in catalog] == [
        ("gaussian", 2, 0), ("gaussian", 3, 0), ("gaussian", 4, 0), ("sphere", 2, 2),
        ("sphere", 3, 3), ("cylinder", 3, 2), ("cylinder", 4, 2), ("cylinder", 4, 3)]


def test_sphere_radius_normalization(catalog):
    for m in catalog:
        if m.has_sphere:
            assert m.radius == pytest.approx(sqrt(2 * (m.k - 1)))
            assert m.scalar_curvature == pytest.approx(m.k / 2)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_gaussian_entropy_zero(n):
    assert abs(make_model("gaussian", n).mu) <= 1e-8


@pytest.mark.parametrize("kind,n,k", [("sphere", 2, None), ("cylinder", 4, 2),
                                      ("cylinder", 3, 2)])
def test_two_sphere_entropy(kind, n, k):
    assert make_model(kind, n, k).mu == pytest.approx(log(2) - 1, abs=1e-6)


@pytest.mark.parametrize("kind,n,k", [("sphere", 3, None), ("cylinder", 4, 3)])
def test_three_sphere_entropy(kind, n, k):
    assert make_model(kind, n, k).mu == pytest.approx(sphere_entropy(3), abs=1e-8)


def test_entropy_constant_error_estimate(cylinder42):
    mu, err = entropy_constant(cylinder42)
    assert err < 1e-9
    assert mu == pytest.approx(cylinder42.mu)


def test_make_model_rejects_bad_input():
    with pytest.raises(PreconditionError):
        make_model("torus", 3)
    with pytest.raises(PreconditionError):
        make_model("cylinder", 3, 3)
    with pytest.raises(PreconditionError):
        make_model("gaussian", 1)


def test_model_from_spec_and_json_roundtrip():
    m = model_from_spec({"kind": "cylinder", "n": 4, "k": 2, "grid": {"rho_max": 30.0,
                                                                      "panels": 8}})
    assert (m.n, m.k, m.rho_max, m.panels) == (4, 2, 30.0, 8)
    again = type(m).from_dict(m.to_dict())
    assert again == m


def test_default_rho_max_truncation():
    for n in (2, 3, 4):
        m = make_model("gaussian", n)
        assert np.exp(-m.rho_max**2 / 4) < 1e-16


# -- pointwise identities -----------------------------------------------------

def test_geometry_residuals_on_nodes(catalog):
    for m in catalog:
        theta, rho = m.node_coordinates()
        res = geometry_residuals(m, theta, rho)
        for key in ("shrinker_equation", "normalization", "trace"):
            assert res[key] <= 1e-10, (m.name, key)
        assert res["min_scalar_curvature"] >= 0


def test_potential_growth(catalog):
    for m in catalog:
        theta, rho = m.node_coordinates()
        lower, upper, _ = potential_growth_margins(m, theta, rho)
        assert lower >= 0 and upper >= 0


@settings(max_examples=40, deadline=None)
@given(theta=st.floats(0, pi), rho=st.floats(0, 30))
def test_residuals_vanish_anywhere(theta, rho):
    m = make_model("cylinder", 4, 2)
    res = geometry_residuals(m, np.array([theta]), np.array([rho]))
    assert res["shrinker_equation"] <= 1e-10
    assert res["normalization"] <= 1e-10 * max(1.0, rho**2)


# -- volumes -----------------------------------------------------------------

def test_unit_ball_volume_gaussian():
    assert volume_ball(make_model("gaussian", 3), 1.0) == pytest.approx(4 * pi / 3, rel=1e-12)


@pytest.mark.parametrize("r", [0.5, 2.0, 10.0])
def test_cylinder_volume_against_quad(cylinder42, r):
    a = cylinder42.radius
    top = min(pi, r / a)
    oracle, _ = integrate.quad(lambda th: 2 * pi * a**2 * np.sin(th) * pi * (r**2 - (a * th)**2),
                               0.0, top, epsabs=0, epsrel=1e-12)
    assert volume_ball(cylinder42, r) == pytest.approx(oracle, rel=1e-9)


def test_cylinder_volume_quadratic_growth(cylinder42):
    ratios = [volume_ball(cylinder42, r) / r**2 for r in (8.0, 10.0, 16.0)]
    assert max(ratios) / min(ratios) < 1.5


def test_sphere_volume_saturates(sphere2):
    total = 4 * pi * sphere2.radius**2
    assert volume_ball(sphere2, 10.0) == pytest.approx(total, rel=1e-10)


def test_volume_beyond_grid(gaussian3):
    with pytest.raises(GridExtentError):
        volume_ball(gaussian3, 2 * gaussian3.rho_max)


@settings(max_examples=25, deadline=None)
@given(r1=st.floats(0.1, 10), r2=st.floats(0.1, 10))
def test_volume_monotone(r1, r2):
    m = make_model("cylinder", 3, 2)
    lo, hi = sorted((r1, r2))
    assert volume_ball(m, lo) <= volume_ball(m, hi) * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(m=st.integers(1, 5), r=st.floats(0.1, 20))
def test_euclidean_quadrature_reproduces_ball(m, r):
    value, _ = integrate_factor(lambda x: np.ones_like(x), EUCLIDEAN, m, 0.0, r, panels=2,
                                order=m + 2)
    assert value == pytest.approx(ball_volume(m) * r**m, rel=1e-8)


def test_grid_invariants():
    g = RadialGrid.gauss(POLAR, 3, np.linspace(0, pi, 9), 6, 2.0)
    assert np.all(np.diff(g.nodes) > 0) and np.all(g.weights > 0)
    assert g.integrate(np.ones_like(g.nodes)) == pytest.approx(2 * pi**2 * 8, rel=1e-10)


@settings(max_examples=50)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3),
       st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_sphere_angle_symmetric_and_bounded(u, v):
    u, v = np.array(u), np.array(v)
    if np.linalg.norm(u) < 1e-3 or np.linalg.norm(v) < 1e-3:
        return
    u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
    a = sphere_angle(u, v)
    assert 0 <= a <= pi + 1e-15
    assert a == pytest.approx(sphere_angle(v, u), abs=1e-14)
    assert a == pytest.approx(np.arccos(np.clip(u @ v, -1, 1)), abs=1e-7)


# -- curvature and rigidity ---------------------------------------------------

def test_spectra_analytic(catalog):
    for m in catalog:
        c = m.n * (m.n - 1) // 2
        kk = m.k * (m.k - 1) // 2
        expected = [0.0] * (c - kk) + [1 / m.radius**2 if m.k else 0.0] * kk
        assert np.max(np.abs(np.array(curvature_spectrum(m).eigenvalues) - expected)) <= 1e-12


def test_curvature_norms_constant_curvature():
    # |Rm|^2 = 2 k (k-1) kappa^2, |Rc|^2 = k (k-1)^2 kappa^2 on a round S^k
    for kind, n, k in (("sphere", 3, None), ("cylinder", 4, 2)):
        m = make_model(kind, n, k)
        kappa = 1 / m.radius**2
        rm2, rc2, op = curvature_norms(m)
        assert rm2 == pytest.approx(2 * m.k * (m.k - 1) * kappa**2)
        assert rc2 == pytest.approx(m.k * (m.k - 1) ** 2 * kappa**2)
        assert op == pytest.approx(kappa)


def test_rigidity_epsilon_formula():
    assert rigidity_epsilon(3) == pytest.approx(1 / (1 + sqrt(2)))
    assert rigidity_epsilon(4) == pytest.approx(1 / ((1 + sqrt(2)) * 4))
    with pytest.raises(PreconditionError):
        rigidity_epsilon(2)


def test_rigidity_passes_on_catalog(catalog):
    for m in catalog:
        assert rigidity_condition(curvature_spectrum(m)).passes


def test_rigidity_two_dimensional_negative_spectrum():
    with pytest.raises(PreconditionError):
        rigidity_condition([-1.0], R=1.0)


def test_rigidity_detects_violation():
    # n = 3: lambda_1 = -1, lambda_2 far below the threshold
    res = rigidity_condition([-1.0, -0.9, 5.0], R=6.2)
    assert not res.passes


@settings(max_examples=20, deadline=None)
@given(l1=st.floats(-1, 0), gap=st.floats(0, 2), extra=st.floats(0, 3), seed=st.integers(0, 99))
def test_oracle_nonnegative_when_condition_holds(l1, gap, extra, seed):
    n = 4
    c = n * (n - 1) // 2
    l2 = l1 + gap
    R = 2 * (l1 + (c - 1) * l2 + extra)
    if R < 0:
        return
    res = rigidity_condition([l1, l2] + [l2 + extra / (c - 2)] * (c - 2), R=R)
    if res.passes:
        assert rigidity_quadratic_oracle(l1, l2, R, n, trials=2000, seed=seed) >= -1e-9
