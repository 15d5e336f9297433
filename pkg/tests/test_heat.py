from math import log, pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from shrinkerlab.errors import PreconditionError, ResolutionError
from shrinkerlab.heat import (
    ConstantField, KernelField, ModeField, _gegenbauer, ball_mass, concentration_suite,
    duality_check, flat_kernel, gradient_estimate_check, heat_kernel, kernel_bound_suite,
    kernel_reproduction, mass_identities, numerical_kernel, random_samples, semigroup_defect,
    sphere_kernel, sphere_multiplicity,
)
from shrinkerlab.models import make_model


def s3_images(a, gamma, t, s, terms=6):
    """Method of images on the round S^3, rescaled to radius a sqrt(1 - s)."""
    tau = -log((1 - t) / (1 - s)) / a**2
    n = np.arange(-terms, terms + 1)
    g = gamma + 2 * pi * n
    series = np.sum(g / np.sin(gamma) * np.exp(-g**2 / (4 * tau)))
    return np.exp(tau) * (4 * pi * tau) ** -1.5 * series / (a * sqrt(1 - s)) ** 3


@settings(max_examples=30)
@given(alpha=st.floats(0.5, 3.0), x=st.floats(-1, 1))
def test_gegenbauer_recurrence(alpha, x):
    ours = _gegenbauer(alpha, 8, x)
    ref = [special.eval_gegenbauer(j, alpha, x) for j in range(9)]
    assert np.allclose(ours, ref, rtol=1e-10, atol=1e-10)


def test_multiplicity_small_cases():
    assert sphere_multiplicity(2, np.arange(4)).tolist() == pytest.approx([1, 3, 5, 7])
    assert sphere_multiplicity(3, np.arange(4)).tolist() == pytest.approx([1, 4, 9, 16])


@settings(max_examples=25, deadline=None)
@given(gamma=st.floats(0.05, pi - 0.05), t=st.floats(-2, 0.9), T=st.floats(0.05, 2.0))
def test_s3_kernel_matches_images(gamma, t, T):
    a = 2.0
    s = t - T
    ours = float(sphere_kernel(3, a, gamma, t, s).value)
    assert ours == pytest.approx(s3_images(a, gamma, t, s), rel=1e-9)


def test_flat_kernel_integrates_to_one():
    val, _ = integrate.quad(lambda r: 4 * pi * r**2 * flat_kernel(3, r, 0.7), 0, np.inf)
    assert val == pytest.approx(1.0, rel=1e-10)


def test_product_structure(cylinder42):
    x = cylinder42.point(0.4, np.array([1.0, 0.5]))
    y = cylinder42.base_point
    h = heat_kernel(cylinder42, x, 0.3, y, -0.5).value
    sph = sphere_kernel(2, cylinder42.radius, 0.4, 0.3, -0.5).value
    assert h == pytest.approx(float(sph) * float(flat_kernel(2, np.hypot(1.0, 0.5), 0.8)))


def test_kernel_time_order(sphere2):
    p = sphere2.base_point
    with pytest.raises(PreconditionError):
        heat_kernel(sphere2, p, 0.0, p, 0.5)


@pytest.mark.parametrize("name", ["sphere(n=2)", "cylinder(n=4,k=2)", "gaussian(n=3)"])
def test_mass_identities(by_name, name):
    m = by_name[name]
    first, second, expected = mass_identities(m, 0.4, -0.6)
    assert first == pytest.approx(1.0, abs=1e-9)
    assert second == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("name", ["sphere(n=2)", "sphere(n=3)", "cylinder(n=3,k=2)"])
def test_semigroup(by_name, name):
    m = by_name[name]
    x = m.point(0.5, np.array([0.7]) if m.has_flat else None)
    rel, _, _ = semigroup_defect(m, x, 0.5, m.base_point, -0.5, 0.1)
    assert rel <= 1e-8


def test_semigroup_time_order(sphere2):
    p = sphere2.base_point
    with pytest.raises(PreconditionError):
        semigroup_defect(sphere2, p, 0.5, p, -0.5, 0.7)


def test_ball_mass_gaussian_matches_chi():
    m = make_model("gaussian", 3)
    # radius^2 / (2 T) is chi-square with 3 dof
    assert ball_mass(m, 0.5, 0.0, 1.3) == pytest.approx(
        special.gammainc(1.5, 1.3**2 / 2.0), rel=1e-14)


def test_ball_mass_full_sphere(sphere2):
    assert ball_mass(sphere2, 0.5, 0.0, 100.0) == pytest.approx(1.0, abs=1e-10)


# -- PDE route ---------------------------------------------------------------

@pytest.mark.parametrize("name", ["gaussian(n=2)", "sphere(n=2)"])
def test_kernel_reproduction(by_name, name):
    m = by_name[name]
    out = kernel_reproduction(m)
    assert out["relative_error"] <= 1e-5
    assert out["mass_ratio"] == pytest.approx(out["expected_ratio"], rel=1e-8)


def test_numerical_kernel_rejects_short_gap(sphere2):
    with pytest.raises(ResolutionError):
        numerical_kernel(sphere2, 0.0, 0.0, 0.5, 0.49)


@pytest.mark.slow
def test_duality_sphere(sphere2):
    p = sphere2.base_point
    rep = duality_check(sphere2, p, 0.5, sphere2.point(0.3), -1.0)
    assert rep.status == "pass"


# -- bounds --------------------------------------------------------------------

@pytest.mark.parametrize("name", ["gaussian(n=2)", "sphere(n=2)", "cylinder(n=4,k=2)"])
def test_kernel_bounds_on_samples(by_name, name):
    m = by_name[name]
    up, low, const = kernel_bound_suite(m, random_samples(m, 30, seed=1))
    assert up.status == "pass" and low.status == "pass"
    assert const.status == "recorded"


def test_random_samples_deterministic(cylinder42):
    a = random_samples(cylinder42, 5, seed=3)
    b = random_samples(cylinder42, 5, seed=3)
    assert [(x.to_dict(), t) for x, t, _, _ in a] == [(x.to_dict(), t) for x, t, _, _ in b]
    assert all(s < t for _, t, _, s in a)


def test_concentration(sphere2):
    two_set, log_sob = concentration_suite(sphere2, sphere2.base_point, 0.5, 0.0)
    assert two_set.status == "pass" and log_sob.status == "pass"


# -- gradient estimates -------------------------------------------------------

@pytest.mark.parametrize("fld", ["kernel", "mode", "constant"])
def test_gradient_estimates(sphere2, fld):
    field_ = {"kernel": KernelField(sphere2, -1.0, 0.0),
              "mode": ModeField(sphere2, 0.5, 0.0),
              "constant": ConstantField(sphere2)}[fld]
    grad, harnack, second = gradient_estimate_check(sphere2, field_, 0.5)
    assert grad.status == "pass" and harnack.status == "pass"
    assert second.status == "recorded"


def test_kernel_field_derivatives(gaussian3):
    fld = KernelField(gaussian3, -1.0, 0.0)
    r = np.array([0.3, 1.0, 2.0])
    h = 1e-5
    u, grad2, lap = fld.evaluate(np.zeros(3), r, 0.5)
    up = fld.evaluate(np.zeros(3), r + h, 0.5)[0]
    dn = fld.evaluate(np.zeros(3), r - h, 0.5)[0]
    du = (up - dn) / (2 * h)
    d2u = (up - 2 * u + dn) / h**2
    assert np.allclose(grad2, du**2, rtol=1e-6)
    assert np.allclose(lap, d2u + 2 / r * du, rtol=1e-4)


def test_gradient_start_time(sphere2):
    with pytest.raises(PreconditionError):
        gradient_estimate_check(sphere2, ConstantField(sphere2, t_start=0.5), 0.2)
