from math import log, pi

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shrinkerlab.entropy import (
    Domain, bakry_emery_defect, euclidean_sobolev_ratio, local_nu, minimize_mu, mu_profile,
    normalized_potential_sqrt, sandwich_check, sobolev_defect, talenti_bubble, w_functional,
)
from shrinkerlab.errors import PreconditionError
from shrinkerlab.models import make_model


def gaussian_w(n, sigma, tau):
    """W of the heat kernel at scale sigma, evaluated at scale tau on flat R^n."""
    r = tau / sigma
    return 0.5 * n * (r - 1 - log(r))


@pytest.mark.parametrize("tau", [0.25, 1.0, 4.0])
def test_gaussian_mu_vanishes(tau):
    res = minimize_mu(make_model("gaussian", 3), tau)
    assert abs(res.value) <= 1e-5
    assert res.residual <= 1e-7


def test_sphere_mu_at_one(sphere2):
    assert minimize_mu(sphere2, 1.0).value == pytest.approx(log(2) - 1, abs=1e-6)


def test_potential_attains_mu(catalog):
    # u = exp(-f0/2) realizes the constant at tau = 1
    for m in catalog:
        w = w_functional(m, normalized_potential_sqrt(m), 1.0)
        assert w.value == pytest.approx(m.mu, abs=1e-6), m.name


@settings(max_examples=15, deadline=None)
@given(sigma=st.floats(0.3, 3.0), tau=st.floats(0.3, 3.0))
def test_w_of_gaussians_matches_formula(sigma, tau):
    n = 2
    m = make_model("gaussian", n)

    def u(theta, rho):
        return (4 * pi * sigma) ** (-n / 4) * np.exp(-rho**2 / (8 * sigma))
    w = w_functional(m, u, tau)
    assert w.value == pytest.approx(gaussian_w(n, sigma, tau), abs=1e-8)
    assert w.value >= -1e-9


def test_w_rejects_unnormalized(gaussian3):
    with pytest.raises(PreconditionError):
        w_functional(gaussian3, lambda th, r: 2 * np.exp(-r**2 / 8), 1.0)
    with pytest.raises(PreconditionError):
        w_functional(gaussian3, normalized_potential_sqrt(gaussian3), -1.0)


def test_profile_monotone_about_one(sphere2):
    prof = mu_profile(sphere2, [0.3, 0.6, 1.0, 1.5, 3.0])
    assert prof.decreasing_below_one and prof.increasing_above_one
    assert prof.min_gap() >= -1e-6


def test_profile_range(sphere2):
    with pytest.raises(PreconditionError):
        mu_profile(sphere2, [1e-4, 1.0])


def test_restricted_mu_dominates_full(cylinder42):
    full = minimize_mu(cylinder42, 0.5).value
    ball = minimize_mu(cylinder42, 0.5, Domain.ball(3.0)).value
    assert ball >= full - 1e-7


def test_sublevel_precondition(cylinder42):
    with pytest.raises(PreconditionError):
        minimize_mu(cylinder42, 1.0, Domain.sublevel(0.5))


# -- log-Sobolev and Sobolev --------------------------------------------------

DENSITIES = {
    "shifted": lambda th, x1, rp: np.exp(-(x1 - 1.0) ** 2 / 4.0),
    "mode": lambda th, x1, rp: 1.0 + 0.5 * np.cos(th),
    "bump": lambda th, x1, rp: 1.0 + np.exp(-(x1**2 + rp**2)),
}


@pytest.mark.parametrize("name", sorted(DENSITIES))
def test_log_sobolev_defect_nonnegative(catalog, name):
    for m in catalog:
        res = bakry_emery_defect(m, DENSITIES[name])
        assert res.defect >= -1e-8, (m.name, name)


def test_log_sobolev_equality_for_constant(sphere2):
    res = bakry_emery_defect(sphere2, lambda th, x1, rp: np.ones_like(th))
    assert abs(res.entropy) <= 1e-10 and abs(res.fisher) <= 1e-10


def test_bubble_ratio_near_sharp_constant():
    m = make_model("gaussian", 4)
    res = sobolev_defect(m, talenti_bubble(m, 0.5))
    sharp = euclidean_sobolev_ratio(4)
    # truncation only lowers the ratio slightly below the extremal value
    assert res.ratio <= sharp * (1 + 1e-6)
    assert res.ratio >= 0.95 * sharp


def test_euclidean_sobolev_ratio_n3():
    # Aubin-Talenti: K^2 = 4 / (n (n - 2) |S^n|^{2/n}), |S^3| = 2 pi^2
    assert euclidean_sobolev_ratio(3) == pytest.approx(1 / (3 * (2 * pi**2) ** (2 / 3)))


def test_sobolev_needs_three_dimensions(sphere2):
    with pytest.raises(PreconditionError):
        sobolev_defect(sphere2, lambda th, x1, rp: np.ones_like(th))


def test_sandwich_holds(gaussian3):
    res = sandwich_check(gaussian3, 1.0, euclidean_sobolev_ratio(3))
    assert res.lower <= res.middle <= res.upper


def test_local_nu_precondition(cylinder42):
    with pytest.raises(PreconditionError):
        local_nu(cylinder42, Domain.ball(1e-3), 1.0)
