from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shrinkerlab.errors import PreconditionError
from shrinkerlab.flow import (
    F_at, FlowChart, cutoff_eval, cutoff_family, diffeo_trajectory, eta, eta_sqrt_constant,
    flat_trajectory, flowline_potential_bound, grid_flow_residuals, growth_margins_at,
)
from shrinkerlab.models import make_model

TIMES = (-4.0, -1.0, 0.0, 0.5, 0.9)


def test_flow_identities_closed_form(catalog):
    for m in catalog:
        theta, rho = m.node_coordinates()
        for t in TIMES:
            q = FlowChart(m, t).fields(theta, rho * min(1.0, sqrt(1 - t)))
            assert max(q.residuals().values()) <= 1e-10, (m.name, t)
            assert np.max(np.abs(q.conjugate_ratio())) <= 1e-8


def test_grid_residuals_use_ode_route(cylinder42):
    res = grid_flow_residuals(cylinder42, 0.5)
    assert max(res.values()) <= 1e-9


def test_ode_matches_closed_trajectory(cylinder42):
    rho = np.linspace(0.0, 10.0, 11)
    for t in (-2.0, 0.3, 0.8):
        a, ja = flat_trajectory(cylinder42, rho, t, "closed")
        b, jb = flat_trajectory(cylinder42, rho, t, "ode")
        assert np.max(np.abs(a - b)) <= 1e-10
        assert np.max(np.abs(ja - jb)) <= 1e-10


def test_sphere_radius_shrinks(sphere2):
    chart = FlowChart(sphere2, 0.75)
    assert chart.sphere_radius == pytest.approx(sqrt(0.25) * sphere2.radius)
    assert chart.scalar_curvature == pytest.approx(4.0)


def test_time_must_precede_singularity(sphere2):
    with pytest.raises(PreconditionError):
        FlowChart(sphere2, 1.0)


def test_F_at_base_point_equals_tau_bar_f(cylinder42):
    q = F_at(cylinder42, cylinder42.base_point, 0.5)
    assert q.F == pytest.approx(0.5 * cylinder42.k / 2)


@settings(max_examples=30, deadline=None)
@given(r=st.floats(0, 8), t=st.floats(0, 0.95))
def test_flowline_potential_bound(r, t):
    m = make_model("cylinder", 3, 2)
    x = m.point(0.3, np.array([r]))
    out = flowline_potential_bound(m, x, t)
    assert out["margin"] >= -1e-12


@settings(max_examples=30, deadline=None)
@given(t=st.floats(-5, 0.95))
def test_growth_margins_nonnegative(t):
    m = make_model("gaussian", 2)
    rho = np.linspace(0, 10, 21) * min(1.0, sqrt(1 - t))
    lower, upper = growth_margins_at(m, t, np.zeros_like(rho), rho)
    assert lower >= 0 and upper >= 0


def test_diffeo_fixes_sphere_component(cylinder42):
    x = cylinder42.point(1.0, np.array([2.0, 0.0]))
    z = diffeo_trajectory(cylinder42, x, 0.75)
    assert z.sphere == x.sphere
    assert z.rho == pytest.approx(4.0)


# -- cutoff profile -----------------------------------------------------------

@settings(max_examples=100)
@given(s=st.floats(0, 3))
def test_eta_range(s):
    v = float(eta(s))
    assert 0.0 <= v <= 1.0
    if s <= 1:
        assert v == 1.0
    if s >= 2:
        assert v == 0.0


@settings(max_examples=100)
@given(s1=st.floats(0, 3), s2=st.floats(0, 3))
def test_eta_nonincreasing(s1, s2):
    lo, hi = sorted((s1, s2))
    assert eta(lo) >= eta(hi)


def test_eta_derivatives_match_differences():
    s = np.linspace(1.05, 1.95, 19)
    h = 1e-6
    fd1 = (eta(s + h) - eta(s - h)) / (2 * h)
    fd2 = (eta(s + h, 1) - eta(s - h, 1)) / (2 * h)
    assert np.max(np.abs(fd1 - eta(s, 1))) <= 1e-7
    assert np.max(np.abs(fd2 - eta(s, 2))) <= 1e-6


def test_eta_sqrt_constant_finite():
    c = eta_sqrt_constant()
    assert 0 < c < 10


def test_cutoff_family_constants(cylinder42):
    fam = cutoff_family(cylinder42, radii=(1, 4), times=(-1.0, 0.0, 0.5))
    assert fam.phi_range[0] >= 0 and fam.phi_range[1] <= 1
    for v in (fam.grad_constant, fam.time_constant, fam.box_constant):
        assert np.isfinite(v)


def test_cutoff_scale_precondition(cylinder42):
    with pytest.raises(PreconditionError):
        cutoff_eval(cylinder42, 0.5, cylinder42.base_point, 0.0)


def test_cutoff_inside_unit_level(cylinder42):
    vals = cutoff_eval(cylinder42, 4.0, cylinder42.base_point, 0.0)
    assert vals.phi == 1.0 and vals.grad == 0.0


def test_sphere_cutoff_constant_in_space(sphere2):
    # F is constant on the sphere, so phi has no gradient anywhere
    vals = [cutoff_eval(sphere2, 1.0, sphere2.point(th), 0.0) for th in (0.0, 1.0, pi)]
    assert all(v.grad == 0.0 for v in vals)


@settings(max_examples=40, deadline=None)
@given(theta=st.floats(0, pi), rho=st.floats(0, 1e-100), t=st.floats(-2, 0.9))
def test_identities_hold_on_the_axis(theta, rho, t):
    m = make_model("cylinder", 4, 2)
    q = FlowChart(m, t).fields(np.array([theta]), np.array([rho]))
    assert max(q.residuals().values()) <= 1e-10
