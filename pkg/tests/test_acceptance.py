"""End-to-end acceptance criteria, each at its stated tolerance and runtime budget.

Every test appends one ``criterion N: PASS|FAIL`` line, printed at the end
of the session by the hook in conftest.py.
"""

import time
from math import log, sqrt

import numpy as np
import pytest

from shrinkerlab import models
from shrinkerlab.entropy import minimize_mu, mu_profile, normalized_potential_sqrt, w_functional
from shrinkerlab.flow import FlowChart
from shrinkerlab.harness.config import RunConfig
from shrinkerlab.harness.suites import no_local_collapsing_suite, run_suite
from shrinkerlab.heat import (
    concentration_suite, kernel_bound_suite, kernel_reproduction, log_sobolev_kernel,
    mass_identities, random_samples, semigroup_defect,
)
from shrinkerlab.lgeo import (
    b_mean_limit, harnack_check, harnack_value, kernel_lower_defect, reduced_distance,
)

RESULTS = {}


def verdict(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


def flow_times():
    return (-4.0, -1.0, 0.0, 0.5, 0.9)


def test_criterion_1_geometry_identities(catalog):
    start = time.perf_counter()
    worst = 0.0
    for m in catalog:
        theta, rho = m.node_coordinates()
        res = models.geometry_residuals(m, theta, rho)
        worst = max(worst, res["shrinker_equation"], res["normalization"], res["trace"])
        for t in flow_times():
            q = FlowChart(m, t).fields(theta, rho * min(1.0, sqrt(1.0 - t)))
            worst = max(worst, max(q.residuals().values()))
    elapsed = time.perf_counter() - start
    verdict(1, worst <= 1e-10 and elapsed < 10,
            f"max residual {worst:.2e} (<= 1e-10), {elapsed:.1f} s (< 10 s)")


def test_criterion_2_entropy_exactness(catalog):
    start = time.perf_counter()
    errs = {}
    errs["gaussian constant"] = max(abs(models.entropy_constant(m)[0])
                                    for m in catalog if m.kind == "gaussian")
    two_sphere = log(2.0) - 1.0
    errs["S2, S2xR2 constant"] = max(
        abs(models.entropy_constant(models.make_model(*spec))[0] - two_sphere)
        for spec in (("sphere", 2), ("cylinder", 4, 2)))
    errs["gaussian mu(tau)"] = max(abs(minimize_mu(m, tau).value)
                                   for m in catalog if m.kind == "gaussian"
                                   for tau in (0.25, 1.0, 4.0))
    errs["Carrillo-Ni"] = max(
        abs(minimize_mu(m, 1.0).value - w_functional(m, normalized_potential_sqrt(m), 1.0).value)
        for m in catalog)
    elapsed = time.perf_counter() - start
    ok = (errs["gaussian constant"] <= 1e-8 and errs["S2, S2xR2 constant"] <= 1e-6
          and errs["gaussian mu(tau)"] <= 1e-5 and errs["Carrillo-Ni"] <= 1e-6
          and elapsed < 300)
    verdict(2, ok, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()) + f", {elapsed:.0f} s")


def test_criterion_3_monotonicity():
    taus = np.logspace(-2, 2, 20)
    details, ok = [], True
    for spec in (("sphere", 2), ("cylinder", 4, 2)):
        m = models.make_model(*spec)
        prof = mu_profile(m, taus)
        cert = prof.certificate()
        gap = prof.min_gap()
        mono = prof.decreasing_below_one and prof.increasing_above_one
        at_one = gap >= -2.0 * float(np.max(cert))
        ok &= mono and at_one
        details.append(f"{m.name}: monotone={mono}, min-mu(1)={gap:.1e}")
        if m.kind == "cylinder":
            small = abs(prof.values[0])
            ok &= small <= 0.05
            details.append(f"|mu(1e-2)|={small:.1e}")
    verdict(3, ok, "; ".join(details))


def test_criterion_4_kernel_bounds(catalog):
    start = time.perf_counter()
    ok, details = True, []
    for m in catalog:
        up = kernel_bound_suite(m, random_samples(m, 200, seed=0))[0]
        ok &= up.status == "pass"
    details.append(f"ultracontractivity on 200 samples x {len(catalog)} models: {ok}")
    closed = max(kernel_reproduction(m)["relative_error"]
                 for m in catalog if m.kind == "gaussian")
    ok &= closed <= 1e-5
    details.append(f"gaussian closed form {closed:.1e}")
    mass = 0.0
    for m in catalog:
        if m.kind != "cylinder":
            continue
        first, second, expected = mass_identities(m, 0.5, -0.5)
        mass = max(mass, abs(first - 1.0), abs(second - expected))
        pde = kernel_reproduction(m)
        mass = max(mass, abs(pde["mass_ratio"] - pde["expected_ratio"]))
    ok &= mass <= 1e-5
    details.append(f"cylinder mass {mass:.1e}")
    semi = 0.0
    for m in catalog:
        x = m.point(0.6, np.full(m.m, 0.5) if m.has_flat else None)
        semi = max(semi, semigroup_defect(m, x, 0.5, m.base_point, -0.5, 0.0)[0])
    ok &= semi <= 1e-6
    elapsed = time.perf_counter() - start
    ok &= elapsed < 300
    details.append(f"semigroup {semi:.1e}, {elapsed:.0f} s")
    verdict(4, ok, "; ".join(details))


def test_criterion_5_lower_bound_and_harnack(catalog):
    g = models.make_model("gaussian", 3)
    margin = 0.0
    for x, t, y, s in random_samples(g, 5, seed=4):
        l, _ = reduced_distance(g, x, t, y, s)
        margin = max(margin, abs(kernel_lower_defect(g, x, t, y, s, l).relative_margin))
    ok = margin <= 1e-6
    T = 0.5
    vflat = max(abs(harnack_value(g, 0.0, r, T, T - tau).v)
                for r in np.linspace(0.1, 4.0, 10) for tau in np.geomspace(0.01, 1.0, 10))
    ok &= vflat <= 1e-8
    vcyl = True
    for m in catalog:
        if m.kind == "cylinder":
            vcyl &= harnack_check(m, T, count=50, tolerance=1e-4)[0].status == "pass"
    ok &= vcyl
    bgap = max(abs(b_mean_limit(m, T)[0] - m.n / 2.0) for m in catalog)
    ok &= bgap <= 1e-3
    verdict(5, ok, f"gaussian lower-bound margin {margin:.1e}, gaussian |v| {vflat:.1e}, "
                   f"cylinder v <= 1e-4: {vcyl}, b-mean gap {bgap:.1e}")


def test_criterion_6_concentration(catalog):
    ok = True
    for m in catalog:
        two_set, log_sob = concentration_suite(m, m.base_point, 0.5, 0.0)
        ok &= two_set.status == "pass" and two_set.constants["pairs"] == 12
        ok &= log_sob.status == "pass" and len(log_sob.constants["defects"]) == 6
    tilt = 0.0
    for m in catalog:
        if m.kind == "gaussian":
            for a in (0.5, 1.0):
                ent, fisher = log_sobolev_kernel(
                    m, 0.5, 0.0, lambda th, x1, rp, a=a: np.exp(a * x1) + 0.0 * th)
                tilt = max(tilt, abs(fisher - ent))
    ok &= tilt <= 1e-6
    verdict(6, ok, f"two-set and battery strict on all models; gaussian tilt defect {tilt:.1e}")


def test_criterion_7_collapsing():
    r_grid = (1.0, 2.0, 4.0, 8.0, 16.0)
    ok = True
    for spec in (("cylinder", 3, 2), ("cylinder", 4, 2), ("cylinder", 4, 3)):
        for rep in no_local_collapsing_suite(models.make_model(*spec), r_grid):
            ok &= rep.status != "fail"
            ok &= all(np.all(np.isfinite(v)) for v in rep.constants.values()
                      if isinstance(v, (float, np.ndarray)))
    flat = 0.0
    for n in (2, 3, 4):
        m = models.make_model("gaussian", n)
        b1 = models.volume_ball(m, 1.0)
        flat = max(flat, max(abs(models.volume_ball(m, r) / b1 / r**n - 1.0) for r in r_grid))
    ok &= flat <= 1e-8
    verdict(7, ok, f"cylinder brackets hold with finite constants; gaussian ratio error {flat:.1e}")


def test_criterion_8_rigidity(catalog):
    spec_err, ok = 0.0, True
    worst_p = np.inf
    for m in catalog:
        spec = models.curvature_spectrum(m)
        c = m.n * (m.n - 1) // 2
        kk = m.k * (m.k - 1) // 2
        analytic = [0.0] * (c - kk) + [1.0 / m.radius**2 if m.k else 0.0] * kk
        spec_err = max(spec_err, float(np.max(np.abs(np.array(spec.eigenvalues) - analytic))))
        rig = models.rigidity_condition(spec)
        ok &= rig.passes
        if m.n >= 3:
            assert rig.epsilon == pytest.approx(1.0 / ((1.0 + sqrt(2.0)) * (c - 2)))
            worst_p = min(worst_p, models.rigidity_quadratic_oracle(
                rig.lambda1, rig.lambda2, spec.scalar_curvature, m.n, trials=10_000, seed=0))
    ok &= spec_err <= 1e-12 and worst_p >= -1e-9
    verdict(8, ok, f"spectrum error {spec_err:.1e}, rigidity passes, min P {worst_p:.2e}")


@pytest.mark.slow
def test_criterion_9_determinism_full_run(tmp_path):
    cfg = RunConfig(csv_dir=str(tmp_path / "csv"))
    start = time.perf_counter()
    first, _ = run_suite(cfg, tmp_path / "first.json")
    elapsed = time.perf_counter() - start
    second, _ = run_suite(cfg, tmp_path / "second.json", threads=1)
    s = first["summary"]
    ok = (first["digest"] == second["digest"] and s["fail"] == 0 and s["total"] >= 40
          and elapsed < 1800)
    failing = [c["id"] for c in first["checks"] if c["status"] == "fail"]
    verdict(9, ok, f"digests equal: {first['digest'] == second['digest']}, {s['total']} checks, "
                   f"{s['fail']} failures {failing}, full run {elapsed:.0f} s (< 1800 s)")
