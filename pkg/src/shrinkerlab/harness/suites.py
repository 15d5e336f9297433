"""The verification suites and the run driver.

Each suite maps ``(model, config)`` to a list of :class:`CheckReport`; the
gap experiment runs once over the whole catalog. Suites are independent
tasks, so the driver fans them out over a bounded thread pool and then
assembles the report in the configured order.
"""

from __future__ import annotations

import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from math import gamma as gamma_fn
from math import inf, isfinite, log, pi, sqrt
from pathlib import Path

import numpy as np

from .. import entropy, flow, heat, lgeo, models
from ..checks import CheckReport, identity_check, recorded, timed, upper_check
from ..errors import ConfigError, PreconditionError, ResolutionError, ShrinkerLabError
from ..grids import RadialFunction, ball_volume, sphere_area
from .config import SUITES
from .report import build_report, validate_report, write_report

THREADS_ENV = "SHRINKERLAB_THREADS"
FLOW_TIMES = (-4.0, -1.0, 0.0, 0.5, 0.9)
PSEUDO_NOTE = ("pseudo-locality: only the shrinker-specialized consequences (tau_0 and the "
               "curvature scale) are checked; the general ball statement needs balls in "
               "general position, which the symmetric catalog cannot represent")


def _positive(check_id, anchor, value, constants=None, inputs=None, notes=None):
    """Strict check that an empirical constant is finite and positive."""
    ok = isfinite(value) and value > 0
    return CheckReport(check_id, anchor, float(value), 0.0, float(value) if ok else -inf,
                       True, 0.0, dict(constants or {}), dict(inputs or {}),
                       notes=list(notes or []))


def _lower_check(check_id, anchor, value, floor, tolerance, **kw):
    """Strict check value >= floor."""
    return CheckReport(check_id, anchor, float(value), float(floor), float(value - floor), True,
                       float(tolerance), **kw)


# ---------------------------------------------------------------------------
# shared, lazily computed profiles
# ---------------------------------------------------------------------------

class _ProfileCache:
    """Entropy profiles keyed by (model, tau grid); concurrent callers share one solve."""

    def __init__(self):
        self._lock = threading.Lock()
        self._entries = {}

    def get(self, model, taus):
        key = (model, tuple(float(t) for t in taus))
        with self._lock:
            entry = self._entries.setdefault(key, [threading.Lock(), None])
        with entry[0]:
            if entry[1] is None:
                entry[1] = entropy.mu_profile(model, key[1])
            return entry[1]


def tau_grid(config):
    return tuple(np.logspace(np.log10(config.tau_min), np.log10(config.tau_max),
                             config.tau_points))


def _csv_path(config, name):
    if not config.csv_dir:
        return None
    path = Path(config.csv_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path / name


def _slug(name):
    return name.replace("(", "_").replace(")", "").replace(",", "_").replace("=", "")


def _sample_points(model, count=5):
    """Fixed chart points spread over the sphere angle and the flat radius."""
    pts = []
    for i in range(count):
        frac = i / max(count - 1, 1)
        theta = 0.9 * pi * frac if model.has_sphere else 0.0
        flat = None
        if model.has_flat:
            flat = np.zeros(model.m)
            flat[0] = 6.0 * frac
        pts.append(model.point(theta, flat))
    return pts


# ---------------------------------------------------------------------------
# geometry and flow
# ---------------------------------------------------------------------------

def closed_form_mu(model):
    """log of (4 pi)^{-k/2} e^{-k/2} |S^k(a)|; the flat factor contributes zero."""
    k = model.k
    if k == 0:
        return 0.0
    area = 2.0 * pi ** ((k + 1) / 2.0) / gamma_fn((k + 1) / 2.0)
    return log(area * model.radius**k * np.exp(-k / 2.0) / (4 * pi) ** (k / 2.0))


def geometry_suite(model, config):
    theta, rho = model.node_coordinates()
    res = models.geometry_residuals(model, theta, rho)
    inputs = {"model": model.name, "nodes": int(theta.size)}
    worst = max(res["shrinker_equation"], res["normalization"], res["trace"])
    lower, upper, f0 = models.potential_growth_margins(model, theta, rho)
    ratio = models.volume_ball(model, 1.0) / np.exp(model.mu)
    return [
        identity_check("geometry.identities", "shrinker equation, normalization and trace",
                       worst, config.tolerance("geometry"),
                       constants={k: res[k] for k in ("shrinker_equation", "normalization",
                                                      "trace")}, inputs=inputs),
        _lower_check("geometry.scalar_curvature", "nonnegative scalar curvature",
                     res["min_scalar_curvature"], 0.0, 0.0, inputs=inputs),
        _lower_check("geometry.potential_growth", "quadratic growth of the potential",
                     min(lower, upper), 0.0, 0.0,
                     constants={"lower_margin": lower, "upper_margin": upper, "f_base": f0},
                     inputs=inputs),
        recorded("geometry.unit_volume", "unit ball volume against the entropy",
                 {"ratio": ratio, "C": max(ratio, 1.0 / ratio)}, lhs=ratio, inputs=inputs),
    ]


def flow_suite(model, config):
    inputs = {"model": model.name, "times": list(FLOW_TIMES)}
    theta, rho = model.node_coordinates()
    closed, conj, growth, flowline = {}, 0.0, np.inf, np.inf
    for t in FLOW_TIMES:
        # keep the preimages of the flat nodes inside the grid
        q = flow.FlowChart(model, t).fields(theta, rho * min(1.0, sqrt(1.0 - t)))
        for key, v in q.residuals().items():
            closed[key] = max(closed.get(key, 0.0), v)
        conj = max(conj, float(np.max(np.abs(q.conjugate_ratio()))))
        growth = min(growth, *flow.growth_margins_at(model, t, theta, rho * min(1.0, sqrt(1.0 - t))))
    for x in _sample_points(model):
        for t in (0.0, 0.5, 0.9):
            flowline = min(flowline, flow.flowline_potential_bound(model, x, t)["margin"])
    grid = {}
    for t in (-1.0, 0.0, 0.5):
        for key, v in flow.grid_flow_residuals(model, t).items():
            grid[key] = max(grid.get(key, 0.0), v)
    fam = flow.cutoff_family(model)
    return [
        identity_check("flow.identities", "flow identities for F", max(closed.values()),
                       config.tolerance("flow"), constants=closed, inputs=inputs),
        identity_check("flow.grid_identities", "flow identities from grid derivatives",
                       max(grid.values()), config.tolerance("flow_grid"), constants=grid,
                       inputs=inputs),
        identity_check("flow.special_conjugate", "special conjugate heat solution",
                       conj, config.tolerance("special_solutions"), inputs=inputs),
        _lower_check("flow.growth_bounds", "quadratic bounds on F", growth, 0.0, 0.0,
                     inputs=inputs),
        _lower_check("flow.flowline_bound", "potential along flow lines", flowline, 0.0, 1e-12,
                     inputs=inputs),
        recorded("flow.cutoff_constants", "cutoff family constants", fam.to_dict(),
                 inputs={"model": model.name}),
    ]


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------

def _density_battery(model):
    """Positive densities on the axial chart for the log-Sobolev check of exp(-f0) dV."""
    return {
        "constant": lambda th, x1, rp: np.ones_like(th + x1 + rp),
        "tilt": lambda th, x1, rp: np.exp(0.3 * x1) * (1.0 + 0.0 * th + 0.0 * rp),
        "angular": lambda th, x1, rp: (1.0 + 0.5 * np.cos(th)) * np.exp(-0.02 * (x1**2 + rp**2)),
        "bump": lambda th, x1, rp: 1.0 + np.exp(-((x1 - 1.0) ** 2 + rp**2) - th**2),
    }


def entropy_suite(model, config, cache):
    inputs = {"model": model.name}
    out = []
    mu_cf = closed_form_mu(model)
    out.append(identity_check("entropy.constant", "entropy constant closed form",
                              model.mu - mu_cf, config.tolerance("entropy_constant"),
                              constants={"mu": model.mu, "closed_form": mu_cf}, inputs=inputs))
    at_one = entropy.minimize_mu(model, 1.0)
    w = entropy.w_functional(model, entropy.normalized_potential_sqrt(model), 1.0)
    out.append(identity_check("entropy.carrillo_ni", "entropy attained by the potential",
                              w.value - at_one.value, config.tolerance("carrillo_ni"),
                              constants={"W": w.value, "mu_1": at_one.value,
                                         "mu_constant": model.mu}, inputs=inputs))
    if not model.has_sphere:
        vals = {str(t): entropy.minimize_mu(model, t).value for t in (0.25, 1.0, 4.0)}
        out.append(identity_check("entropy.flat_scales", "flat entropy vanishes at every scale",
                                  max(abs(v) for v in vals.values()),
                                  config.tolerance("entropy_scale"), constants=vals,
                                  inputs=inputs))
    prof = cache.get(model, tau_grid(config))
    path = _csv_path(config, f"entropy_{_slug(model.name)}.csv")
    if path is not None:
        prof.to_csv(path)
    dec, inc = prof.monotonicity()
    cert = prof.certificate()
    pin = {"model": model.name, "tau_min": config.tau_min, "tau_max": config.tau_max,
           "points": config.tau_points}
    out.append(CheckReport("entropy.decreasing_below_one", "entropy monotone below scale one",
                           dec, 0.0, -dec, True, 0.0, {}, pin))
    out.append(CheckReport("entropy.increasing_above_one", "entropy monotone above scale one",
                           inc, 0.0, -inc, True, 0.0, {}, pin))
    out.append(_lower_check("entropy.minimum_at_one", "entropy minimized at scale one",
                            prof.min_gap(), 0.0, 2.0 * float(np.max(cert)),
                            constants={"mu_1": prof.reference}, inputs=pin))
    small = float(prof.values[0])
    out.append(upper_check("entropy.bounded_geometry", "entropy vanishes at small scales",
                           abs(small), config.tolerance("bounded_geometry"), 0.0,
                           constants={"tau": float(prof.taus[0]), "mu": small}, inputs=pin))
    defects = {name: entropy.bakry_emery_defect(model, rho).defect
               for name, rho in _density_battery(model).items()}
    out.append(_lower_check("entropy.log_sobolev", "log-Sobolev for the potential measure",
                            min(defects.values()), 0.0, config.tolerance("log_sobolev"),
                            constants=defects, inputs=inputs))
    if model.n >= 3:
        c, ratios = entropy.sobolev_constant(model)
        euclid = entropy.euclidean_sobolev_ratio(model.n)
        scaled = c * np.exp(2.0 * model.mu / model.n)
        out.append(recorded("entropy.sobolev_constant", "Sobolev constant",
                            {"sup_ratio": c, "C": scaled, "euclidean_ratio": euclid,
                             "ratios": ratios}, lhs=c, inputs=inputs))
        sw = entropy.sandwich_check(model, 1.0, c, at_one)
        out.append(_lower_check("entropy.sandwich", "kinetic energy sandwich of the minimizer",
                                sw.margin, 0.0, 0.0,
                                constants={"lower": sw.lower, "middle": sw.middle,
                                           "upper": sw.upper, "E": sw.E}, inputs=inputs))
    ln = entropy.local_nu(model, entropy.Domain.ball(4.0), 1.0, points=4, decades=2.0)
    out.append(recorded("entropy.local_nu", "local entropy on a ball",
                        {"nu": ln.value, "scales": ln.scales, "values": ln.values},
                        lhs=ln.value, inputs={"model": model.name, "ball": 4.0, "tau": 1.0}))
    return out


# ---------------------------------------------------------------------------
# heat kernel, concentration, reduced geometry
# ---------------------------------------------------------------------------

def _window(config):
    return heat.KernelWindow(delta=config.window_delta, D=config.window_D)


def _duality(model):
    p = model.base_point
    for s in (-1.0, -3.0, -6.0, -9.0, -14.0):
        try:
            return heat.duality_check(model, p, 0.5, p, s)
        except ResolutionError:
            continue
    raise ResolutionError("no resolvable time gap for the duality check")


def kernel_suite(model, config):
    window = _window(config)
    samples = heat.random_samples(model, config.kernel_samples, config.seed, window)
    out = heat.kernel_bound_suite(model, samples, window=window)
    inputs = {"model": model.name}
    rep = heat.kernel_reproduction(model)
    rin = {"model": model.name, "s0": -1.0, "t0": 0.0, "t1": 0.5}
    out.append(upper_check("kernel.closed_form", "closed-form kernel against a PDE solve",
                           rep["relative_error"], config.tolerance("closed_form"), 0.0,
                           constants={"residual": rep["residual"]}, inputs=rin))
    out.append(identity_check("kernel.mass_numerical", "kernel mass evolution from a PDE solve",
                              rep["mass_ratio"] / rep["expected_ratio"] - 1.0,
                              config.tolerance("mass"),
                              constants={"mass_ratio": rep["mass_ratio"],
                                         "expected": rep["expected_ratio"]}, inputs=rin))
    worst, consts = 0.0, {}
    for t, s in ((0.5, 0.0), (0.0, -1.0), (0.9, -4.0)):
        over_y, over_x, expected = heat.mass_identities(model, t, s)
        consts[f"t={t:g},s={s:g}"] = [over_y, over_x, expected]
        worst = max(worst, abs(over_y - 1.0), abs(over_x - expected))
    out.append(identity_check("kernel.mass_identities", "kernel mass identities", worst,
                              config.tolerance("mass"), constants=consts, inputs=inputs))
    p = model.base_point
    x = _sample_points(model, 3)[1]
    defect, _, _ = heat.semigroup_defect(model, x, 0.5, p, -1.0, -0.2)
    out.append(upper_check("kernel.semigroup", "semigroup property", defect,
                           config.tolerance("semigroup"), 0.0,
                           inputs={"model": model.name, "t": 0.5, "rho": -0.2, "s": -1.0}))
    out.append(_duality(model))
    tails, tconst = heat.tail_decay(model, p, 0.5, 0.0)
    out.append(recorded("kernel.tail_constant", "kernel tail decay constant",
                        {"tails": tails, "C": max(tconst)}, inputs=inputs))
    fields = [heat.KernelField(model, -1.0, 0.0), heat.ConstantField(model)]
    if model.has_sphere:
        fields.append(heat.ModeField(model, 0.5, 0.0))
    for fld in fields:
        out.extend(heat.gradient_estimate_check(model, fld, 0.5))
    path = _csv_path(config, f"kernel_{_slug(model.name)}.csv")
    if path is not None:
        heat.write_sweep_csv(heat.kernel_sweep(model, samples), path)
    return out


def concentration_suite(model, config):
    return heat.concentration_suite(model, model.base_point, 0.5, 0.0)


def lgeo_suite(model, config):
    window = _window(config)
    samples = heat.random_samples(model, config.kernel_samples, config.seed, window)
    out = [lgeo.lower_bound_suite(model, samples, exact=True)]
    opt = lgeo.lower_bound_suite(model, samples[:8])
    out.append(opt)
    worst, rows = 0.0, []
    for x, t, y, s in samples[:5]:
        l, _ = lgeo.reduced_distance(model, x, t, y, s)
        exact = lgeo.reduced_distance_exact(model, x, t, y, s)
        rows.append([l, exact])
        worst = max(worst, abs(l - exact) / max(1.0, abs(exact)))
    out.append(upper_check("lgeo.optimizer_closed_form", "reduced distance by path optimization",
                           worst, config.tolerance("reduced_distance"), 0.0,
                           constants={"pairs": rows},
                           inputs={"model": model.name, "samples": 5, "seed": config.seed}))
    if model.has_sphere:
        worst, rows = 0.0, []
        flat = np.zeros(model.m) if model.has_flat else None
        for gamma, t, s in ((0.8, 0.5, 0.0), (2.0, 0.0, -1.0)):
            x, y = model.point(gamma, flat), model.point(0.0, flat)
            l, err = lgeo.dp_oracle(model, gamma, t, s)
            exact = lgeo.reduced_distance_exact(model, x, t, y, s)
            rows.append([l, exact, err])
            worst = max(worst, abs(l - exact) / max(1.0, abs(exact)))
        out.append(upper_check("lgeo.dp_oracle", "reduced distance by dynamic programming",
                               worst, config.tolerance("dp_oracle"), 0.0,
                               constants={"rows": rows}, inputs={"model": model.name}))
    tol = config.tolerance("harnack" if model.has_sphere else "harnack_gaussian")
    out.extend(lgeo.harnack_check(model, count=config.harnack_samples, tolerance=tol,
                                  seed=config.seed))
    return out


# ---------------------------------------------------------------------------
# no-local-collapsing, pseudo-locality, gap, curvature
# ---------------------------------------------------------------------------

def no_local_collapsing_suite(model, r_grid, tolerance=1e-8):
    """Volume-ratio brackets over ``r_grid`` with their empirical constants.

    Radii beyond half the flat grid are skipped.
    """
    limit = model.rho_max / 2.0 if model.has_flat else inf
    radii = [float(r) for r in r_grid if 1.0 <= r <= limit]
    skipped = [float(r) for r in r_grid if not 1.0 <= r <= limit]
    notes = [f"radii {skipped} outside [1, rho_max/2] skipped"] if skipped else []
    inputs = {"model": model.name, "r_grid": radii}
    if not radii:
        return [recorded("collapsing.volume_bracket", "volume ratio bracket", {},
                         inputs=inputs, notes=notes)]
    n, emu = model.n, np.exp(model.mu)
    b1 = models.volume_ball(model, 1.0)
    vols = np.array([models.volume_ball(model, r) for r in radii])
    r = np.array(radii)
    ratio = vols / b1
    out = []
    C = float(np.max(np.maximum(r / ratio, ratio / r**n)))
    out.append(_positive("collapsing.volume_bracket", "volume ratio bracket", 1.0 / C,
                         {"C": C, "ratios": ratio}, inputs, notes))
    bishop = float(np.min((r**n - ratio) / r**n))
    out.append(_lower_check("collapsing.volume_comparison", "volume ratio at most r^n", bishop,
                            0.0, tolerance, inputs=inputs, notes=list(notes)))
    if not model.has_sphere:
        out.append(identity_check("collapsing.flat_ratio", "flat volume ratio r^n",
                                  float(np.max(np.abs(ratio / r**n - 1.0))), tolerance,
                                  inputs=inputs))
    # small balls around any q (the models are homogeneous)
    worst_small = inf
    for rr in radii:
        rhos = np.logspace(-3.0, np.log10(1.0 / rr), 8)[:-1]
        worst_small = min(worst_small, min(models.volume_ball(model, p) / p**n for p in rhos))
    out.append(_positive("collapsing.small_balls", "noncollapsing of small balls",
                         worst_small / b1, {"C": b1 / worst_small, "euclidean": ball_volume(n)},
                         inputs))
    Lam = model.scalar_curvature
    c = float(np.min(vols / r**n / emu * (1.0 + Lam * r**2) ** (n / 2.0)))
    out.append(_positive("collapsing.curvature_scale", "volume lower bound at curvature scale",
                         c, {"c": c, "Lambda": Lam}, inputs))
    eps0 = float(np.min(vols / (emu * r)))
    out.append(_positive("collapsing.linear_growth", "linear volume growth", eps0,
                         {"epsilon_0": eps0}, inputs))
    return out


def collapsing_suite(model, config):
    return no_local_collapsing_suite(model, config.r_grid, config.tolerance("volume"))


def pseudo_locality_scale(model, delta0, profile=None, taus=None, iterations=30):
    """tau_0 = sup{tau : mu(g, s) >= -delta0 for all s < tau} and sup|Rm| tau_0.

    Returns a dict with ``tau0`` (``inf`` if the profile never drops below
    ``-delta0``), ``sup_rm`` (operator norm on 2-forms) and ``product``.
    """
    if not delta0 > 0:
        raise PreconditionError("delta0 must be positive")
    if profile is None:
        profile = entropy.mu_profile(model, taus if taus is not None else
                                     np.logspace(-2, 2, 20), estimate_error=False)
    sup_rm = models.curvature_norms(model)[2]
    below = np.nonzero(profile.values < -delta0)[0]
    notes = []
    if below.size == 0:
        tau0 = inf
    elif below[0] == 0:
        tau0 = float(profile.taus[0])
        notes.append("profile already below -delta0 at the smallest scale; tau_0 is an upper bound")
    else:
        lo, hi = np.log(profile.taus[below[0] - 1]), np.log(profile.taus[below[0]])
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            if entropy.minimize_mu(model, float(np.exp(mid))).value < -delta0:
                hi = mid
            else:
                lo = mid
        tau0 = float(np.exp(0.5 * (lo + hi)))
    product = sup_rm * tau0 if sup_rm > 0 else 0.0
    return {"tau0": tau0, "sup_rm": sup_rm, "product": product, "notes": notes}


def pseudolocality_suite(model, config, cache):
    prof = cache.get(model, tau_grid(config))
    res = pseudo_locality_scale(model, config.delta0, prof)
    inputs = {"model": model.name, "delta0": config.delta0}
    notes = res["notes"] + [PSEUDO_NOTE]
    flat = res["sup_rm"] == 0.0
    # flat models must never leave the entropy well; curved ones have a finite scale
    consistent = (res["tau0"] == inf) if flat else isfinite(res["product"])
    return [
        recorded("pseudolocality.scale", "pseudo-locality scale",
                 {"tau0": res["tau0"], "sup_rm": res["sup_rm"], "product": res["product"]},
                 lhs=res["product"], inputs=inputs, notes=notes),
        CheckReport("pseudolocality.curvature_scale", "curvature bounded at the entropy scale",
                    res["product"], 0.0, 0.0 if consistent else -inf, True, 0.0,
                    {"tau0": res["tau0"]}, inputs),
    ]


def gap_experiment(catalog, tolerance=1e-8):
    """Largest entropy over nonflat models and the resulting empirical gap."""
    nonflat = [m for m in catalog if m.has_sphere]
    flat = [m for m in catalog if not m.has_sphere]
    inputs = {"models": [m.name for m in catalog]}
    out = []
    if flat:
        out.append(identity_check("gap.flat_entropy", "flat entropy vanishes",
                                  max(abs(m.mu) for m in flat), tolerance, inputs=inputs))
    if not nonflat:
        out.append(recorded("gap.entropy_gap", "entropy gap", {},
                            inputs=inputs, notes=["no nonflat model in the catalog"]))
        return out
    top = max(m.mu for m in nonflat)
    mus = {m.name: m.mu for m in nonflat}
    out.append(CheckReport("gap.nonflat_negative", "nonflat entropy strictly negative", top, 0.0,
                           -top if top < 0 else -inf, True, 0.0, {"mu": mus}, inputs))
    out.append(recorded("gap.entropy_gap", "entropy gap", {"delta0": -top, "mu": mus},
                        lhs=-top, inputs=inputs))
    return out


def weighted_curvature_integrals(model, lam=1.0):
    """Quadrature of int |Rm|^2 e^{-lam f} dV and int |Rc|^2 e^{-f} dV, and the second over e^mu."""
    if not lam > 0:
        raise PreconditionError("lambda must be positive")
    rm2, rc2, _ = models.curvature_norms(model)
    grids = model.grids()
    mesh = np.meshgrid(*[g.nodes for g in grids], indexing="ij")
    theta = mesh[0] if model.has_sphere else np.zeros_like(mesh[0])
    rho = mesh[-1] if model.has_flat else np.zeros_like(mesh[0])
    f = model.potential(theta, rho)
    rm_int = RadialFunction(grids, rm2 * np.exp(-lam * f)).integrate()
    rc_int = RadialFunction(grids, rc2 * np.exp(-f)).integrate()
    return float(rm_int), float(rc_int), float(rc_int / np.exp(model.mu))


def weighted_integrals_closed_form(model, lam=1.0):
    """The same integrals from |S^k(a)| and Gaussian moments."""
    rm2, rc2, _ = models.curvature_norms(model)

    def weight(c):
        # int e^{-c f} dV with f = k/2 on the sphere factor and |y|^2/4 on the flat one
        sph = sphere_area(model.k) * model.radius**model.k * np.exp(-c * model.k / 2.0) \
            if model.has_sphere else 1.0
        return sph * (4 * pi / c) ** (model.m / 2.0)
    return rm2 * weight(lam), rc2 * weight(1.0)


def curvature_suite(model, config):
    inputs = {"model": model.name}
    out = []
    spec = models.curvature_spectrum(model)
    c = model.n * (model.n - 1) // 2
    kk = model.k * (model.k - 1) // 2
    analytic = np.array([0.0] * (c - kk) + [model.sectional_curvature] * kk)
    out.append(identity_check("curvature.spectrum", "curvature operator spectrum",
                              float(np.max(np.abs(np.array(spec.eigenvalues) - analytic))),
                              config.tolerance("spectrum"),
                              constants={"eigenvalues": list(spec.eigenvalues)}, inputs=inputs))
    rig = models.rigidity_condition(spec)
    notes = ["threshold undefined for n = 2; a nonnegative spectrum passes vacuously"] \
        if model.n == 2 else []
    out.append(_lower_check("curvature.rigidity", "second curvature eigenvalue threshold",
                            rig.lambda2, rig.threshold, 0.0,
                            constants={"epsilon": rig.epsilon, "lambda1": rig.lambda1},
                            inputs=inputs, notes=notes))
    if model.n >= 3 and rig.passes:
        pmin = models.rigidity_quadratic_oracle(rig.lambda1, rig.lambda2, spec.scalar_curvature,
                                                model.n, trials=10_000, seed=config.seed)
        out.append(_lower_check("curvature.rigidity_oracle", "rigidity quadratic form oracle",
                                pmin, 0.0, config.tolerance("rigidity_oracle"),
                                inputs={"model": model.name, "trials": 10_000,
                                        "seed": config.seed}))
    lam = config.curvature_lambda
    rm_int, rc_int, ratio = weighted_curvature_integrals(model, lam)
    rm_cf, rc_cf = weighted_integrals_closed_form(model, lam)
    scale = max(1.0, abs(rm_cf), abs(rc_cf))
    out.append(identity_check("curvature.weighted_integrals", "weighted curvature integrals",
                              max(abs(rm_int - rm_cf), abs(rc_int - rc_cf)) / scale,
                              config.tolerance("weighted"),
                              constants={"rm_integral": rm_int, "rc_integral": rc_int,
                                         "rm_closed_form": rm_cf, "rc_closed_form": rc_cf},
                              inputs={"model": model.name, "lambda": lam}))
    out.append(recorded("curvature.ricci_constant", "weighted Ricci integral against the entropy",
                        {"C": ratio}, lhs=rc_int, inputs=inputs))
    return out


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

PER_MODEL = {
    "geometry": geometry_suite,
    "flow": flow_suite,
    "entropy": entropy_suite,
    "kernel": kernel_suite,
    "concentration": concentration_suite,
    "lgeo": lgeo_suite,
    "collapsing": collapsing_suite,
    "pseudolocality": pseudolocality_suite,
    "curvature": curvature_suite,
}
NEEDS_CACHE = ("entropy", "pseudolocality")


def worker_count(environ=None):
    """Pool size from SHRINKERLAB_THREADS, defaulting to min(4, cpu count)."""
    environ = os.environ if environ is None else environ
    raw = environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return max(1, min(4, os.cpu_count() or 1))
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer (got {raw!r})") from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer (got {raw!r})")
    return value


def _failure(suite, model_name, exc):
    return CheckReport(f"{suite}.error", "suite execution", float("nan"), float("nan"), -inf,
                       True, 0.0, {}, {"model": model_name},
                       notes=[f"{type(exc).__name__}: {exc}"])


def _run_task(suite, model, config, cache, catalog):
    reports = []
    with timed(reports):
        try:
            if suite == "gap":
                reports.extend(gap_experiment(catalog, config.tolerance("entropy_constant")))
            elif suite in NEEDS_CACHE:
                reports.extend(PER_MODEL[suite](model, config, cache))
            else:
                reports.extend(PER_MODEL[suite](model, config))
        except ShrinkerLabError as exc:
            reports.append(_failure(suite, "catalog" if model is None else model.name, exc))
    name = "catalog" if model is None else model.name
    return [(suite, name, r) for r in reports]


def run_checks(config, catalog=None, threads=None):
    """Run the selected suites; returns ``(suite, model_name, CheckReport)`` in task order."""
    catalog = catalog if catalog is not None else config.build_models()
    threads = threads or worker_count()
    cache = _ProfileCache()
    tasks = []
    for suite in config.suites:
        if suite == "gap":
            tasks.append((suite, None))
        else:
            tasks.extend((suite, m) for m in catalog)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda job: _run_task(job[0], job[1], config, cache, catalog),
                                tasks))
    return [entry for batch in results for entry in batch]


def run_suite(config, out=None, threads=None, validate=True):
    """Execute the configured suites and write the JSON report.

    Returns ``(report, path)``; ``report["summary"]["ok"]`` is false iff a
    strict check failed.
    """
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    catalog = config.build_models()
    entries = run_checks(config, catalog, threads)
    notes = []
    if "pseudolocality" in config.suites:
        notes.append(PSEUDO_NOTE)
    report = build_report(config, catalog, entries, notes, started)
    if validate:
        validate_report(report)
    path = write_report(report, out or config.output)
    return report, path


__all__ = [
    "SUITES", "closed_form_mu", "collapsing_suite", "concentration_suite", "curvature_suite",
    "entropy_suite", "flow_suite", "gap_experiment", "geometry_suite", "kernel_suite",
    "lgeo_suite", "no_local_collapsing_suite", "pseudo_locality_scale", "pseudolocality_suite",
    "run_checks", "run_suite", "tau_grid", "weighted_curvature_integrals",
    "weighted_integrals_closed_form", "worker_count",
]
