"""Entropy functional, its minimization and the associated functional inequalities.

For a normalized u (integral of u^2 equal to 1) and tau > 0,

    W(u, tau) = int tau (4 |grad u|^2 + R u^2) - u^2 log u^2 dV - n - (n/2) log(4 pi tau),

and mu(g, tau) is its infimum. On a Riemannian product the log-Sobolev
functional tensorizes: for u = u_1 u_2 with each factor normalized, W splits
into one functional per factor (with the factor's dimension in the
constant), and the infimum over all u equals the sum of the factor infima.
The minimizer therefore works factor by factor, except on geodesic balls of
a cylinder, which couple the factors and are solved on a two-dimensional
polar chart.

Each factor problem is discretized by continuous high-order finite
elements and solved by a normalized gradient flow followed by a Newton
polish on the Euler-Lagrange system

    tau (-4 Delta u + R u) - u (log u^2 + 1) = Lambda u,   int u^2 = 1.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from math import log, pi, sqrt

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu, spsolve

from .errors import ConvergenceError, PreconditionError, ResolutionError
from .fem import FESpace, Mesh1D
from .grids import EUCLIDEAN, LINE, POLAR, RadialFunction, RadialGrid, sphere_area

LOG_FLOOR = 1e-300
EL_TOL = 1e-7
NORM_TOL = 1e-10


def _u2logu2(v):
    v2 = v * v
    return v2 * np.log(np.maximum(v2, LOG_FLOOR))


def _sample(model, func, grids):
    """Evaluate ``func(theta, rho)`` on the product of the model's factor grids."""
    mesh = np.meshgrid(*[g.nodes for g in grids], indexing="ij")
    theta = mesh[0] if model.has_sphere else np.zeros_like(mesh[0])
    rho = mesh[-1] if model.has_flat else np.zeros_like(mesh[0])
    values = np.broadcast_to(func(theta, rho), mesh[0].shape)
    return RadialFunction(grids, np.array(values, dtype=float))


def normalized_potential_sqrt(model):
    """u = exp(-f0 / 2) with f0 = f + mu + (n/2) log(4 pi), a unit-norm test function."""
    shift = model.mu + 0.5 * model.n * log(4 * pi)
    return lambda theta, rho: np.exp(-0.5 * (model.potential(theta, rho) + shift))


# ---------------------------------------------------------------------------
# W functional on sampled functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WResult:
    value: float
    error: float
    normalization: float
    kinetic: float


def _w_on(model, u, tau):
    u2 = u.values**2
    norm = u.integrate(u2)
    kinetic = u.integrate(4.0 * u.grad_sq() + model.scalar_curvature * u2)
    ent = u.integrate(_u2logu2(u.values))
    n = model.n
    return tau * kinetic - ent - n - 0.5 * n * log(4 * pi * tau), norm, kinetic


def w_functional(model, u, tau, panels=None, order=None):
    """Evaluate W for a normalized ``u``.

    ``u`` is a callable ``u(theta, rho)`` (sampled on two resolutions to
    estimate the quadrature error) or a :class:`RadialFunction` on the
    model's grids (error reported as ``nan``).

    Raises
    ------
    PreconditionError
        If ``tau <= 0`` or the integral of u^2 differs from 1 by more than 1e-10.
    """
    if tau <= 0:
        raise PreconditionError("tau must be positive")
    panels = panels or model.panels
    order = order or model.order
    if isinstance(u, RadialFunction):
        value, norm, kinetic = _w_on(model, u, tau)
        err = float("nan")
    else:
        fine = _sample(model, u, model.grids(2 * panels, order))
        coarse = _sample(model, u, model.grids(panels, order))
        value, norm, kinetic = _w_on(model, fine, tau)
        err = abs(value - _w_on(model, coarse, tau)[0])
    if abs(norm - 1.0) > NORM_TOL:
        raise PreconditionError(f"test function is not normalized (integral of u^2 = {norm:.12g})")
    return WResult(float(value), float(err), float(norm), float(kinetic))


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """Region for the Dirichlet-restricted entropy.

    ``kind`` is ``"full"``, ``"ball"`` (geodesic ball of ``size`` about the
    base point; every catalog model is homogeneous) or ``"sublevel"``
    ({f <= size}).
    """

    kind: str = "full"
    size: float = float("inf")

    @classmethod
    def ball(cls, r):
        return cls("ball", float(r))

    @classmethod
    def sublevel(cls, a):
        return cls("sublevel", float(a))

    def to_dict(self):
        return {"kind": self.kind, "size": self.size}


FULL = Domain()


def _graded_breaks(length, scale, inner=16, growth=1.35, max_h=None):
    """Uniform cells on [0, 12 scale], then geometric growth up to ``length``."""
    inner_len = min(length, 12.0 * scale)
    breaks = list(np.linspace(0.0, inner_len, inner + 1))
    h = inner_len / inner
    x = inner_len
    while x < length - 1e-12:
        h *= growth
        if max_h is not None:
            h = min(h, max_h)
        x = min(length, x + h)
        if length - x < 0.3 * h:
            x = length
        breaks.append(x)
    return np.array(breaks)


# ---------------------------------------------------------------------------
# factor problems
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class FactorSolution:
    """Minimizer of one factor functional (or of a coupled ball problem)."""

    label: str
    dim: int
    curvature: float
    space: FESpace
    coeffs: np.ndarray
    value: float
    residual: float
    iterations: int
    kinetic: float
    multiplier: float
    coords: str = "theta"

    def quad_values(self):
        return self.space.B @ self.coeffs

    def l2_distance(self, func):
        """L2 distance to ``func`` evaluated at the quadrature points."""
        diff = self.quad_values() - func(*self.space.quad_coords)
        return sqrt(self.space.integrate(diff**2))

    def evaluate(self, *coords):
        return self.space.evaluate(self.coeffs, *coords)

    def snapshot(self):
        nodes = self.space.dof_coords[0][self.space.free]
        return {"label": self.label, "nodes": nodes.tolist(), "values": self.coeffs.tolist()}


def _energy(space, A, u, const):
    v = space.B @ u
    return float(u @ (A @ u) - space.integrate(_u2logu2(v)) - const)


def _minimize_factor(space, tau, R, dim, starts, label, coords, tol=1e-10, max_flow=200,
                     max_newton=40):
    """Normalized gradient flow plus Newton on the discrete Euler-Lagrange system."""
    M, B, wq = space.M, space.B, space.wq
    A = (tau * (4.0 * space.K + R * M)).tocsc()
    const = dim + 0.5 * dim * log(4 * pi * tau)
    m_lu = splu(M)
    best = None
    for start in starts:
        u = space.interpolate(start)
        u = u / sqrt(u @ (M @ u))
        energy = _energy(space, A, u, const)
        dt = 0.5
        iters = 0
        for iters in range(1, max_flow + 1):
            v = B @ u
            lv = np.log(np.maximum(v * v, LOG_FLOOR))
            shift = max(0.0, float(np.max(lv)) + 1.0)
            H = A - B.T @ sparse.diags(wq * (lv + 1.0)) @ B + shift * M
            trial = spsolve((M + dt * H).tocsc(), M @ u)
            trial = trial / sqrt(trial @ (M @ trial))
            e_trial = _energy(space, A, trial, const)
            if e_trial > energy + 1e-13 * max(1.0, abs(energy)):
                dt *= 0.5
                if dt < 1e-8:
                    break
                continue
            diff = trial - u
            change = sqrt(max(diff @ (M @ diff), 0.0))
            u, energy = trial, e_trial
            dt = min(2.0 * dt, 1e3)
            if change < 1e-5:
                break
        u, lam, res, newton_it = _newton(space, A, u, m_lu, tol, max_newton)
        iters += newton_it
        energy = _energy(space, A, u, const)
        if best is None or energy < best[0] - 1e-12:
            best = (energy, u, res, iters, lam)
    energy, u, res, iters, lam = best
    if res > EL_TOL:
        raise ConvergenceError(f"Euler-Lagrange residual above {EL_TOL:g} for {label}", res, energy)
    if float(np.min(u)) < -1e-8 * float(np.max(np.abs(u))):
        raise ConvergenceError(f"minimizer for {label} changed sign", res, energy)
    kinetic = float(u @ ((4.0 * space.K + R * M) @ u))
    return FactorSolution(label, dim, R, space, u, energy, res, iters, kinetic, lam, coords)


def _el_residual(space, A, u, m_lu):
    M, B = space.M, space.B
    v = B @ u
    lv = np.log(np.maximum(v * v, LOG_FLOOR))
    nonlin = B.T @ (space.wq * v * (lv + 1.0))
    Mu = M @ u
    lam = float((u @ (A @ u) - u @ nonlin) / (u @ Mu))
    r = A @ u - nonlin - lam * Mu
    norm = sqrt(max(float(r @ m_lu.solve(r)), 0.0))
    return r, lam, norm, lv, Mu


def _newton(space, A, u, m_lu, tol, max_iter):
    M, B = space.M, space.B
    r, lam, norm, lv, Mu = _el_residual(space, A, u, m_lu)
    it = 0
    for it in range(1, max_iter + 1):
        if norm <= tol:
            break
        J = A - B.T @ sparse.diags(space.wq * (lv + 3.0)) @ B - lam * M
        col = sparse.csc_matrix(-Mu.reshape(-1, 1))
        system = sparse.bmat([[J, col], [col.T, None]], format="csc")
        c = 0.5 * (u @ Mu - 1.0)
        step = spsolve(system, -np.concatenate([r, [-c]]))
        du = step[:-1]
        alpha = 1.0
        while True:
            cand = u + alpha * du
            cand = cand / sqrt(cand @ (M @ cand))
            rc, lc, nc, lvc, Muc = _el_residual(space, A, cand, m_lu)
            if nc < norm or alpha < 1e-3:
                break
            alpha *= 0.5
        if nc >= norm and alpha < 1e-3:
            break
        u, r, lam, norm, lv, Mu = cand, rc, lc, nc, lvc, Muc
    return u, lam, norm, it


def _flat_factor(model, tau, radius=None, degree=6, extent=8.0):
    """Space and starts for the flat factor, Dirichlet at ``radius`` (or extent * sqrt(tau))."""
    m = model.m
    st = sqrt(tau)
    length = radius if radius is not None else extent * st
    breaks = _graded_breaks(length, st, max_h=2.0 * st)
    mesh = Mesh1D(breaks, degree)
    area = sphere_area(m - 1) if m > 1 else 2.0
    space = FESpace([mesh], lambda r: area * r ** (m - 1), [lambda r: np.ones_like(r)],
                    [(False, True)])
    start = lambda r: np.exp(-r**2 / (8 * tau)) * (1.0 - (r / length) ** 2)
    return space, [start]


def _sphere_factor(model, tau, radius=None, degree=6):
    """Space and starts on the sphere factor (Dirichlet at angle ``radius / b``)."""
    k, b = model.k, model.radius
    top = pi if radius is None else radius / b
    sigma = sqrt(2.0 * tau) / b
    breaks = _graded_breaks(top, sigma, max_h=pi / 12)
    mesh = Mesh1D(breaks, degree)
    area = sphere_area(k - 1)
    space = FESpace([mesh], lambda th: area * (b * np.sin(th)) ** (k - 1) * b,
                    [lambda th: np.full_like(th, 1.0 / b**2)],
                    [(False, radius is not None)])
    cut = (lambda th: 1.0 - (th / top) ** 2) if radius is not None else (lambda th: 1.0)
    starts = [] if radius is not None else [lambda th: np.ones_like(th)]
    for width in (0.5, 1.0, 2.0):
        starts.append(lambda th, w=width: np.exp(-(b * th) ** 2 / (8 * tau * w)) * cut(th) + 1e-3)
    return space, starts


def _cylinder_ball(model, tau, r, degree=5):
    """Coupled problem on B(p, r) in polar coordinates of (b theta, rho)."""
    k, m, b = model.k, model.m, model.radius
    if r >= pi * b:
        raise PreconditionError(f"ball radius {r} wraps the sphere factor (needs r < {pi * b:.6g})")
    s_breaks = _graded_breaks(r, sqrt(tau), inner=8, growth=1.5)
    a_breaks = np.linspace(0.0, pi / 2, 5)
    area_k = sphere_area(k - 1)
    area_m = sphere_area(m - 1) if m > 1 else 2.0

    def weight(s, a):
        return (area_k * (b * np.sin(s * np.cos(a) / b)) ** (k - 1)
                * area_m * (s * np.sin(a)) ** (m - 1) * s)

    space = FESpace([Mesh1D(s_breaks, degree), Mesh1D(a_breaks, degree)], weight,
                    [lambda s, a: np.ones_like(s), lambda s, a: 1.0 / s**2],
                    [(False, True), (False, False)])
    starts = [lambda s, a: np.exp(-s**2 / (8 * tau)) * (1.0 - (s / r) ** 2) + 0.0 * a]
    return space, starts


# ---------------------------------------------------------------------------
# minimize_mu
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class MuResult:
    value: float
    tau: float
    residual: float
    iterations: int
    normalization: float
    factors: list
    domain: Domain = FULL
    error: float = float("nan")
    notes: list = field(default_factory=list)

    @property
    def kinetic(self):
        """int 4 |grad u|^2 + R u^2 of the product minimizer (unit-norm factors)."""
        return float(sum(f.kinetic for f in self.factors))

    def evaluate(self, theta, rho):
        """Minimizer at reduced chart points (1D arrays broadcast elementwise)."""
        theta, rho = np.broadcast_arrays(np.atleast_1d(np.asarray(theta, float)),
                                         np.atleast_1d(np.asarray(rho, float)))
        out = np.ones_like(theta)
        for f in self.factors:
            if f.coords == "theta":
                vals = np.array([f.evaluate(np.array([x]))[0] for x in theta])
            elif f.coords == "rho":
                vals = np.array([f.evaluate(np.array([x]))[0] for x in rho])
            else:
                b = f.space.radius_hint
                s = np.hypot(b * theta, rho)
                a = np.arctan2(rho, b * theta)
                vals = np.array([f.evaluate(np.array([si]), np.array([ai]))[0, 0]
                                 for si, ai in zip(s, a)])
            out = out * vals
        return out

    def to_dict(self):
        return {"tau": self.tau, "mu": self.value, "residual": self.residual,
                "iterations": self.iterations, "normalization": self.normalization,
                "error": self.error, "domain": self.domain.to_dict(),
                "snapshot": [f.snapshot() for f in self.factors]}


def _check_resolution(sol, tau):
    """Reject minimizers whose mass sits inside the first element."""
    mesh = sol.space.meshes[0]
    first = mesh.breaks[1]
    v2 = sol.quad_values() ** 2
    inside = sol.space.quad_coords[0] <= first
    frac = sol.space.integrate(np.where(inside, v2, 0.0))
    if frac > 0.5:
        raise ResolutionError(
            f"minimizer at tau={tau:.3g} concentrates below the first cell "
            f"(width {first:.3g}); refine the grid")


def _solve_problem(model, tau, domain, degree, extent):
    factors = []
    if domain.kind == "ball" and model.has_sphere and model.has_flat:
        space, starts = _cylinder_ball(model, tau, domain.size, max(degree - 1, 3))
        space.radius_hint = model.radius
        factors.append(_minimize_factor(space, tau, model.scalar_curvature, model.n, starts,
                                        "ball", "polar2d"))
        return factors
    if model.has_sphere:
        radius = domain.size if domain.kind == "ball" else None
        space, starts = _sphere_factor(model, tau, radius, degree)
        factors.append(_minimize_factor(space, tau, model.scalar_curvature, model.k, starts,
                                        "sphere", "theta"))
    if model.has_flat:
        radius = None
        if domain.kind == "ball":
            radius = domain.size
        elif domain.kind == "sublevel":
            level = domain.size - model.k / 2.0
            if level <= 0:
                raise PreconditionError("sublevel set {f <= a} is empty for this a")
            radius = 2.0 * sqrt(level)
        space, starts = _flat_factor(model, tau, radius, degree, extent)
        factors.append(_minimize_factor(space, 0.0 + tau, 0.0, model.m, starts, "flat", "rho"))
    for f in factors:
        _check_resolution(f, tau)
    return factors


def minimize_mu(model, tau, domain=None, degree=6, estimate_error=False):
    """Compute mu(g, tau), optionally restricted (Dirichlet) to a domain.

    On the full manifold the flat factor is truncated at extent * sqrt(tau)
    with the extent doubled from 8 until successive values agree to 1e-7.

    Raises
    ------
    ConvergenceError
        If the Euler-Lagrange residual stays above 1e-7.
    ResolutionError
        If the minimizer concentrates below the first mesh cell.
    """
    if tau <= 0:
        raise PreconditionError("tau must be positive")
    domain = domain or FULL
    if domain.kind not in ("full", "ball", "sublevel"):
        raise PreconditionError(f"unknown domain kind {domain.kind!r}")
    notes = []
    if domain.kind == "full" and model.has_flat:
        extent, previous = 8.0, None
        for _ in range(4):
            factors = _solve_problem(model, tau, domain, degree, extent)
            value = sum(f.value for f in factors)
            if previous is not None and abs(value - previous) <= 1e-7:
                break
            previous, extent = value, 2.0 * extent
        notes.append(f"flat truncation radius {extent:g} sqrt(tau)")
    else:
        factors = _solve_problem(model, tau, domain, degree, 8.0)
    value = float(sum(f.value for f in factors))
    residual = float(max(f.residual for f in factors))
    norm = 1.0
    for f in factors:
        norm *= f.coeffs @ (f.space.M @ f.coeffs)
    result = MuResult(value, float(tau), residual, int(sum(f.iterations for f in factors)),
                      float(norm), factors, domain, notes=notes)
    if estimate_error:
        coarse = minimize_mu(model, tau, domain, degree - 1, False)
        result.error = abs(coarse.value - value)
    return result


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------

@dataclass
class EntropyProfile:
    model: str
    taus: np.ndarray
    values: np.ndarray
    residuals: np.ndarray
    errors: np.ndarray
    iterations: np.ndarray
    reference: float

    def certificate(self):
        """Per-node tolerance: residual plus discretization estimate."""
        return self.residuals + np.nan_to_num(self.errors, nan=0.0)

    def monotonicity(self):
        """Worst violations of decrease on tau < 1 and increase on tau > 1.

        Each violation is measured against twice the pair's certificate;
        nonpositive numbers mean the property holds.
        """
        cert = self.certificate()
        worst_dec, worst_inc = -np.inf, -np.inf
        for i in range(len(self.taus) - 1):
            step = self.values[i + 1] - self.values[i]
            tol = 2.0 * (cert[i] + cert[i + 1])
            if self.taus[i + 1] <= 1.0:
                worst_dec = max(worst_dec, step - tol)
            elif self.taus[i] >= 1.0:
                worst_inc = max(worst_inc, -step - tol)
        return float(worst_dec), float(worst_inc)

    @property
    def decreasing_below_one(self):
        return self.monotonicity()[0] <= 0.0

    @property
    def increasing_above_one(self):
        return self.monotonicity()[1] <= 0.0

    def min_gap(self):
        """min over nodes of mu(tau) - mu(1)."""
        return float(np.min(self.values) - self.reference)

    def to_rows(self):
        return [{"tau": float(t), "mu": float(v), "residual": float(r),
                 "iterations": int(i), "error": float(e)}
                for t, v, r, i, e in zip(self.taus, self.values, self.residuals,
                                         self.iterations, self.errors)]

    def to_csv(self, path):
        rows = self.to_rows()
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)

    def to_json(self, path=None):
        data = {"model": self.model, "reference_mu": self.reference,
                "decreasing_below_one": self.decreasing_below_one,
                "increasing_above_one": self.increasing_above_one, "nodes": self.to_rows()}
        text = json.dumps(data, indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def mu_profile(model, taus, estimate_error=True, mapper=map):
    """Evaluate mu(g, tau) on ``taus`` (each within [1e-3, 1e3]).

    ``mapper`` may be an executor's ``map`` to run nodes concurrently.
    """
    taus = np.asarray(sorted(float(t) for t in taus))
    if taus.min() < 1e-3 or taus.max() > 1e3:
        raise PreconditionError("tau grid must lie within [1e-3, 1e3]")
    results = list(mapper(lambda t: minimize_mu(model, t, estimate_error=estimate_error), taus))
    reference = minimize_mu(model, 1.0).value
    return EntropyProfile(
        model.name, taus, np.array([r.value for r in results]),
        np.array([r.residual for r in results]), np.array([r.error for r in results]),
        np.array([r.iterations for r in results]), reference)


# ---------------------------------------------------------------------------
# axial chart: non-radial test functions
# ---------------------------------------------------------------------------

def axial_grids(model, panels=None, order=None, extent=None, sphere_radius=None,
                graded=False):
    """Grids for functions of (theta, x1, |x_perp|): sphere angle, one flat axis, the rest.

    ``sphere_radius`` overrides the sphere-factor radius (used at t != 0).
    ``graded`` clusters the flat breaks quadratically toward the origin.
    """
    panels = panels or model.panels
    order = order or model.order
    extent = extent or model.rho_max
    grids = []
    if model.has_sphere:
        grids.append(RadialGrid.gauss(POLAR, model.k, np.linspace(0.0, pi, panels + 1), order,
                                      sphere_radius or model.radius))
    if model.has_flat:
        half = np.linspace(0.0, 1.0, panels + 1)
        half = extent * (half**2 if graded else half)
        grids.append(RadialGrid.gauss(LINE, 1, np.concatenate([-half[:0:-1], half]), order))
        if model.m > 1:
            grids.append(RadialGrid.gauss(EUCLIDEAN, model.m - 1, half, order))
    return tuple(grids)


def axial_panels(model):
    """Default panel count for axial sampling, capped so three-axis charts stay in memory."""
    axes = int(model.has_sphere) + int(model.has_flat) + int(model.m > 1)
    return 2 * model.panels if axes < 3 else max(model.panels // 2, 4)


def axial_coordinates(model, grids):
    mesh = np.meshgrid(*[g.nodes for g in grids], indexing="ij")
    zero = np.zeros_like(mesh[0])
    i = 0
    theta = x1 = rperp = zero
    if model.has_sphere:
        theta, i = mesh[0], 1
    if model.has_flat:
        x1 = mesh[i]
        if model.m > 1:
            rperp = mesh[i + 1]
    return theta, x1, rperp


def sample_axial(model, func, grids):
    theta, x1, rperp = axial_coordinates(model, grids)
    values = np.broadcast_to(func(theta, x1, rperp), theta.shape)
    return RadialFunction(grids, np.array(values, dtype=float))


def entropy_and_fisher(rho, measure):
    """Relative entropy and Fisher information of ``rho`` against the sampled measure.

    Both are RadialFunction on the same grids; ``measure`` multiplies dV.
    """
    w = rho.weights() * measure.values
    mass = float(np.sum(w * rho.values))
    if mass <= 0:
        raise PreconditionError("density has zero mass")
    ent = float(np.sum(w * rho.values * np.log(np.maximum(rho.values, LOG_FLOOR))))
    ent -= mass * log(mass)
    safe = np.maximum(rho.values, LOG_FLOOR)
    fisher = float(np.sum(w * rho.grad_sq() / safe))
    return ent, fisher


@dataclass(frozen=True)
class BakryEmeryResult:
    entropy: float
    fisher: float

    @property
    def defect(self):
        return self.fisher - self.entropy


def bakry_emery_defect(model, rho, panels=None, order=None):
    """Both sides of the log-Sobolev inequality for v0 = exp(-f0) dV.

    ``rho`` is a callable ``rho(theta, x1, rperp)`` on the axial chart.
    """
    panels = panels or axial_panels(model)
    grids = axial_grids(model, panels, order)
    dens = sample_axial(model, rho, grids)
    if np.any(dens.values < 0):
        raise PreconditionError("density must be nonnegative")
    shift = model.mu + 0.5 * model.n * log(4 * pi)
    theta, x1, rperp = axial_coordinates(model, grids)
    f = model.potential(theta, np.hypot(x1, rperp))
    measure = RadialFunction(grids, np.exp(-(f + shift)))
    ent, fisher = entropy_and_fisher(dens, measure)
    return BakryEmeryResult(ent, fisher)


# ---------------------------------------------------------------------------
# Sobolev inequality
# ---------------------------------------------------------------------------

def euclidean_sobolev_ratio(n):
    """Sharp value of (int u^{2n/(n-2)})^{(n-2)/n} / int 4 |grad u|^2 on R^n."""
    k2 = 4.0 / (n * (n - 2) * sphere_area(n) ** (2.0 / n))
    return k2 / 4.0


@dataclass(frozen=True)
class SobolevResult:
    lhs: float
    rhs: float
    mu: float
    n: int

    @property
    def ratio(self):
        return self.lhs / self.rhs

    @property
    def constant(self):
        """C with lhs = C exp(-2 mu / n) rhs."""
        return self.ratio * np.exp(2.0 * self.mu / self.n)


def _sobolev_sides(model, u):
    n = model.n
    q = 2.0 * n / (n - 2)
    lhs = u.integrate(np.abs(u.values) ** q) ** ((n - 2) / n)
    rhs = u.integrate(4.0 * u.grad_sq() + model.scalar_curvature * u.values**2)
    return lhs, rhs


def sobolev_defect(model, u, panels=None, order=None, rtol=1e-3):
    """Both sides of the Sobolev inequality for ``u(theta, x1, rperp)``.

    The function is sampled at two resolutions; disagreement above ``rtol``
    means it is not resolved by the grid.

    Raises
    ------
    PreconditionError
        For n = 2.
    ResolutionError
        If ``u`` varies below the grid scale.
    """
    if model.n < 3:
        raise PreconditionError("the Sobolev exponent 2n/(n-2) needs n >= 3")
    panels = panels or axial_panels(model)
    fine = sample_axial(model, u, axial_grids(model, 2 * panels, order, graded=True))
    coarse = sample_axial(model, u, axial_grids(model, panels, order, graded=True))
    lhs, rhs = _sobolev_sides(model, fine)
    lhs_c, rhs_c = _sobolev_sides(model, coarse)
    if rhs <= 0:
        raise PreconditionError("u must be nonzero")
    if abs(lhs / rhs - lhs_c / rhs_c) > rtol * lhs / rhs:
        raise ResolutionError("test function varies below the grid scale; refine the grid")
    return SobolevResult(float(lhs), float(rhs), model.mu, model.n)


def talenti_bubble(model, eps, center=0.0):
    """Truncated Sobolev extremal (eps^2 + d^2)^{-(n-2)/2} about the base point.

    ``center`` shifts the bubble along the first flat axis. The truncation
    is a smooth cutoff in the squared chart distance at ``rho_max / 2``
    (and at half the sphere's circumference).
    """
    from .flow import eta

    n = model.n
    b = model.radius if model.has_sphere else 1.0
    cap = model.rho_max / 2.0
    if model.has_sphere:
        cap = min(cap, pi * b / 2.0)

    def u(theta, x1, rperp):
        d2 = (b * theta) ** 2 * model.has_sphere + (x1 - center) ** 2 + rperp**2
        return (eps**2 + d2) ** (-(n - 2) / 2.0) * eta(np.sqrt(d2) / (cap / 2.0))
    return u


def sobolev_family(model):
    """Named test functions for the empirical Sobolev constant."""
    fam = {}
    b = model.radius if model.has_sphere else 0.0
    for eps in (0.5, 1.0, 2.0):
        fam[f"bubble eps={eps:g}"] = talenti_bubble(model, eps)
    for width in (0.5, 1.0, 2.0, 4.0):
        fam[f"gaussian width={width:g}"] = (
            lambda th, x1, rp, w=width: np.exp(-((x1**2 + rp**2) + (b * th) ** 2) / w**2))
    if model.has_flat:
        fam["far bump"] = lambda th, x1, rp: np.exp(-((x1 - 8.0) ** 2 + rp**2))
    if model.has_sphere:
        fam["sphere mode"] = lambda th, x1, rp: (1.0 + 0.5 * np.cos(th)) * np.exp(
            -(x1**2 + rp**2) / 16.0)
    return fam


def sobolev_constant(model):
    """sup over :func:`sobolev_family` of lhs / rhs, with per-function ratios."""
    ratios = {name: sobolev_defect(model, u).ratio for name, u in sobolev_family(model).items()}
    return max(ratios.values()), ratios


@dataclass(frozen=True)
class SandwichResult:
    lower: float
    middle: float
    upper: float
    E: float

    @property
    def margin(self):
        return min(self.middle - self.lower, self.upper - self.middle)


def sandwich_check(model, tau, sobolev_ratio, result=None):
    """exp(-2E/n) <= tau int(4|grad u|^2 + R u^2) <= max(n^2, 2E) for the minimizer.

    ``sobolev_ratio`` is the constant C in (int u^{2n/(n-2)})^{(n-2)/n} <=
    C int (4|grad u|^2 + R u^2).
    """
    n = model.n
    if n < 3:
        raise PreconditionError("needs n >= 3")
    result = result or minimize_mu(model, tau)
    E = result.value + n + 0.5 * n * log(4 * pi * sobolev_ratio)
    middle = tau * result.kinetic
    return SandwichResult(float(np.exp(-2.0 * E / n)), float(middle), float(max(n**2, 2 * E)),
                          float(E))


# ---------------------------------------------------------------------------
# local entropy
# ---------------------------------------------------------------------------

@dataclass
class LocalNu:
    value: float
    scales: np.ndarray
    values: np.ndarray
    domain: Domain


def grid_cell(model):
    return model.rho_max / (model.panels * model.order)


def local_nu(model, domain, tau, points=10, decades=3.0):
    """inf over s in (0, tau] of the Dirichlet-restricted mu(Omega, g, s).

    The infimum is taken over ``points`` log-spaced scales spanning
    ``decades`` below ``tau``.

    Raises
    ------
    PreconditionError
        If the domain is smaller than four grid cells.
    """
    if tau <= 0:
        raise PreconditionError("tau must be positive")
    if domain.kind == "ball" and domain.size < 4 * grid_cell(model):
        raise PreconditionError(
            f"ball radius {domain.size} is below four grid cells ({4 * grid_cell(model):.3g})")
    scales = np.logspace(np.log10(tau) - decades, np.log10(tau), points)
    values = np.array([minimize_mu(model, s, domain).value for s in scales])
    return LocalNu(float(values.min()), scales, values, domain)


__all__ = [
    "BakryEmeryResult", "Domain", "EntropyProfile", "FactorSolution", "LocalNu", "MuResult",
    "SandwichResult", "SobolevResult", "WResult", "axial_grids", "bakry_emery_defect",
    "entropy_and_fisher", "euclidean_sobolev_ratio", "local_nu", "minimize_mu", "mu_profile",
    "normalized_potential_sqrt", "sample_axial", "sandwich_check", "sobolev_constant",
    "sobolev_defect", "sobolev_family", "talenti_bubble", "w_functional",
]
