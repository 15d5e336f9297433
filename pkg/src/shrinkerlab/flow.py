"""The self-similar flow induced by a shrinker.

For t < 1 the flow is g(t) = (1-t) (psi^t)^* g where psi^t integrates
d/dt psi = grad f(psi) / (1-t) with psi^0 = id. On the catalog the
potential gradient lives on the flat factor, so trajectories move only in
the flat radius rho while the sphere factor keeps its angle and shrinks to
radius sqrt(1-t) a.

Quantities at (x, t) are those of (M, tau_bar g, tau_bar f) pulled back by
psi^t, which gives closed expressions at z = psi^t x:

    F = tau_bar f(z),   |grad F|^2 = tau_bar |grad f|^2(z),
    Delta F = Delta f(z),   R(t) = R(z) / tau_bar,
    dF/dt = -f(z) + |grad f|^2(z).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi, sqrt

import numpy as np
from scipy.integrate import solve_ivp

from .errors import GridExtentError, PreconditionError
from .grids import EUCLIDEAN, POLAR, RadialGrid
from .models import AXIS_EPS, Point

ODE_TOL = 1e-13


def _check_time(t):
    if not t < 1.0:
        raise PreconditionError(f"flow time must satisfy t < 1, got {t}")


def _flat_rhs(model):
    def rhs(t, state):
        n = state.size // 2
        rho, jac = state[:n], state[n:]
        _, f_r, f_rr, _, _ = model.potential_parts(0.0, rho)
        return np.concatenate([f_r, f_rr * jac]) / (1.0 - t)
    return rhs


def flat_trajectory(model, rho, t, method="auto"):
    """Image radius rho(t) and Jacobian d rho(t) / d rho(0) along psi^t.

    ``method`` is ``"closed"`` (catalog formula), ``"ode"`` (adaptive
    embedded Runge-Kutta 8(5,3) with local tolerance 1e-13, backward for
    t < 0) or ``"auto"``.
    """
    _check_time(t)
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if not model.has_flat or t == 0.0:
        return rho.copy(), np.ones_like(rho)
    if method in ("auto", "closed"):
        scale = 1.0 / sqrt(1.0 - t)
        out, jac = rho * scale, np.full_like(rho, scale)
    elif method == "ode":
        sol = solve_ivp(_flat_rhs(model), (0.0, t), np.concatenate([rho, np.ones_like(rho)]),
                        method="DOP853", rtol=ODE_TOL, atol=ODE_TOL)
        if not sol.success:
            raise PreconditionError(f"trajectory integration failed: {sol.message}")
        out, jac = sol.y[: rho.size, -1], sol.y[rho.size:, -1]
    else:
        raise PreconditionError(f"unknown trajectory method {method!r}")
    worst = float(np.max(out, initial=0.0))
    if worst > model.rho_max:
        raise GridExtentError("flow trajectory leaves the truncated flat factor", worst)
    return out, jac


def diffeo_trajectory(model, x, t, method="auto"):
    """psi^t(x) as a :class:`Point` (the sphere component is fixed)."""
    _check_time(t)
    if not model.has_flat:
        return x
    rho = x.rho
    image, _ = flat_trajectory(model, rho, t, method)
    flat = np.asarray(x.flat) * (image[0] / rho if rho > 0 else 1.0)
    return Point(x.sphere, tuple(float(v) for v in flat))


@dataclass(frozen=True)
class FlowChart:
    """Induced flow data of ``model`` at time ``t``."""

    model: object
    t: float
    method: str = "auto"

    def __post_init__(self):
        _check_time(self.t)

    @property
    def tau_bar(self):
        return 1.0 - self.t

    @property
    def sphere_radius(self):
        """Sphere-factor radius of g(t)."""
        return sqrt(self.tau_bar) * self.model.radius

    @property
    def scalar_curvature(self):
        return self.model.scalar_curvature / self.tau_bar

    def metric_residual(self, rho):
        """Max deviation of tau_bar (psi^t)^* g from the closed-form g(t) components.

        The flat factor of g(t) is static; the sphere factor has squared
        radius tau_bar a^2 and is untouched by psi^t.
        """
        _, jac = flat_trajectory(self.model, rho, self.t, self.method)
        flat = float(np.max(np.abs(self.tau_bar * jac**2 - 1.0))) if self.model.has_flat else 0.0
        sph = 0.0
        if self.model.has_sphere:
            sph = abs(self.tau_bar * self.model.radius**2 - self.sphere_radius**2)
        return max(flat, sph)

    def fields(self, theta, rho):
        """Analytic F and its derivatives at chart points (arrays broadcast)."""
        theta, rho = np.broadcast_arrays(np.asarray(theta, float), np.asarray(rho, float))
        shape = rho.shape
        image, _ = flat_trajectory(self.model, rho.ravel(), self.t, self.method)
        image = image.reshape(shape)
        f, f_r, f_rr, f_t, f_tt = self.model.potential_parts(theta, image)
        m, k = self.model.m, self.model.k
        a2 = self.model.radius**2 if self.model.has_sphere else 1.0
        tb = self.tau_bar
        grad_sq = f_r**2 + (f_t**2 / a2 if self.model.has_sphere else 0.0)
        lap = np.zeros_like(f)
        if self.model.has_flat:
            off = image > AXIS_EPS
            lap = lap + f_rr + (m - 1) * np.where(off, f_r / np.where(off, image, 1.0), f_rr)
        if self.model.has_sphere:
            s = np.sin(theta)
            off = s > AXIS_EPS
            cot = np.where(off, np.cos(theta) * f_t / np.where(off, s, 1.0), f_tt)
            lap = lap + (f_tt + (k - 1) * cot) / a2
        R = np.full_like(f, self.model.scalar_curvature / tb)
        return FlowQuantities(F=tb * f, F_t=-f + grad_sq, grad_sq=tb * grad_sq, lap=lap,
                              R=R, tau_bar=tb, n=self.model.n)

    def node_grids(self, panels=None, order=None):
        """Gauss grids of g(t) whose flat nodes stay inside the grid under psi^t."""
        model = self.model
        panels = panels or model.panels
        order = order or model.order
        grids = []
        if model.has_sphere:
            grids.append(RadialGrid.gauss(POLAR, model.k, np.linspace(0.0, pi, panels + 1),
                                          order, self.sphere_radius))
        if model.has_flat:
            hi = model.rho_max * min(1.0, sqrt(self.tau_bar))
            grids.append(RadialGrid.gauss(EUCLIDEAN, model.m, np.linspace(0.0, hi, panels + 1),
                                          order))
        return tuple(grids)


@dataclass(frozen=True)
class FlowQuantities:
    """F and the derivative data entering the flow identities."""

    F: np.ndarray
    F_t: np.ndarray
    grad_sq: np.ndarray
    lap: np.ndarray
    R: np.ndarray
    tau_bar: float
    n: int

    @property
    def box(self):
        """Heat operator applied to F."""
        return self.F_t - self.lap

    def residuals(self):
        """Max residuals of the four flow identities."""
        tb = self.tau_bar
        return {
            "time_derivative": float(np.max(np.abs(self.F_t + tb * self.R))),
            "trace": float(np.max(np.abs(tb * self.R + self.lap - self.n / 2.0))),
            "normalization": float(np.max(np.abs(tb**2 * self.R + self.grad_sq - self.F))),
            "heat_operator": float(np.max(np.abs(self.box + self.n / 2.0))),
        }

    def relative_residuals(self):
        """Residuals divided by the sum of the magnitudes of their terms.

        Used for numerically differentiated data, where cancellation between
        terms of size F sets the attainable accuracy.
        """
        tb, n = self.tau_bar, self.n
        F, Ft, G, L, R = self.F, self.F_t, self.grad_sq, self.lap, self.R

        def rel(terms):
            total = sum(terms)
            scale = sum(np.abs(x) for x in terms)
            return float(np.max(np.abs(total) / np.maximum(scale, 1e-300)))

        conj = [-n / (2.0 * tb) + 0 * F, Ft / tb, F / tb**2, -G / tb**2, L / tb, R]
        return {
            "time_derivative": rel([Ft, tb * R]),
            "trace": rel([tb * R, L, -n / 2.0 + 0 * F]),
            "normalization": rel([tb**2 * R, G, -F]),
            "heat_operator": rel([Ft, -L, n / 2.0 + 0 * F]),
            "special_conjugate": rel(conj),
        }

    def conjugate_ratio(self):
        """(box* vbar) / vbar for vbar = (4 pi tau_bar)^{-n/2} exp(-F / tau_bar)."""
        tb = self.tau_bar
        return (-self.n / (2.0 * tb) + self.F_t / tb + self.F / tb**2
                - self.grad_sq / tb**2 + self.lap / tb + self.R)


def F_at(model, x, t, method="auto"):
    """F(x, t) = (1-t) f(psi^t x) with its time derivative, gradient and Laplacian.

    Returns a :class:`FlowQuantities` holding scalars.
    """
    chart = FlowChart(model, t, method)
    q = chart.fields(x.theta, x.rho)
    return FlowQuantities(*(float(v) if np.ndim(v) == 0 else float(np.asarray(v).item())
                            for v in (q.F, q.F_t, q.grad_sq, q.lap, q.R)), q.tau_bar, q.n)


def grid_flow_residuals(model, t, panels=4, order=6):
    """Relative identity residuals with derivatives taken spectrally on Gauss nodes.

    Few wide panels keep the roundoff amplification of the differentiation
    matrices small; F is polynomial in rho on the catalog, so they resolve it.

    This is the numerical route: F is sampled through the trajectory solver
    on the nodes of g(t) and differentiated on the grid, independent of the
    closed-form derivative data in :meth:`FlowChart.fields`.
    """
    chart = FlowChart(model, t, "ode")
    grids = chart.node_grids(panels, order)
    mesh = np.meshgrid(*[g.nodes for g in grids], indexing="ij")
    theta = mesh[0] if model.has_sphere else np.zeros_like(mesh[0])
    rho = mesh[-1] if model.has_flat else np.zeros_like(mesh[0])
    exact = chart.fields(theta, rho)
    F = exact.F
    grad_sq = np.zeros_like(F)
    lap = np.zeros_like(F)
    for axis, g in enumerate(grids):
        d1 = g.derivative(F, axis)
        d2 = g.derivative(d1, axis)
        grad_sq += g.metric_factor * d1**2
        x = mesh[axis]
        if g.kind == EUCLIDEAN:
            lap += d2 + (g.dim - 1) * d1 / x
        else:
            lap += g.metric_factor * (d2 + (g.dim - 1) * np.cos(x) / np.sin(x) * d1)
    numeric = FlowQuantities(F, exact.F_t, grad_sq, lap, exact.R, exact.tau_bar, model.n)
    return numeric.relative_residuals() | {"metric": chart.metric_residual(rho.ravel())}


def flowline_potential_bound(model, x, t):
    """Compare f(psi^t x) with f(x) / (1-t) for 0 <= t < 1."""
    if not 0.0 <= t < 1.0:
        raise PreconditionError("flowline bound needs 0 <= t < 1")
    z = diffeo_trajectory(model, x, t)
    lhs = float(model.potential(z.theta, z.rho))
    rhs = float(model.potential(x.theta, x.rho)) / (1.0 - t)
    return {"lhs": lhs, "rhs": rhs, "margin": rhs - lhs}


def growth_margins_at(model, t, theta, rho):
    """Margins of the time-dependent quadratic bounds on F about the base point."""
    chart = FlowChart(model, t)
    q = chart.fields(theta, rho)
    tb = chart.tau_bar
    a = model.radius if model.has_sphere else 0.0
    d = np.sqrt(tb * (a * np.asarray(theta)) ** 2 + np.asarray(rho) ** 2)
    n = model.n
    lower = q.F - 0.25 * np.maximum(d - 5 * n * tb - 4, 0.0) ** 2
    upper = 0.25 * (d + np.sqrt(2 * n * tb)) ** 2 - q.F
    return float(np.min(lower)), float(np.min(upper))


# ---------------------------------------------------------------------------
# cutoff family
# ---------------------------------------------------------------------------

def eta(s, nu=0):
    """Cutoff profile (``nu``-th derivative): 1 on [0,1], quintic smoothstep down to 0 at 2."""
    s = np.asarray(s, dtype=float)
    u = np.clip(s - 1.0, 0.0, 1.0)
    inside = (s > 1.0) & (s < 2.0)
    if nu == 0:
        # 1 - S(u) = S(1 - u) for the smoothstep S; avoids cancellation near s = 2
        v = 1.0 - u
        return v**3 * (6 * v**2 - 15 * v + 10)
    if nu == 1:
        return np.where(inside, -30.0 * u**2 * (1 - u) ** 2, 0.0)
    if nu == 2:
        return np.where(inside, -60.0 * u * (1 - u) * (1 - 2 * u), 0.0)
    raise PreconditionError("eta derivatives available up to second order")


def eta_sqrt_constant(samples=200_001):
    """sup |eta'| / sqrt(eta) on (1, 2), sampled densely."""
    s = np.linspace(1.0, 2.0, samples)[1:-1]
    return float(np.max(np.abs(eta(s, 1)) / np.sqrt(eta(s))))


@dataclass(frozen=True)
class CutoffValues:
    phi: float
    grad: float
    phi_t: float
    lap: float
    box: float
    box_star: float


def _cutoff_arrays(q, r):
    s = q.F / r
    e0, e1, e2 = eta(s), eta(s, 1), eta(s, 2)
    grad = np.abs(e1) * np.sqrt(q.grad_sq) / r
    phi_t = e1 * q.F_t / r
    lap = e2 * q.grad_sq / r**2 + e1 * q.lap / r
    return e0, grad, phi_t, lap, phi_t - lap, -phi_t - lap + q.R * e0


def cutoff_eval(model, r, x, t):
    """phi^r = eta(F / r) and its derivative data at (x, t).

    ``grad`` is the norm |grad phi| in g(t).
    """
    if r < 1:
        raise PreconditionError("cutoff scale r must be >= 1")
    chart = FlowChart(model, t)
    q = chart.fields(x.theta, x.rho)
    return CutoffValues(*(float(np.asarray(v).item()) for v in _cutoff_arrays(q, r)))


@dataclass
class CutoffFamily:
    """Measured constants of the cutoff family over a set of scales and times."""

    radii: tuple
    times: tuple
    eta_constant: float = float("nan")
    grad_constant: float = 0.0
    time_constant: float = 0.0
    box_constant: float = 0.0
    per_radius: dict = field(default_factory=dict)
    phi_range: tuple = (1.0, 0.0)

    def to_dict(self):
        return {"profile": "quintic smoothstep on [1,2]", "radii": list(self.radii),
                "times": list(self.times), "eta_constant": self.eta_constant,
                "grad_constant": self.grad_constant, "time_constant": self.time_constant,
                "box_constant": self.box_constant,
                "per_radius": {str(k): v for k, v in self.per_radius.items()}}


def cutoff_family(model, radii=(1, 4, 16, 64), times=None, samples=400):
    """Sample r |grad phi|^2 / phi, tau_bar |phi_t| and r |box phi| over the transition region.

    Points are placed so that F / r covers [1, 2] on the flat factor; on the
    sphere F is constant and the transition is crossed only for special
    (r, t), which are sampled as they occur.
    """
    if times is None:
        times = tuple(np.linspace(-4.0, 0.9, 12))
    fam = CutoffFamily(tuple(radii), tuple(float(t) for t in times))
    fam.eta_constant = eta_sqrt_constant()
    lo, hi = 1.0, 0.0
    for r in radii:
        if r < 1:
            raise PreconditionError("cutoff scale r must be >= 1")
        best = [0.0, 0.0, 0.0]
        for t in fam.times:
            chart = FlowChart(model, t)
            tb = chart.tau_bar
            if model.has_flat:
                base = tb * model.k / 2.0
                rho_hi = min(sqrt(max(4.0 * (2.2 * r - base), 0.0)), model.rho_max * sqrt(min(tb, 1.0)))
                rho = np.linspace(0.0, rho_hi, samples)
            else:
                rho = np.zeros(1)
            theta = np.linspace(0.0, pi, 7) if model.has_sphere else np.zeros(1)
            th, rr = np.meshgrid(theta, rho, indexing="ij")
            q = chart.fields(th, rr)
            phi, grad, phi_t, _, box, _ = _cutoff_arrays(q, r)
            lo, hi = min(lo, float(phi.min())), max(hi, float(phi.max()))
            live = phi > 1e-14
            if np.any(live):
                best[0] = max(best[0], float(np.max(r * grad[live] ** 2 / phi[live])))
                best[1] = max(best[1], float(np.max(tb * np.abs(phi_t[live]))))
                best[2] = max(best[2], float(np.max(r * np.abs(box[live]))))
        fam.per_radius[r] = {"grad": best[0], "time": best[1], "box": best[2]}
        fam.grad_constant = max(fam.grad_constant, best[0])
        fam.time_constant = max(fam.time_constant, best[1])
        fam.box_constant = max(fam.box_constant, best[2])
    fam.phi_range = (lo, hi)
    return fam


__all__ = [
    "CutoffFamily", "CutoffValues", "FlowChart", "FlowQuantities", "F_at", "cutoff_eval",
    "cutoff_family", "diffeo_trajectory", "eta", "eta_sqrt_constant", "flat_trajectory",
    "flowline_potential_bound", "grid_flow_residuals", "growth_margins_at",
]
