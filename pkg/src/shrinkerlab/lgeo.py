"""Reduced length, reduced distance and the differential Harnack quantity.

With sigma = sqrt(t - z) the reduced length of a path from (x, t) back to
(y, s) becomes

    L = int_0^S [ |d gamma / d sigma|^2_{g(t - sigma^2)} / 2
                  + 2 sigma^2 R(t - sigma^2) ] d sigma,        S = sqrt(t - s).

On the catalog models R is constant in space, so the curvature term does not
depend on the path, and the kinetic term splits into one integral per
factor: the flat factor is static and the sphere factor has metric
(tau_bar + sigma^2) a^2 d theta^2, tau_bar = 1 - t. Minimizing paths stay on
the great circle and the segment joining the endpoints, so a path is
described by two scalar profiles (the angle travelled and the flat distance
travelled) as functions of sigma.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import atan, log, pi, sqrt

import numpy as np
from scipy import optimize

from .checks import CheckReport
from .errors import ConvergenceError, PreconditionError
from .grids import EUCLIDEAN, POLAR, integrate_factor
from .heat import flat_kernel, heat_kernel, sphere_kernel

REFINE_TOL = 1e-6


def _check_times(t, s):
    if not s < t < 1:
        raise PreconditionError("need s < t < 1")


def curvature_term(model, t, s):
    """Path-independent part int_0^S 2 sigma^2 R dsigma of the reduced length."""
    R0 = model.scalar_curvature
    if R0 == 0:
        return 0.0
    S = sqrt(t - s)
    r = sqrt(1.0 - t)
    return 2.0 * R0 * (S - r * atan(S / r))


def reduced_distance_exact(model, x, t, y, s):
    """Closed-form reduced distance from the decoupled Euler-Lagrange equations."""
    _check_times(t, s)
    gamma, dy = model.components(x, y)
    S = sqrt(t - s)
    total = 0.5 * dy**2 / S
    if model.has_sphere:
        r = sqrt(1.0 - t)
        I = atan(S / r) / r
        total += 0.5 * model.radius**2 * gamma**2 / I
    total += curvature_term(model, t, s)
    return total / (2.0 * S)


# ---------------------------------------------------------------------------
# discretized paths
# ---------------------------------------------------------------------------

def _segment_weights(sigma, tau_bar, sphere_radius):
    """Coefficients c_k with kinetic energy sum_k c_k (Delta q_k)^2 / 2 for linear segments."""
    ds = np.diff(sigma)
    flat = 1.0 / ds
    if sphere_radius is None:
        return flat, None
    cubes = np.diff(sigma**3) / 3.0
    sph = sphere_radius**2 * (tau_bar * ds + cubes) / ds**2
    return flat, sph


@dataclass
class LPath:
    """Piecewise-linear path in sigma = sqrt(t - z) from (x, t) (sigma = 0) to (y, s).

    ``angle`` is the angle travelled along the great circle from x toward
    y, ``travel`` the flat distance travelled along the segment from x to
    y. ``coordinates`` rebuilds the path in the ambient coordinates.
    """

    x: object
    t: float
    y: object
    s: float
    sigma: np.ndarray
    angle: np.ndarray
    travel: np.ndarray
    L: float

    @property
    def l(self):
        return self.L / (2.0 * sqrt(self.t - self.s))

    @property
    def z(self):
        return self.t - self.sigma**2

    def coordinates(self, model):
        """(sigma, theta from the pole, flat coordinates) at the nodes."""
        theta = None
        if model.has_sphere:
            px, py = np.asarray(self.x.sphere), np.asarray(self.y.sphere)
            gamma = np.arccos(np.clip(px.dot(py), -1.0, 1.0))
            if gamma > 1e-14:
                v = py - np.cos(gamma) * px
                v /= np.linalg.norm(v)
            else:
                v = np.zeros_like(px)
            pts = np.cos(self.angle)[:, None] * px + np.sin(self.angle)[:, None] * v
            theta = np.arccos(np.clip(pts[:, 0], -1.0, 1.0))
        flat = None
        if model.has_flat:
            fx, fy = np.asarray(self.x.flat), np.asarray(self.y.flat)
            d = np.linalg.norm(fy - fx)
            e = (fy - fx) / d if d > 0 else np.zeros_like(fx)
            flat = fx + self.travel[:, None] * e
        return self.sigma, theta, flat

    def write_csv(self, model, path):
        sigma, theta, flat = self.coordinates(model)
        header = ["sigma", "z"]
        cols = [sigma, self.z]
        if theta is not None:
            header.append("theta")
            cols.append(theta)
        if flat is not None:
            header += [f"y{i + 1}" for i in range(flat.shape[1])]
            cols += list(flat.T)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(zip(*[np.asarray(c).tolist() for c in cols]))


def path_length(model, sigma, angle, travel, t, s):
    """Reduced length of a piecewise-linear path (exact on every segment)."""
    radius = model.radius if model.has_sphere else None
    cflat, csph = _segment_weights(np.asarray(sigma), 1.0 - t, radius)
    value = curvature_term(model, t, s)
    if model.has_flat:
        value += 0.5 * float(np.sum(cflat * np.diff(travel) ** 2))
    if model.has_sphere:
        value += 0.5 * float(np.sum(csph * np.diff(angle) ** 2))
    return value


class _Energy:
    """Kinetic energy of the interior nodes of both profiles, with its gradient."""

    def __init__(self, coefs, ends):
        self.coefs = coefs      # per profile: segment coefficients
        self.ends = ends        # per profile: (start, end)
        self.sizes = [c.size - 1 for c in coefs]

    def split(self, z):
        out, i = [], 0
        for c, (a, b), m in zip(self.coefs, self.ends, self.sizes):
            out.append(np.concatenate([[a], z[i:i + m], [b]]))
            i += m
        return out

    def __call__(self, z):
        value = 0.0
        grads = []
        for c, q in zip(self.coefs, self.split(z)):
            dq = np.diff(q)
            value += 0.5 * float(np.sum(c * dq**2))
            flux = c * dq
            grads.append(flux[:-1] - flux[1:])
        return value, np.concatenate(grads) if grads else np.zeros(0)


def _optimize_level(model, sigma, starts, t, gamma, dy, gtol):
    tb = 1.0 - t
    radius = model.radius if model.has_sphere else None
    cflat, csph = _segment_weights(sigma, tb, radius)
    coefs, ends = [], []
    if model.has_sphere:
        coefs.append(csph)
        ends.append((0.0, gamma))
    if model.has_flat:
        coefs.append(cflat)
        ends.append((0.0, dy))
    energy = _Energy(coefs, ends)
    best = None
    for z0 in starts:
        if z0.size == 0:
            val, g = energy(z0)
            res = optimize.OptimizeResult(x=z0, fun=val, jac=g, success=True)
        else:
            res = optimize.minimize(energy, z0, jac=True, method="CG",
                                    options={"gtol": gtol, "maxiter": 20 * z0.size + 200})
        start_val = energy(z0)[0]
        if res.fun > start_val:     # never accept an increase over the start
            res.x, res.fun = z0, start_val
        if best is None or res.fun < best.fun:
            best = res
    return best, energy


def reduced_distance(model, x, t, y, s, start_intervals=8, max_intervals=4096, tol=REFINE_TOL):
    """Reduced distance by conjugate-gradient optimization over piecewise-linear paths.

    Each refinement halves every sigma-interval and starts from the previous
    optimum, which is feasible on the finer grid, so the sequence of
    returned values never increases. Stops when two successive levels agree
    to ``tol``.

    Returns
    -------
    l : float
        Upper bound for the infimum over the reduced path class.
    path : LPath

    Raises
    ------
    ConvergenceError
        If the refinement stagnates (carries the best value and the final
        gradient norm).
    """
    _check_times(t, s)
    model.check_point(x)
    model.check_point(y)
    gamma, dy = model.components(x, y)
    S = sqrt(t - s)
    norm = 2.0 * S
    curv = curvature_term(model, t, s)
    N = start_intervals
    sigma = np.linspace(0.0, S, N + 1)
    frac = sigma[1:-1] / S
    profiles_lin, profiles_z = [], []
    if model.has_sphere:
        profiles_lin.append(gamma * frac)
        profiles_z.append(gamma * frac**2)
    if model.has_flat:
        profiles_lin.append(dy * frac)
        profiles_z.append(dy * frac**2)
    starts = [np.concatenate(profiles_lin), np.concatenate(profiles_z)]
    previous = None
    history = []
    gnorm = np.inf
    while True:
        res, energy = _optimize_level(model, sigma, starts, t, gamma, dy, gtol=1e-11)
        gnorm = float(np.linalg.norm(res.jac)) if res.jac is not None else 0.0
        value = (res.fun + curv) / norm
        if previous is not None:
            value = min(value, previous)
        history.append(value)
        if previous is not None and abs(previous - value) <= tol * max(1.0, abs(value)):
            break
        if 2 * N > max_intervals:
            raise ConvergenceError(
                f"reduced distance refinement stagnated at {N} intervals "
                f"(gradient norm {gnorm:.2e})", residual=gnorm, best=value)
        previous = value
        # carry the optimum to the refined grid by linear interpolation
        fine = np.linspace(0.0, S, 2 * N + 1)
        carried = [np.interp(fine, sigma, q)[1:-1] for q in energy.split(res.x)]
        sigma, N = fine, 2 * N
        starts = [np.concatenate(carried) if carried else np.zeros(0)]
    profiles = energy.split(res.x)
    angle = profiles[0] if model.has_sphere else np.zeros_like(sigma)
    travel = profiles[-1] if model.has_flat else np.zeros_like(sigma)
    path = LPath(x, t, y, s, sigma, angle, travel, value * norm)
    return value, path


def dp_oracle(model, gamma, t, s, n_sigma=32, band_factor=4):
    """Reduced distance between points separated on the sphere factor only, by
    dynamic programming over a (sigma, angle) lattice, extrapolated in the lattice size.

    The angle lattice has n_sigma^2 cells so that quantizing the per-step
    jumps costs as much as the sigma discretization; transitions are limited
    to nondecreasing jumps of at most ``band_factor`` times the mean jump.
    Independent of the path optimizer and of the closed form.

    Returns
    -------
    l, error : float
    """
    _check_times(t, s)
    if not model.has_sphere:
        raise PreconditionError("the lattice oracle needs a sphere factor")
    S = sqrt(t - s)
    tb = 1.0 - t
    a = model.radius

    def solve(ns):
        nt = ns * ns
        sig = np.linspace(0.0, S, ns + 1)
        h = gamma / nt
        band = band_factor * nt // ns
        cost = np.full(nt + 1, np.inf)
        cost[0] = 0.0
        for k in range(ns):
            d = sig[k + 1] - sig[k]
            c = a**2 * (tb * d + (sig[k + 1] ** 3 - sig[k] ** 3) / 3.0) / d**2
            new = cost.copy()
            for o in range(1, band + 1):
                np.minimum(new[o:], cost[:-o] + 0.5 * c * (o * h) ** 2, out=new[o:])
            cost = new
        return cost[-1]

    coarse = solve(n_sigma)
    fine = solve(2 * n_sigma)
    kinetic = (4.0 * fine - coarse) / 3.0
    curv = curvature_term(model, t, s)
    return (kinetic + curv) / (2.0 * S), abs(fine - coarse) / (6.0 * S)


# ---------------------------------------------------------------------------
# kernel lower bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LowerDefect:
    H: float
    bound: float
    margin: float
    l: float
    error: float

    @property
    def relative_margin(self):
        return self.margin / self.H


def kernel_lower_defect(model, x, t, y, s, l=None):
    """H(x,t,y,s) against exp(-l)/(4 pi (t-s))^{n/2}.

    The optimized l is an upper bound for the true reduced distance, so the
    computed bound is a valid lower certificate.
    """
    if l is None:
        l, _ = reduced_distance(model, x, t, y, s)
    k = heat_kernel(model, x, t, y, s)
    bound = np.exp(-l) / (4 * pi * (t - s)) ** (model.n / 2.0)
    error = k.error + bound * REFINE_TOL
    return LowerDefect(k.value, float(bound), float(k.value - bound), float(l), float(error))


def lower_bound_suite(model, samples, exact=False):
    """Strict check of the reduced-distance kernel lower bound over samples."""
    worst = np.inf
    H = bound = 0.0
    for x, t, y, s in samples:
        l = reduced_distance_exact(model, x, t, y, s) if exact else None
        d = kernel_lower_defect(model, x, t, y, s, l)
        rel = (d.margin + d.error) / d.H
        if rel < worst:
            worst, H, bound = rel, d.H, d.bound
    return CheckReport("lgeo.kernel_lower", "reduced-distance kernel lower bound", bound, H,
                       worst, True, 1e-6, {"worst_relative_margin": worst},
                       {"model": model.name, "samples": len(samples),
                        "l": "closed form" if exact else "optimized"})


# ---------------------------------------------------------------------------
# differential Harnack quantity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HarnackSample:
    """v and b at (x, t) for the kernel based at (q, T); tau = T - t."""

    gamma: float
    r: float
    t: float
    T: float
    b: float
    v: float
    consistency: float

    @property
    def tau(self):
        return self.T - self.t


def _factor_terms(model, gamma, r, T, t):
    """Per-factor (log w, |grad log w|^2, Delta w / w) at the earlier point."""
    tau = T - t
    parts = []
    if model.has_sphere:
        sk = sphere_kernel(model.k, model.radius, np.array(gamma), T, t, derivatives=True,
                           at="y")
        a2 = (1.0 - t) * model.radius**2
        parts.append((float(np.log(sk.value)), float((sk.d_gamma / sk.value) ** 2 / a2),
                      float(sk.laplacian / sk.value)))
    if model.has_flat:
        m = model.m
        parts.append((float(np.log(flat_kernel(m, r, tau))), r**2 / (4 * tau**2),
                      r**2 / (4 * tau**2) - m / (2 * tau)))
    return parts


def _fd_terms(model, gamma, r, T, t, h=1e-3):
    """The same terms by fourth-order central differences of log w."""
    tau = T - t
    parts = []
    stencil = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    d1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    d2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
    if model.has_sphere:
        g = gamma + h * stencil
        lw = np.log(sphere_kernel(model.k, model.radius, g, T, t).value)
        a2 = (1.0 - t) * model.radius**2
        first = d1.dot(lw) / h
        second = d2.dot(lw) / h**2
        lap_log = (second + (model.k - 1) / np.tan(gamma) * first) / a2
        grad2 = first**2 / a2
        parts.append((lw[2], grad2, lap_log + grad2))
    if model.has_flat:
        m = model.m
        rr = r + h * stencil
        lw = np.log(flat_kernel(m, np.abs(rr), tau))
        first = d1.dot(lw) / h
        second = d2.dot(lw) / h**2
        lap_log = second + ((m - 1) / r * first if m > 1 else 0.0)
        parts.append((lw[2], first**2, lap_log + first**2))
    return parts


def _v_from_terms(model, parts, T, t):
    tau = T - t
    logw = sum(p[0] for p in parts)
    b = -logw - 0.5 * model.n * log(4 * pi * tau)
    R = model.scalar_curvature / (1.0 - t)
    v = sum(tau * (-2.0 * lap + g2) for _, g2, lap in parts) + tau * R + b - model.n
    return b, v


def harnack_value(model, gamma, r, T, t, check_fd=True):
    """Harnack quantity at sphere angle ``gamma`` and flat radius ``r`` from the base point."""
    if not t < T < 1:
        raise PreconditionError("need t < T < 1")
    parts = _factor_terms(model, gamma, r, T, t)
    b, v = _v_from_terms(model, parts, T, t)
    consistency = 0.0
    if check_fd:
        fd = _fd_terms(model, gamma, r, T, t)
        for (_, g_a, l_a), (_, g_f, l_f) in zip(parts, fd):
            consistency = max(consistency, abs(g_a - g_f) / (1.0 + abs(g_a)),
                              abs(l_a - l_f) / (1.0 + abs(l_a)))
    return HarnackSample(float(gamma), float(r), t, T, float(b), float(v), float(consistency))


def harnack_samples(model, count, T=0.5, tau_range=(0.05, 0.5), seed=0):
    """Seeded (gamma, r, t) inside the resolvable region of the spectral series."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        tau = float(np.exp(rng.uniform(np.log(tau_range[0]), np.log(tau_range[1]))))
        t = T - tau
        gamma = 0.0
        if model.has_sphere:
            a_t = sqrt(1.0 - t) * model.radius
            gamma = float(rng.uniform(0.05, min(pi - 0.05, sqrt(4 * tau * 10.0) / a_t)))
        r = float(rng.uniform(0.05, 3.0 * sqrt(tau))) if model.has_flat else 0.0
        out.append((gamma, r, t))
    return out


def b_mean(model, T, tau):
    """int b w dV_t for w = H(q, T, ., t), t = T - tau, by factor quadrature."""
    t = T - tau
    total = 0.0
    if model.has_flat:
        m = model.m

        def flat_part(r):
            w = flat_kernel(m, r, tau)
            return (r**2 / (4 * tau)) * w
        ext = min(model.rho_max, 14.0 * sqrt(tau))
        val, _ = integrate_factor(flat_part, EUCLIDEAN, m, 0.0, ext, panels=4, order=16,
                                  rtol=1e-11)
        total += val
    if model.has_sphere:
        k, a = model.k, model.radius
        a_t = sqrt(1.0 - t) * a
        top = min(pi, sqrt(4 * tau * 25.0) / a_t)

        def sph_part(g):
            w = sphere_kernel(k, a, g, T, t).value
            safe = np.maximum(w, 1e-300)
            return (-np.log(safe) - 0.5 * k * log(4 * pi * tau)) * w
        val, _ = integrate_factor(sph_part, POLAR, k, 0.0, top, a_t, panels=8, order=16,
                                  rtol=1e-10)
        total += val
    return total


def b_mean_limit(model, T=0.5, taus=(1e-2, 1e-3)):
    """Linear extrapolation in tau of the b-mean to tau = 0."""
    big, small = taus
    b1, b2 = b_mean(model, T, big), b_mean(model, T, small)
    return (big * b2 - small * b1) / (big - small), (b1, b2)


def harnack_check(model, T=0.5, samples=None, count=50, tolerance=None, seed=0,
                  min_tau=1e-3):
    """Harnack quantity v <= tolerance at every sample, derivative consistency, and the b-mean limit."""
    if not T < 1:
        raise PreconditionError("need T < 1")
    samples = samples if samples is not None else harnack_samples(model, count, T, seed=seed)
    if tolerance is None:
        tolerance = 1e-8 if not model.has_sphere else 1e-6
    vmax, worst_fd, skipped = -np.inf, 0.0, 0
    rows = []
    for gamma, r, t in samples:
        if T - t < min_tau:
            skipped += 1
            continue
        hs = harnack_value(model, gamma, r, T, t)
        rows.append(hs)
        vmax = max(vmax, hs.v)
        worst_fd = max(worst_fd, hs.consistency)
    inputs = {"model": model.name, "T": T, "samples": len(samples), "seed": seed}
    notes = [f"{skipped} samples with tau < {min_tau:g} skipped"] if skipped else []
    limit, (b1, b2) = b_mean_limit(model, T)
    return [
        CheckReport("harnack.v", "differential Harnack inequality", vmax, 0.0, -vmax, True,
                    tolerance, {"max_v": vmax}, inputs, notes=notes),
        CheckReport("harnack.fd_consistency", "spectral vs finite-difference derivatives of b",
                    worst_fd, 1e-5, 1e-5 - worst_fd, True, 0.0, {}, inputs),
        CheckReport("harnack.b_mean", "b-mean limit n/2", limit, model.n / 2.0,
                    1e-3 - abs(limit - model.n / 2.0), True, 0.0,
                    {"b_mean_tau_1e-2": b1, "b_mean_tau_1e-3": b2}, inputs),
    ]


__all__ = [
    "HarnackSample", "LPath", "LowerDefect", "b_mean", "b_mean_limit", "curvature_term",
    "dp_oracle", "harnack_check", "harnack_samples", "harnack_value", "kernel_lower_defect",
    "lower_bound_suite", "path_length", "reduced_distance", "reduced_distance_exact",
]
