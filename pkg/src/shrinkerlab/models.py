"""Catalog of explicit Ricci shrinkers with their exact geometry.

Three families are supported, each a product of a round sphere of radius
``sqrt(2(k-1))`` and a flat factor carrying the quadratic potential:

=========  ===================  =========================
kind       geometry             potential f
=========  ===================  =========================
gaussian   R^n                  |x|^2 / 4
sphere     S^n(sqrt(2(n-1)))    n / 2
cylinder   S^k x R^(n-k)        |y|^2 / 4 + k / 2
=========  ===================  =========================

Points are stored in ambient coordinates (a unit vector for the sphere
factor, a vector for the flat factor); the reduced chart uses the polar
angle ``theta`` from the base pole and the flat radius ``rho``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from itertools import combinations
from math import log, pi, sqrt

import numpy as np
from scipy import special

from .errors import GridExtentError, PreconditionError, QuadratureError
from .grids import (EUCLIDEAN, POLAR, RadialGrid, ball_volume, integrate_factor,
                    sphere_area)

KINDS = ("gaussian", "sphere", "cylinder")
QUADRATURE_RTOL = 1e-8
AXIS_EPS = 1e-150


@dataclass(frozen=True)
class Point:
    """A point of a catalog model.

    ``sphere`` is a unit vector in R^{k+1} (``None`` without sphere factor);
    ``flat`` is a vector in R^{n-k} (``None`` without flat factor).
    """

    sphere: tuple = None
    flat: tuple = None

    @property
    def theta(self):
        """Polar angle from the base pole e_0."""
        if self.sphere is None:
            return 0.0
        return float(np.arccos(np.clip(self.sphere[0], -1.0, 1.0)))

    @property
    def rho(self):
        if self.flat is None:
            return 0.0
        return float(np.linalg.norm(self.flat))

    def to_dict(self):
        return {"sphere": None if self.sphere is None else list(self.sphere),
                "flat": None if self.flat is None else list(self.flat)}


def sphere_angle(u, v):
    """Great-circle angle between two unit vectors, accurate near 0 and pi."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(2.0 * np.arctan2(np.linalg.norm(u - v), np.linalg.norm(u + v)))


@dataclass(frozen=True)
class ShrinkerModel:
    """One catalog geometry.

    ``k`` is the sphere-factor dimension (0 for the gaussian, ``n`` for the
    sphere). ``scale`` multiplies the metric; ``scale != 1`` models are only
    used for scaling identities of the entropy and are no longer normalized
    shrinkers.
    """

    kind: str
    n: int
    k: int
    sphere_radius: float
    mu: float = float("nan")
    rho_max: float = 32.0
    panels: int = 16
    order: int = 10
    scale: float = 1.0

    # -- factor bookkeeping ------------------------------------------------
    @property
    def m(self):
        return self.n - self.k

    @property
    def has_sphere(self):
        return self.k > 0

    @property
    def has_flat(self):
        return self.m > 0

    @property
    def radius(self):
        """Metric radius of the sphere factor (includes ``scale``)."""
        return self.sphere_radius * sqrt(self.scale) if self.has_sphere else float("inf")

    @property
    def name(self):
        if self.kind == "cylinder":
            return f"cylinder(n={self.n},k={self.k})"
        return f"{self.kind}(n={self.n})"

    @property
    def scalar_curvature(self):
        """R, constant in space on every catalog model."""
        if not self.has_sphere:
            return 0.0
        return self.k * (self.k - 1) / self.radius**2

    @property
    def sectional_curvature(self):
        return 1.0 / self.radius**2 if self.has_sphere else 0.0

    def rescaled(self, c):
        """The same model with metric ``c * g``."""
        return replace(self, scale=self.scale * c)

    # -- potential -----------------------------------------------------------
    def potential(self, theta=0.0, rho=0.0):
        """f in the reduced chart (independent of theta on the catalog)."""
        theta, rho = np.broadcast_arrays(np.asarray(theta, float), np.asarray(rho, float))
        return rho**2 / 4.0 * self.has_flat + self.k / 2.0 + 0.0 * theta

    def potential_parts(self, theta=0.0, rho=0.0):
        """Return per-factor potential data ``(f, f_rho, f_rhorho, f_theta, f_thetatheta)``."""
        theta, rho = np.broadcast_arrays(np.asarray(theta, float), np.asarray(rho, float))
        zero = np.zeros_like(rho)
        if self.has_flat:
            f_r, f_rr = rho / 2.0, zero + 0.5
        else:
            f_r, f_rr = zero, zero
        return self.potential(theta, rho), f_r, f_rr, zero, zero

    # -- points and distances -------------------------------------------------
    def point(self, theta=0.0, y=None, azimuth=0.0):
        """Build a point from a polar angle (plus azimuth) and a flat vector."""
        sphere = flat = None
        if self.has_sphere:
            vec = np.zeros(self.k + 1)
            vec[0] = np.cos(theta)
            vec[1] = np.sin(theta) * np.cos(azimuth)
            if self.k >= 2:
                vec[2] = np.sin(theta) * np.sin(azimuth)
            sphere = tuple(float(v) for v in vec)
        if self.has_flat:
            if y is None:
                y = np.zeros(self.m)
            y = np.atleast_1d(np.asarray(y, dtype=float))
            if y.size == 1 and self.m > 1:
                y = np.concatenate([y, np.zeros(self.m - 1)])
            if y.size != self.m:
                raise PreconditionError(f"flat coordinate must have {self.m} components")
            flat = tuple(float(v) for v in y)
        return Point(sphere, flat)

    @property
    def base_point(self):
        """Minimum of f: theta = 0, y = 0."""
        return self.point()

    def components(self, x, y):
        """Sphere angle and flat separation between two points."""
        gamma = sphere_angle(x.sphere, y.sphere) if self.has_sphere else 0.0
        dy = float(np.linalg.norm(np.subtract(x.flat, y.flat))) if self.has_flat else 0.0
        return gamma, dy

    def distance(self, x, y, t=0.0):
        """d_t(x, y) = sqrt((1-t) a^2 gamma^2 + |dy|^2) for the induced flow."""
        gamma, dy = self.components(x, y)
        sph = (1.0 - t) * self.radius**2 * gamma**2 if self.has_sphere else 0.0
        return sqrt(sph + dy**2)

    def check_point(self, x):
        if self.has_flat and x.rho > self.rho_max:
            raise GridExtentError(f"point with |y| = {x.rho:.6g} outside grid", x.rho)

    # -- grids ----------------------------------------------------------------
    def grids(self, panels=None, order=None):
        """Composite Gauss grids on the reduced factors (sphere first)."""
        panels = panels or self.panels
        order = order or self.order
        out = []
        if self.has_sphere:
            out.append(RadialGrid.gauss(POLAR, self.k, np.linspace(0.0, pi, panels + 1),
                                        order, self.radius))
        if self.has_flat:
            out.append(RadialGrid.gauss(EUCLIDEAN, self.m,
                                        np.linspace(0.0, self.rho_max, panels + 1), order))
        return tuple(out)

    def node_coordinates(self, panels=None, order=None):
        """Broadcast (theta, rho) arrays over the product grid."""
        grids = self.grids(panels, order)
        axes = []
        for g in grids:
            axes.append(g.nodes)
        mesh = np.meshgrid(*axes, indexing="ij")
        theta = mesh[0] if self.has_sphere else np.zeros_like(mesh[0])
        rho = mesh[-1] if self.has_flat else np.zeros_like(mesh[0])
        return theta, rho

    def sphere_volume(self):
        return sphere_area(self.k) * self.radius**self.k if self.has_sphere else 1.0

    # -- serialization -----------------------------------------------------------
    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def make_model(kind, n, k=None, rho_max=None, panels=16, order=10):
    """Build a catalog model and compute its entropy constant.

    Raises
    ------
    PreconditionError
        For an unknown kind or invalid dimensions.
    """
    if kind not in KINDS:
        raise PreconditionError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise PreconditionError(f"dimension n must be an integer >= 2, got {n!r}")
    if kind == "cylinder":
        if k is None or not 2 <= k <= n - 1:
            raise PreconditionError(f"cylinder needs 2 <= k <= n-1, got k={k!r}, n={n}")
    elif k not in (None, 0, n):
        raise PreconditionError(f"k is only meaningful for cylinders (got k={k!r})")
    k = {"gaussian": 0, "sphere": n}.get(kind, k)
    radius = sqrt(2.0 * (k - 1)) if k > 0 else 0.0
    if rho_max is None:
        rho_max = max(12.0 * sqrt(n), 32.0)
    model = ShrinkerModel(kind, int(n), int(k), radius, rho_max=float(rho_max),
                          panels=int(panels), order=int(order))
    mu, _ = entropy_constant(model)
    return replace(model, mu=mu)


def model_from_spec(spec):
    """Build a model from a config mapping ``{kind, n, k, grid: {rho_max, panels}}``."""
    grid = dict(spec.get("grid") or {})
    return make_model(spec["kind"], int(spec["n"]), spec.get("k"),
                      rho_max=grid.get("rho_max"), panels=int(grid.get("panels", 16)),
                      order=int(grid.get("order", 10)))


def default_catalog():
    """The acceptance catalog."""
    return [
        make_model("gaussian", 2), make_model("gaussian", 3), make_model("gaussian", 4),
        make_model("sphere", 2), make_model("sphere", 3),
        make_model("cylinder", 3, 2), make_model("cylinder", 4, 2), make_model("cylinder", 4, 3),
    ]


# ---------------------------------------------------------------------------
# entropy constant and volumes
# ---------------------------------------------------------------------------

def entropy_constant(model, rtol=QUADRATURE_RTOL):
    """mu = log of the integral of (4 pi)^{-n/2} e^{-f} dV, by quadrature.

    Returns ``(mu, relative_error_estimate)``.

    Raises
    ------
    QuadratureError
        If the truncated flat tail or the panel refinement exceeds ``rtol``.
    """
    total, err = 1.0, 0.0
    if model.has_sphere:
        val, e = integrate_factor(lambda th: np.ones_like(th), POLAR, model.k, 0.0, pi,
                                  model.radius, panels=4, order=model.order, rtol=rtol / 10)
        total *= val * np.exp(-model.k / 2.0) / (4 * pi) ** (model.k / 2.0)
        err += e / val
    if model.has_flat:
        m = model.m
        tail = special.gammaincc(m / 2.0, model.rho_max**2 / 4.0)
        if tail > rtol:
            raise QuadratureError(
                f"flat factor truncated at rho_max={model.rho_max} loses mass", tail)
        val, e = integrate_factor(lambda r: np.exp(-r**2 / 4.0) / (4 * pi) ** (m / 2.0),
                                  EUCLIDEAN, m, 0.0, model.rho_max, panels=model.panels,
                                  order=model.order, rtol=rtol / 10)
        total *= val
        err += e / val + tail
    if err > rtol:
        raise QuadratureError("entropy-constant quadrature too coarse", err)
    return float(log(total)), float(err)


def volume_ball(model, r, center=None, rtol=1e-10):
    """Volume of the geodesic ball B(center, r) at t = 0.

    Every catalog model is homogeneous (isometries act transitively), so the
    volume does not depend on ``center``; it defaults to the base point.

    Raises
    ------
    GridExtentError
        If ``r`` exceeds the truncated flat factor.
    """
    if r <= 0:
        raise PreconditionError("ball radius must be positive")
    if center is not None:
        model.check_point(center)
    if model.has_flat and r > model.rho_max:
        raise GridExtentError(f"ball of radius {r:.6g} exceeds the flat grid", r)
    n, k, m = model.n, model.k, model.m
    if not model.has_sphere:
        value, _ = integrate_factor(lambda x: np.ones_like(x), EUCLIDEAN, n, 0.0, r,
                                    panels=2, order=n + 2, rtol=rtol)
        return value
    a = model.radius
    theta_max = r / a
    if not model.has_flat:
        value, _ = integrate_factor(lambda th: np.ones_like(th), POLAR, k, 0.0,
                                    min(pi, theta_max), a, panels=2, order=12, rtol=rtol)
        return value
    sph = sphere_area(k - 1) * a
    flat = ball_volume(m)
    if theta_max >= pi:
        def integrand(th):
            return sph * (a * np.sin(th)) ** (k - 1) * flat * (r**2 - (a * th) ** 2) ** (m / 2.0)
        value, _ = integrate_factor(integrand, EUCLIDEAN, 1, 0.0, pi, panels=4, order=12,
                                    rtol=rtol)
        return value / 2.0
    # theta = theta_max (1 - s^2) removes the square-root endpoint singularity
    def integrand_s(s):
        th = theta_max * (1.0 - s**2)
        rest = (a * theta_max) ** 2 * s**2 * (2.0 - s**2)
        return (sph * (a * np.sin(th)) ** (k - 1) * flat * rest ** (m / 2.0)
                * 2.0 * theta_max * s)
    value, _ = integrate_factor(integrand_s, EUCLIDEAN, 1, 0.0, 1.0, panels=4, order=12,
                                rtol=rtol)
    return value / 2.0


# ---------------------------------------------------------------------------
# pointwise geometry identities
# ---------------------------------------------------------------------------

def geometry_residuals(model, theta, rho):
    """Maximum residuals of the shrinker identities at the given chart points.

    Hessians are assembled in the orthonormal frame adapted to the reduced
    chart: flat radial, flat tangential and sphere directions.
    """
    theta = np.asarray(theta, dtype=float)
    rho = np.asarray(rho, dtype=float)
    f, f_r, f_rr, f_t, f_tt = model.potential_parts(theta, rho)
    a2 = model.radius**2 if model.has_sphere else 1.0
    R = np.full_like(f, model.scalar_curvature)
    # below AXIS_EPS the quotients lose all precision (f_r underflows); use their limits
    off = rho > AXIS_EPS
    f_tan = np.where(off, f_r / np.where(off, rho, 1.0), f_rr)
    sin_t = np.sin(theta)
    off = sin_t > AXIS_EPS
    cot_term = np.where(off, np.cos(theta) * f_t / np.where(off, sin_t, 1.0), f_tt)

    entries = []
    if model.has_flat:
        entries.append(f_rr - 0.5)
        if model.m > 1:
            entries.append(f_tan - 0.5)
    if model.has_sphere:
        ric = (model.k - 1) / a2
        entries.append(ric + f_tt / a2 - 0.5)
        entries.append(ric + cot_term / a2 - 0.5)
    shrinker = max(float(np.max(np.abs(e))) for e in entries)

    grad_sq = f_r**2 + (f_t**2 / a2 if model.has_sphere else 0.0)
    lap = np.zeros_like(f)
    if model.has_flat:
        lap = lap + f_rr + (model.m - 1) * f_tan
    if model.has_sphere:
        lap = lap + (f_tt + (model.k - 1) * cot_term) / a2
    return {
        "shrinker_equation": shrinker,
        "normalization": float(np.max(np.abs(R + grad_sq - f))),
        "trace": float(np.max(np.abs(R + lap - model.n / 2.0))),
        "min_scalar_curvature": float(np.min(R)),
    }


def potential_growth_margins(model, theta, rho):
    """Margins of the quadratic growth bounds for f about the base point.

    Returns ``(lower_margin, upper_margin, f_at_base)`` where both margins
    must be nonnegative: f - (d - 5n - 4)_+^2 / 4 and (d + sqrt(2n))^2 / 4 - f.
    """
    theta = np.asarray(theta, dtype=float)
    rho = np.asarray(rho, dtype=float)
    a = model.radius if model.has_sphere else 0.0
    d = np.sqrt((a * theta) ** 2 + rho**2)
    f = model.potential(theta, rho)
    lower = f - 0.25 * np.maximum(d - 5 * model.n - 4, 0.0) ** 2
    upper = 0.25 * (d + sqrt(2.0 * model.n)) ** 2 - f
    return float(np.min(lower)), float(np.min(upper)), float(model.potential(0.0, 0.0))


# ---------------------------------------------------------------------------
# curvature operator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurvatureSpectrum:
    eigenvalues: tuple
    scalar_curvature: float

    @property
    def n(self):
        c = len(self.eigenvalues)
        return int(round((1 + sqrt(1 + 8 * c)) / 2))


def riemann_tensor(model):
    """R_ijkl in an orthonormal frame, sphere directions first."""
    n, k = model.n, model.k
    rm = np.zeros((n, n, n, n))
    kappa = model.sectional_curvature
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            rm[i, j, i, j] = kappa
            rm[i, j, j, i] = -kappa
    return rm


def curvature_operator(model):
    """Matrix of the curvature operator on the orthonormal basis e_i ^ e_j, i < j."""
    rm = riemann_tensor(model)
    pairs = list(combinations(range(model.n), 2))
    op = np.array([[rm[i, j, p, q] for (p, q) in pairs] for (i, j) in pairs])
    return op, pairs


def curvature_spectrum(model, point=None):
    """Sorted eigenvalues of the curvature operator on 2-forms at ``point``."""
    if point is not None:
        model.check_point(point)
    op, _ = curvature_operator(model)
    eig = np.sort(np.linalg.eigvalsh(op))
    return CurvatureSpectrum(tuple(float(e) for e in eig), float(model.scalar_curvature))


def curvature_norms(model):
    """Pointwise |Rm|^2 (full tensor), |Rc|^2 and the operator norm of Rm on 2-forms."""
    rm = riemann_tensor(model)
    ric = np.einsum("ikjk->ij", rm)
    op, _ = curvature_operator(model)
    eig = np.linalg.eigvalsh(op)
    return float(np.sum(rm**2)), float(np.sum(ric**2)), float(np.max(np.abs(eig)))


# ---------------------------------------------------------------------------
# rigidity threshold
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RigidityResult:
    passes: bool
    epsilon: float
    threshold: float
    lambda1: float
    lambda2: float


def rigidity_epsilon(n):
    c = n * (n - 1) // 2
    if c - 2 <= 0:
        raise PreconditionError(f"rigidity threshold undefined for n={n} (c_n - 2 = {c - 2})")
    return 1.0 / ((1.0 + sqrt(2.0)) * (c - 2))


def rigidity_condition(spectrum, R=None):
    """Evaluate lambda_2 >= -eps lambda_1^2 / |R - 2 lambda_1|.

    ``spectrum`` is a :class:`CurvatureSpectrum` or a sequence of eigenvalues.
    """
    if isinstance(spectrum, CurvatureSpectrum):
        eig = sorted(spectrum.eigenvalues)
        R = spectrum.scalar_curvature if R is None else R
    else:
        eig = sorted(float(v) for v in spectrum)
    if R is None or R < 0:
        raise PreconditionError("scalar curvature R >= 0 is required")
    c = len(eig)
    n = int(round((1 + sqrt(1 + 8 * c)) / 2))
    if n * (n - 1) // 2 != c:
        raise PreconditionError(f"spectrum length {c} is not n(n-1)/2")
    l1 = eig[0]
    l2 = eig[1] if c > 1 else float("inf")
    if n == 2:
        # the threshold is undefined; only a nonnegative spectrum passes (vacuously)
        if l1 >= 0:
            return RigidityResult(True, float("nan"), 0.0, l1, l2)
        raise PreconditionError("rigidity threshold undefined for n=2 (c_n - 2 = -1)")
    eps = rigidity_epsilon(n)
    if l1 >= 0:
        return RigidityResult(True, eps, 0.0, l1, l2)
    denom = abs(R - 2.0 * l1)
    threshold = -eps * l1**2 / denom if denom > 0 else -np.inf
    passes = l2 >= threshold if denom > 0 else l2 >= 0
    return RigidityResult(bool(passes), eps, float(threshold), l1, l2)


def rigidity_quadratic_oracle(lambda1, lambda2, R, n, trials=10_000, seed=0):
    """Brute-force minimum of P = 2 l1^2 + sum C_ij^2 l_i l_j over relaxations.

    Completions keep l_2 <= l_3 <= ... with sum R/2; coefficients satisfy
    |C_ij| <= 2, C antisymmetric, zero in the row and column of l_1. P is
    linear in each C_ij^2, so half of the draws use extreme values {0, 4}.
    Returns ``inf`` if no completion is feasible.
    """
    if lambda1 > lambda2:
        raise PreconditionError("need lambda1 <= lambda2")
    c = n * (n - 1) // 2
    rng = np.random.default_rng(seed)
    rest = c - 2
    budget = R / 2.0 - lambda1 - lambda2 - rest * lambda2
    if budget < -1e-14:
        return float("inf")
    budget = max(budget, 0.0)
    trials = int(trials)

    excess = np.zeros((trials, rest))
    if rest > 0:
        # half Dirichlet completions, half "first s at lambda2, rest equal"
        alpha = rng.uniform(0.05, 3.0, size=(trials, 1))
        raw = rng.gamma(np.broadcast_to(alpha, (trials, rest)))
        raw /= raw.sum(axis=1, keepdims=True)
        s = rng.integers(0, rest, size=trials)
        structured = (np.arange(rest)[None, :] >= s[:, None]).astype(float)
        structured /= structured.sum(axis=1, keepdims=True)
        pick = rng.random(trials) < 0.5
        excess = np.where(pick[:, None], structured, raw) * budget
    lam_rest = np.sort(lambda2 + excess, axis=1)
    lam = np.concatenate([np.full((trials, 1), lambda2), lam_rest], axis=1)

    m = c - 1
    iu = np.triu_indices(m, 1)
    extreme = rng.integers(0, 2, size=(trials, len(iu[0]))) * 4.0
    uniform = rng.uniform(0.0, 4.0, size=(trials, len(iu[0])))
    pick = rng.random(trials) < 0.5
    csq = np.where(pick[:, None], extreme, uniform)
    cross = (lam[:, iu[0]] * lam[:, iu[1]] * csq).sum(axis=1)
    p = 2.0 * lambda1**2 + 2.0 * cross
    return float(p.min())


def load_model_config(path):
    """Read a JSON or TOML model list: ``{"models": [{kind, n, k, grid}, ...]}``."""
    from .harness.config import read_mapping

    data = read_mapping(path)
    specs = data.get("models", [data])
    return [model_from_spec(s) for s in specs]


__all__ = [
    "CurvatureSpectrum", "Point", "RigidityResult", "ShrinkerModel", "curvature_norms",
    "curvature_operator", "curvature_spectrum", "default_catalog", "entropy_constant",
    "geometry_residuals", "make_model", "model_from_spec", "potential_growth_margins",
    "rigidity_condition", "rigidity_epsilon", "rigidity_quadratic_oracle", "volume_ball",
]
