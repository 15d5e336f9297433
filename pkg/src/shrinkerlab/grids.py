"""Symmetry-reduced grids, quadrature and sampled fields.

Every catalog geometry is a product of at most two factors:

* a euclidean factor R^m, reduced to the radius ``rho`` with area element
  ``|S^{m-1}| rho^{m-1}``;
* a round sphere factor S^k of radius ``a``, reduced to the polar angle
  ``theta`` with area element ``|S^{k-1}| (a sin theta)^{k-1} a``.

A third kind, ``line``, is a signed coordinate with unit weight; it splits
one axis off a euclidean factor for functions that are not radial.

A :class:`RadialGrid` carries nodes and weights with the area element
folded in, so ``weights @ h(nodes)`` approximates the integral of a
function of the reduced coordinate over the whole factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gamma, pi

import numpy as np

from .errors import PreconditionError, QuadratureError

EUCLIDEAN = "euclidean"
POLAR = "polar"
LINE = "line"


def sphere_area(d):
    """Area of the unit sphere S^d in R^{d+1} (``sphere_area(0) == 2``)."""
    return 2.0 * pi ** ((d + 1) / 2.0) / gamma((d + 1) / 2.0)


def ball_volume(m):
    """Volume omega_m of the unit ball in R^m."""
    return pi ** (m / 2.0) / gamma(m / 2.0 + 1.0)


@lru_cache(maxsize=None)
def gauss_legendre(q):
    x, w = np.polynomial.legendre.leggauss(q)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def _diff_matrix(q):
    """Differentiation matrix of the Lagrange interpolant on q GL nodes in [-1, 1]."""
    x, _ = gauss_legendre(q)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    c = np.prod(diff, axis=1)
    d = (c[:, None] / c[None, :]) / diff
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    d.setflags(write=False)
    return d


def area_element(kind, dim, x, radius=1.0):
    """Reduced area element of one factor evaluated at coordinate ``x``."""
    x = np.asarray(x, dtype=float)
    if kind == EUCLIDEAN:
        if dim == 1:
            return np.full_like(x, 2.0)
        return sphere_area(dim - 1) * x ** (dim - 1)
    if kind == POLAR:
        return sphere_area(dim - 1) * (radius * np.sin(x)) ** (dim - 1) * radius
    if kind == LINE:
        return np.ones_like(x)
    raise PreconditionError(f"unknown factor kind {kind!r}")


def composite_gauss(breaks, order):
    """Nodes and plain (unweighted) weights of composite Gauss-Legendre panels."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = gauss_legendre(order)
    left, right = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (right - left)
    nodes = (left + right) / 2.0 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Nodes and area-weighted quadrature weights on one reduced factor.

    ``scheme`` is ``"gauss"`` (composite Gauss-Legendre panels, used for
    quadrature and spectral differentiation inside each panel) or
    ``"uniform"`` (vertex-centred finite volumes, used by the heat solver;
    weights are exact control-volume measures).
    """

    kind: str
    dim: int
    radius: float
    scheme: str
    nodes: np.ndarray
    weights: np.ndarray
    breaks: np.ndarray
    order: int

    def __post_init__(self):
        if np.any(np.diff(self.nodes) <= 0):
            raise PreconditionError("grid nodes must be strictly increasing")
        if np.any(self.weights <= 0):
            raise PreconditionError("grid weights must be positive")

    @classmethod
    def gauss(cls, kind, dim, breaks, order=8, radius=1.0):
        breaks = np.asarray(breaks, dtype=float)
        x, w = composite_gauss(breaks, order)
        weights = w * area_element(kind, dim, x, radius)
        return cls(kind, dim, float(radius), "gauss", x, weights, breaks, order)

    @classmethod
    def uniform(cls, kind, dim, hi, npts, radius=1.0):
        nodes = np.linspace(0.0, hi, npts)
        h = nodes[1] - nodes[0]
        edges = np.concatenate([[0.0], nodes[:-1] + h / 2.0, [hi]])
        vols = _segment_measure(kind, dim, edges[:-1], edges[1:], radius)
        return cls(kind, dim, float(radius), "uniform", nodes, vols, edges, 2)

    @property
    def extent(self):
        return float(self.breaks[-1])

    @property
    def spacing(self):
        """Largest panel width (gauss) or node spacing (uniform)."""
        return float(np.max(np.diff(self.breaks))) if self.scheme == "gauss" else float(
            self.nodes[1] - self.nodes[0]
        )

    @property
    def metric_factor(self):
        """|d/dx|^2 in the factor metric: 1 for rho, 1/a^2 for theta."""
        return 1.0 / self.radius**2 if self.kind == POLAR else 1.0

    def integrate(self, values):
        return float(np.dot(self.weights, values))

    def derivative(self, values, axis=0):
        """Derivative in the reduced coordinate along ``axis``."""
        values = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
        if self.scheme == "uniform":
            out = np.gradient(values, self.nodes, axis=0, edge_order=2)
        else:
            q = self.order
            panels = len(self.breaks) - 1
            shaped = values.reshape((panels, q) + values.shape[1:])
            scale = 2.0 / np.diff(self.breaks)
            d = _diff_matrix(q)
            out = np.einsum("ij,pj...->pi...", d, shaped)
            out = out * scale.reshape((panels, 1) + (1,) * (values.ndim - 1))
            out = out.reshape(values.shape)
        return np.moveaxis(out, 0, axis)

    def contains(self, x):
        return float(self.breaks[0]) <= x <= self.extent + 1e-12


def _segment_measure(kind, dim, lo, hi, radius):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if kind == EUCLIDEAN:
        if dim == 1:
            return 2.0 * (hi - lo)
        return sphere_area(dim - 1) * (hi**dim - lo**dim) / dim
    if kind == LINE:
        return hi - lo
    x, w = gauss_legendre(12)
    mid = 0.5 * (hi + lo)
    half = 0.5 * (hi - lo)
    pts = mid[:, None] + half[:, None] * x[None, :]
    return (half[:, None] * w[None, :] * area_element(kind, dim, pts, radius)).sum(axis=1)


def integrate_factor(h, kind, dim, lo, hi, radius=1.0, panels=8, order=10, rtol=1e-10,
                     max_doublings=10):
    """Integrate ``h(x) * area_element`` over ``[lo, hi]`` with panel doubling.

    Returns ``(value, error_estimate)`` where the estimate is the absolute
    difference between the last two refinements.

    Raises
    ------
    QuadratureError
        If successive refinements never agree to ``rtol``.
    """
    previous = None
    err = np.inf
    for _ in range(max_doublings + 1):
        grid = RadialGrid.gauss(kind, dim, np.linspace(lo, hi, panels + 1), order, radius)
        value = grid.integrate(h(grid.nodes))
        if previous is not None:
            err = abs(value - previous)
            if err <= rtol * max(abs(value), 1e-300):
                return value, err
        previous = value
        panels *= 2
    scale = max(abs(previous), 1e-300)
    raise QuadratureError("panel refinement did not converge", err / scale)


@dataclass(eq=False)
class RadialFunction:
    """A scalar field sampled on the tensor product of factor grids.

    ``values`` has one axis per grid, in the order of ``grids``.
    """

    grids: tuple
    values: np.ndarray

    def __post_init__(self):
        self.grids = tuple(self.grids)
        self.values = np.asarray(self.values, dtype=float)
        shape = tuple(len(g.nodes) for g in self.grids)
        if self.values.shape != shape:
            raise PreconditionError(f"values shape {self.values.shape} != grid shape {shape}")

    @classmethod
    def from_callable(cls, grids, func):
        """Sample ``func(*coordinates)`` on the product grid (coordinates broadcast)."""
        grids = tuple(grids)
        mesh = np.meshgrid(*[g.nodes for g in grids], indexing="ij")
        values = np.broadcast_to(func(*mesh), tuple(len(g.nodes) for g in grids))
        return cls(grids, np.array(values, dtype=float))

    @classmethod
    def from_factors(cls, grids, factors):
        values = factors[0]
        for f in factors[1:]:
            values = np.multiply.outer(values, f)
        return cls(grids, values)

    def weights(self):
        w = self.grids[0].weights
        for g in self.grids[1:]:
            w = np.multiply.outer(w, g.weights)
        return w

    def integrate(self, values=None):
        values = self.values if values is None else values
        return float(np.sum(self.weights() * values))

    def grad_sq(self):
        """|grad u|^2 in the product metric."""
        total = np.zeros_like(self.values)
        for axis, g in enumerate(self.grids):
            total += g.metric_factor * g.derivative(self.values, axis) ** 2
        return total

    def with_values(self, values):
        return RadialFunction(self.grids, values)
