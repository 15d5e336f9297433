"""Continuous Lagrange finite elements on tensor-product interval meshes.

Used by the entropy minimizer. A space is the tensor product of one or two
1D meshes with nodal (Gauss-Lobatto) bases of a common degree; integrals
carry an arbitrary weight (the reduced volume element) and the gradient
energy an arbitrary diagonal metric.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import sparse

from .errors import PreconditionError
from .grids import gauss_legendre


@lru_cache(maxsize=None)
def lobatto_nodes(p):
    """Gauss-Lobatto nodes of degree ``p`` on [-1, 1]."""
    if p < 1:
        raise PreconditionError("element degree must be >= 1")
    inner = np.polynomial.legendre.Legendre.basis(p).deriv().roots() if p > 1 else np.array([])
    nodes = np.concatenate([[-1.0], np.sort(np.real(inner)), [1.0]])
    nodes.setflags(write=False)
    return nodes


def lagrange_basis(nodes, x):
    """Values and derivatives of the Lagrange basis on ``nodes`` at points ``x``."""
    nodes = np.asarray(nodes)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p1 = nodes.size
    val = np.ones((x.size, p1))
    der = np.zeros((x.size, p1))
    for j in range(p1):
        others = [i for i in range(p1) if i != j]
        denom = np.prod(nodes[j] - nodes[others])
        terms = x[:, None] - nodes[others][None, :]
        val[:, j] = np.prod(terms, axis=1) / denom
        for skip in range(len(others)):
            keep = [c for c in range(len(others)) if c != skip]
            der[:, j] += np.prod(terms[:, keep], axis=1) / denom
    return val, der


class Mesh1D:
    """Continuous degree-``p`` elements on the given breakpoints."""

    def __init__(self, breaks, degree, quad=None):
        self.breaks = np.asarray(breaks, dtype=float)
        if np.any(np.diff(self.breaks) <= 0):
            raise PreconditionError("mesh breakpoints must be strictly increasing")
        self.degree = int(degree)
        self.quad = int(quad or degree + 3)
        ref = lobatto_nodes(self.degree)
        xq, wq = gauss_legendre(self.quad)
        val, der = lagrange_basis(ref, xq)
        ne = self.breaks.size - 1
        p = self.degree
        left, h = self.breaks[:-1], np.diff(self.breaks)
        self.nelem = ne
        self.ndof = ne * p + 1
        self.dof_coords = np.concatenate(
            [left[e] + 0.5 * h[e] * (ref[:-1] + 1.0) for e in range(ne)] + [self.breaks[-1:]])
        self.points = (left[:, None] + 0.5 * h[:, None] * (xq[None, :] + 1.0)).ravel()
        self.qweights = (0.5 * h[:, None] * wq[None, :]).ravel()
        rows = np.repeat(np.arange(ne * self.quad), p + 1)
        cols = (np.arange(ne)[:, None, None] * p + np.arange(p + 1)[None, None, :])
        cols = np.broadcast_to(cols, (ne, self.quad, p + 1)).ravel()
        vals = np.broadcast_to(val, (ne, self.quad, p + 1)).ravel()
        ders = (der[None, :, :] * (2.0 / h)[:, None, None]).ravel()
        shape = (ne * self.quad, self.ndof)
        self.B = sparse.csr_matrix((vals, (rows, cols)), shape=shape)
        self.D = sparse.csr_matrix((ders, (rows, cols)), shape=shape)
        self._ref = ref

    def basis_at(self, x):
        """Sparse interpolation matrix from dofs to arbitrary points ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        e = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, self.nelem - 1)
        h = self.breaks[e + 1] - self.breaks[e]
        xi = 2.0 * (x - self.breaks[e]) / h - 1.0
        p = self.degree
        val = np.empty((x.size, p + 1))
        for i in range(x.size):
            val[i] = lagrange_basis(self._ref, xi[i])[0][0]
        rows = np.repeat(np.arange(x.size), p + 1)
        cols = (e[:, None] * p + np.arange(p + 1)[None, :]).ravel()
        return sparse.csr_matrix((val.ravel(), (rows, cols)), shape=(x.size, self.ndof))


class FESpace:
    """Tensor-product finite-element space with weighted mass and stiffness.

    Parameters
    ----------
    meshes : sequence of Mesh1D
        One or two axes.
    weight : callable
        ``weight(*coords)`` evaluated on the tensor quadrature grid.
    metric : sequence of callables
        ``metric[i](*coords)`` is the coefficient of ``(d_i u)^2`` in |grad u|^2.
    dirichlet : sequence of (bool, bool)
        Homogeneous Dirichlet condition at the low/high end of each axis.
    """

    def __init__(self, meshes, weight, metric, dirichlet=None):
        self.meshes = tuple(meshes)
        if len(self.meshes) not in (1, 2):
            raise PreconditionError("only one- and two-axis spaces are supported")
        dirichlet = dirichlet or [(False, False)] * len(self.meshes)
        coords = np.meshgrid(*[m.points for m in self.meshes], indexing="ij")
        qw = self.meshes[0].qweights
        for m in self.meshes[1:]:
            qw = np.multiply.outer(qw, m.qweights)
        self.quad_coords = tuple(c.ravel() for c in coords)
        self.wq = (qw * weight(*coords)).ravel()
        if np.any(self.wq < 0):
            raise PreconditionError("volume weight must be nonnegative")
        if len(self.meshes) == 1:
            self.B = self.meshes[0].B
            grads = [self.meshes[0].D]
        else:
            a, b = self.meshes
            self.B = sparse.kron(a.B, b.B, format="csr")
            grads = [sparse.kron(a.D, b.B, format="csr"), sparse.kron(a.B, b.D, format="csr")]
        full_mass = self.B.T @ sparse.diags(self.wq) @ self.B
        stiff = None
        for g, coef in zip(grads, metric):
            term = g.T @ sparse.diags(self.wq * coef(*coords).ravel()) @ g
            stiff = term if stiff is None else stiff + term
        dof_mesh = np.meshgrid(*[m.dof_coords for m in self.meshes], indexing="ij")
        self.dof_coords = tuple(c.ravel() for c in dof_mesh)
        fixed = np.zeros(dof_mesh[0].shape, dtype=bool)
        for axis, (lo, hi) in enumerate(dirichlet):
            index = [slice(None)] * len(self.meshes)
            if lo:
                index[axis] = 0
                fixed[tuple(index)] = True
            if hi:
                index[axis] = -1
                fixed[tuple(index)] = True
        self.free = np.flatnonzero(~fixed.ravel())
        self.ndof_full = fixed.size
        self.B = self.B[:, self.free].tocsr()
        self.grads = [g[:, self.free].tocsr() for g in grads]
        self.M = full_mass[self.free][:, self.free].tocsc()
        self.K = stiff[self.free][:, self.free].tocsc()

    @property
    def ndof(self):
        return self.free.size

    def interpolate(self, func):
        """Nodal coefficients of ``func(*coords)`` on the free dofs."""
        return np.asarray(func(*[c[self.free] for c in self.dof_coords]), dtype=float)

    def full_vector(self, u):
        out = np.zeros(self.ndof_full)
        out[self.free] = u
        return out

    def evaluate(self, u, *coords):
        """Evaluate the finite-element function at tensor points ``coords`` (1D arrays)."""
        full = self.full_vector(u)
        mats = [m.basis_at(c) for m, c in zip(self.meshes, coords)]
        if len(mats) == 1:
            return mats[0] @ full
        grid = full.reshape(self.meshes[0].ndof, self.meshes[1].ndof)
        return mats[0] @ grid @ mats[1].T

    def integrate(self, values_at_quad):
        return float(np.dot(self.wq, values_at_quad))


__all__ = ["FESpace", "Mesh1D", "lagrange_basis", "lobatto_nodes"]
