import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shrinkerlab.errors import PreconditionError
from shrinkerlab.fem import FESpace, Mesh1D, lagrange_basis, lobatto_nodes


@pytest.mark.parametrize("p", [1, 2, 4, 6])
def test_lobatto_nodes_exact_quadrature_support(p):
    x = lobatto_nodes(p)
    assert x[0] == -1 and x[-1] == 1 and np.all(np.diff(x) > 0)
    assert np.allclose(x, -x[::-1])


@settings(max_examples=40)
@given(p=st.integers(1, 8), x=st.floats(-1, 1))
def test_partition_of_unity(p, x):
    val, der = lagrange_basis(lobatto_nodes(p), x)
    assert val.sum() == pytest.approx(1.0, abs=1e-12)
    assert der.sum() == pytest.approx(0.0, abs=1e-9)


def test_basis_is_cardinal():
    nodes = lobatto_nodes(5)
    val, _ = lagrange_basis(nodes, nodes)
    assert np.allclose(val, np.eye(nodes.size), atol=1e-13)


def test_mesh_rejects_unsorted():
    with pytest.raises(PreconditionError):
        Mesh1D([0.0, 1.0, 0.5], 2)


def test_mass_and_stiffness_of_polynomial():
    mesh = Mesh1D(np.linspace(0.0, 2.0, 5), 4)
    space = FESpace([mesh], lambda x: np.ones_like(x), [lambda x: np.ones_like(x)])
    u = space.interpolate(lambda x: x**2)
    # int_0^2 x^4 = 32/5 and int_0^2 (2x)^2 = 32/3
    assert u @ (space.M @ u) == pytest.approx(32 / 5, rel=1e-12)
    assert u @ (space.K @ u) == pytest.approx(32 / 3, rel=1e-12)


def test_dirichlet_removes_boundary_dof():
    mesh = Mesh1D(np.linspace(0.0, 1.0, 3), 3)
    free = FESpace([mesh], lambda x: np.ones_like(x), [lambda x: np.ones_like(x)])
    fixed = FESpace([mesh], lambda x: np.ones_like(x), [lambda x: np.ones_like(x)],
                    dirichlet=[(False, True)])
    assert fixed.ndof == free.ndof - 1


def test_two_axis_evaluate():
    a = Mesh1D(np.linspace(0.0, 1.0, 3), 3)
    b = Mesh1D(np.linspace(0.0, 2.0, 3), 3)
    space = FESpace([a, b], lambda x, y: np.ones_like(x),
                    [lambda x, y: np.ones_like(x), lambda x, y: np.ones_like(x)])
    u = space.interpolate(lambda x, y: x * y + y**2)
    vals = space.evaluate(u, np.array([0.3]), np.array([1.7]))
    assert vals[0, 0] == pytest.approx(0.3 * 1.7 + 1.7**2, rel=1e-12)
