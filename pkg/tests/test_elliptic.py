import numpy as np
import pytest

from chplab.discretization import interval_mesh, rect_mesh
from chplab.elliptic import (
    CoefficientError,
    EllipticCoefficients,
    assemble,
    backward_error,
    solve_dirichlet,
    solve_free,
    solve_scalar_mp,
)
from chplab.geometry import convex_hull, violation_distances
from chplab.scenarios import elliptic_convergence, eoc, solve_elliptic_counterexample

from helpers import random_spd


def test_two_cell_stencil():
    system = assemble(interval_mesh(0.0, 1.0, 2), EllipticCoefficients(np.eye(1)))
    K = system.matrix.toarray()
    assert np.allclose(K[1], [-2.0, 4.0, -2.0])
    assert np.allclose(K, K.T)


def test_identity_metric_decouples():
    mesh = interval_mesh(0.0, 1.0, 6)
    K = assemble(mesh, EllipticCoefficients(np.eye(3))).matrix.toarray()
    # no coupling between different components
    for a in range(3):
        for b in range(3):
            if a != b:
                assert np.all(K[a::3, b::3] == 0.0)
    assert np.allclose(K[0::3, 0::3], K[1::3, 1::3])


def test_metric_scaling_and_symmetry(rng):
    mesh = rect_mesh((0, 1), (0, 1), 4, 4)
    A = random_spd(rng, 2)
    K1 = assemble(mesh, EllipticCoefficients(A)).matrix
    K3 = assemble(mesh, EllipticCoefficients(3.0 * A)).matrix
    assert abs(K3 - 3.0 * K1).max() <= 1e-12 * abs(K1).max()
    assert abs(K1 - K1.T).max() <= 1e-14 * abs(K1).max()


def test_linear_solution_reproduced():
    mesh = interval_mesh(0.0, 1.0, 10)
    u = solve_dirichlet(assemble(mesh, EllipticCoefficients(np.eye(1))), [[0.0], [1.0]])
    assert np.allclose(u.values[:, 0], mesh.nodes[:, 0], atol=1e-12)


def test_constant_boundary_gives_constant(rng):
    mesh = rect_mesh((0, 1), (0, 2), 6, 5)
    v0 = np.array([1.5, -2.0, 0.25])
    coeffs = EllipticCoefficients(random_spd(rng, 3), lambda x: np.diag([1.0 + x[0], 2.0]))
    u = solve_dirichlet(assemble(mesh, coeffs), np.tile(v0, (len(mesh.boundary_nodes), 1)))
    assert np.allclose(u.values, v0, atol=1e-10)


def test_dict_boundary_values():
    mesh = interval_mesh(0.0, 1.0, 4)
    system = assemble(mesh, EllipticCoefficients(np.eye(2)))
    u = solve_dirichlet(system, {0: [0.0, 1.0], 4: [2.0, 1.0]})
    assert np.allclose(u.values[2], [1.0, 1.0])
    with pytest.raises(ValueError, match="missing"):
        solve_dirichlet(system, {0: [0.0, 1.0]})
    with pytest.raises(ValueError, match="components"):
        solve_dirichlet(system, [[0.0], [1.0]])


def test_counterexample_nodal_error():
    _, report, err = solve_elliptic_counterexample(0.9, 512)
    assert err <= 5e-4
    assert report.verdict == "FAIL"


def test_counterexample_convergence_order():
    rows = elliptic_convergence((64, 128, 256, 512))
    rates = eoc(*zip(*rows))
    assert np.all((rates >= 1.8) & (rates <= 2.2)), rates


def test_scalar_mp_random_coefficient(rng):
    mesh = interval_mesh(0.0, 1.0, 64)
    vals = rng.uniform(0.0, 1.0, size=mesh.n_elements) + 1e-3
    mid = mesh.midpoints[:, 0]
    a = lambda x: vals[min(int(np.searchsorted(mid, x[0])), len(vals) - 1)]
    u = solve_scalar_mp(mesh, a, [[0.3], [-1.2]])
    assert u.values.min() >= -1.2 - 1e-12
    assert u.values.max() <= 0.3 + 1e-12


def test_scalar_mp_constant_and_2d():
    u = solve_scalar_mp(interval_mesh(0, 2, 8), 2.0, [[1.0], [3.0]])
    assert np.allclose(u.values[:, 0], 1.0 + np.linspace(0, 2, 9))
    mesh = rect_mesh((0, 1), (0, 1), 8, 8)
    X = mesh.nodes[mesh.boundary_nodes]
    u2 = solve_scalar_mp(mesh, 1.0, (X[:, 0] + X[:, 1])[:, None])
    assert np.allclose(u2.values[:, 0], mesh.nodes.sum(axis=1), atol=1e-9)


def test_metric_diagonalization_decouples(rng):
    # with A = Q D Q^T the rotated components solve scalar problems
    mesh = rect_mesh((0, 1), (0, 1), 10, 10)
    A = random_spd(rng, 3)
    _, Q = np.linalg.eigh(A)
    g = rng.normal(size=(len(mesh.boundary_nodes), 3))
    u = solve_dirichlet(assemble(mesh, EllipticCoefficients(A)), g)
    w = u.values @ Q
    for k in range(3):
        wk = solve_scalar_mp(mesh, 1.0, (g @ Q)[:, k : k + 1])
        assert np.abs(w[:, k] - wk.values[:, 0]).max() <= 1e-9


def test_non_spd_coefficient_names_element():
    mesh = interval_mesh(0.0, 1.0, 4)
    bad = lambda x: np.array([[1.0 if x[0] < 0.5 else -1.0]])
    with pytest.raises(CoefficientError, match="element 2"):
        assemble(mesh, EllipticCoefficients(np.eye(1), bad))
    with pytest.raises(CoefficientError, match="metric"):
        assemble(mesh, EllipticCoefficients([[1.0, 2.0], [2.0, 1.0]]))


def test_solvers_agree(rng):
    mesh = rect_mesh((0, 1), (0, 1), 6, 6)
    system = assemble(mesh, EllipticCoefficients(random_spd(rng, 2)))
    free = ~system.dirichlet_mask
    A = system.matrix[free][:, free]
    b = rng.normal(size=A.shape[0])
    x1, x2, x3 = (solve_free(A, b, m) for m in ("cg", "direct", "banded"))
    assert np.allclose(x1, x2, atol=1e-9) and np.allclose(x2, x3, atol=1e-9)
    assert np.array_equal(solve_free(A, np.zeros_like(b)), np.zeros_like(b))


@pytest.mark.parametrize("dim", [1, 2])
def test_constant_metric_stays_in_hull(rng, dim):
    mesh = interval_mesh(0, 1, 64) if dim == 1 else rect_mesh((0, 1), (0, 1), 16, 16)
    for N in (2, 3):
        A = random_spd(rng, N)
        g = rng.normal(size=(len(mesh.boundary_nodes), N))
        u = solve_dirichlet(assemble(mesh, EllipticCoefficients(A)), g)
        d = violation_distances(u.values, convex_hull(g))
        tol = 1e-7 if dim == 1 else max(1e-7, 0.5 * mesh.h**2 * np.abs(u.values).max())
        assert d.max() <= tol


def test_backward_error():
    A = np.array([[2.0, -1.0], [-1.0, 2.0]])
    b = np.array([1.0, 0.0])
    x = np.linalg.solve(A, b)
    assert backward_error(A, x, b) <= 1e-16
    # residual (0.2, -0.1); scale |A| |x| + |b| = 3 * 23/30 + 1 = 3.3
    assert backward_error(A, x + [0.1, 0.0], b) == pytest.approx(0.2 / 3.3)
    assert backward_error(A, np.zeros(2), np.zeros(2)) == 0.0
