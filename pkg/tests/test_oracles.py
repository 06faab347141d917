import numpy as np
import pytest

from chplab.discretization import rect_mesh
from chplab.geometry import convex_hull, violation_distances
from chplab.oracles import (
    EllipticCounterexampleSpec,
    ParabolicCounterexampleSpec,
    elliptic_exact,
    elliptic_metric,
    elliptic_ratio,
    elliptic_ratio_derivative,
    harmonic_oracle,
    parabolic_eta,
    parabolic_exact,
)


def test_elliptic_exact_values():
    assert np.allclose(elliptic_exact(0.0), [0.0, 0.0])
    assert np.allclose(elliptic_exact(0.5), [np.log(1 / 3), np.log(0.75)])
    with pytest.raises(ValueError):
        elliptic_exact(0.95)
    with pytest.raises(ValueError):
        EllipticCounterexampleSpec(1.0)


def test_elliptic_exact_solves_system():
    # residual of -(A(x) u')' = 0 by central differences of the flux
    h = 1e-4
    x = np.linspace(0.05, 0.85, 17)

    def flux(s):
        du = (elliptic_exact(s + h / 2) - elliptic_exact(s - h / 2)) / h
        return np.array([elliptic_metric(si) @ d for si, d in zip(s, du)])

    res = (flux(x + h / 2) - flux(x - h / 2)) / h
    assert np.abs(res).max() <= 1e-3
    # first integral: the flux itself is constant
    F = flux(x)
    assert np.abs(F - F[0]).max() <= 1e-6


def test_ratio_derivative_matches_finite_differences(rng):
    x = rng.uniform(0.01, 0.89, 100)
    h = 1e-6
    fd = (elliptic_ratio(x + h) - elliptic_ratio(x - h)) / (2 * h)
    assert np.allclose(elliptic_ratio_derivative(x), fd, rtol=1e-6, atol=1e-6)


def test_ratio_derivative_sign_is_constant():
    x = np.linspace(1e-3, 0.9 - 1e-3, 1000)
    d = elliptic_ratio_derivative(x)
    assert np.all(d > 0) or np.all(d < 0)
    with pytest.raises(ValueError):
        elliptic_ratio_derivative(0.0)


def test_exact_solution_leaves_boundary_hull():
    ell = 0.9
    K = convex_hull(elliptic_exact([0.0, ell]))
    x = np.linspace(ell / 4, 3 * ell / 4, 50)
    assert violation_distances(elliptic_exact(x), K).min() > 0.05


def test_parabolic_exact_values():
    assert np.allclose(parabolic_exact(0.0, np.pi / 2), [1.0, 1.0])
    assert np.allclose(parabolic_exact(1.0, np.pi / 2), [np.exp(-1), np.exp(-2)])
    assert np.allclose(parabolic_exact(0.3, [0.0, np.pi]), 0.0)
    assert parabolic_eta(0.0) == 0.0
    assert parabolic_eta(1.0) == pytest.approx(np.pi / 8 * (np.exp(-1) - np.exp(-2)) ** 2)
    with pytest.raises(ValueError):
        ParabolicCounterexampleSpec(1.0, 1.0)


def test_parabolic_exact_solves_heat():
    spec = ParabolicCounterexampleSpec(1.0, 2.0)
    t, x, h = 0.4, np.linspace(0.2, 3.0, 15), 1e-4
    ut = (parabolic_exact(t + h, x, spec) - parabolic_exact(t - h, x, spec)) / (2 * h)
    uxx = (parabolic_exact(t, x + h, spec) - 2 * parabolic_exact(t, x, spec) + parabolic_exact(t, x - h, spec)) / h**2
    res = ut - uxx * [spec.a1, spec.a2]
    assert np.abs(res).max() <= 1e-5


def test_harmonic_oracle_cases():
    mesh = rect_mesh((-1, 1), (-1, 1), 4, 4)
    x, y = mesh.nodes.T
    assert np.allclose(harmonic_oracle(mesh, ["x", "y"]), mesh.nodes)
    v = harmonic_oracle(mesh, ["x2-y2", {"xy": 2.0}])
    assert np.allclose(v, np.column_stack([x * x - y * y, 2 * x * y]))
    K = convex_hull(v[mesh.boundary_nodes])
    assert violation_distances(v, K).max() <= 1e-12
    c = harmonic_oracle(mesh, [{"1": 3.0}, {"1": -1.0}])
    assert np.allclose(c, [3.0, -1.0])
    with pytest.raises(KeyError):
        harmonic_oracle(mesh, ["x3"])
