"""Ready-made scenarios: counterexample reproductions, refinement studies, random problems."""
from __future__ import annotations

import numpy as np

from .discretization import Mesh, interval_mesh, rect_mesh
from .elliptic import EllipticCoefficients, assemble, solve_dirichlet
from .oracles import (
    EllipticCounterexampleSpec,
    ParabolicCounterexampleSpec,
    elliptic_exact,
    elliptic_metric,
    parabolic_exact,
)
from .parabolic import ParabolicScenario, counterexample_preset, heat_preset, run
from .verifier import CHP_TOL, boundary_hull_elliptic, boundary_hull_parabolic, verify

__all__ = [
    "eoc",
    "solve_elliptic_counterexample",
    "run_parabolic_counterexample",
    "elliptic_convergence",
    "heat_convergence",
    "sine_initial",
    "random_spd",
    "random_diffusion",
    "grid_mesh",
]


def eoc(sizes, errors):
    """``log2`` error ratios for halved sizes; general ratios use ``log(e0/e1)/log(h0/h1)``."""
    sizes, errors = np.asarray(sizes, dtype=float), np.asarray(errors, dtype=float)
    return np.log(errors[:-1] / errors[1:]) / np.log(sizes[:-1] / sizes[1:])


def solve_elliptic_counterexample(ell: float = 0.9, cells: int = 512, tolerance: float = CHP_TOL):
    """
    FEM solution of the x-coupled 2x2 system with the exact boundary data.

    Returns ``(field, report, nodal_error)``.
    """
    spec = EllipticCounterexampleSpec(ell)
    mesh = interval_mesh(0.0, ell, cells)
    system = assemble(mesh, EllipticCoefficients(elliptic_metric, 1.0))
    g = elliptic_exact(mesh.nodes[mesh.boundary_nodes, 0], spec)
    field = solve_dirichlet(system, g)
    err = float(np.abs(field.values - elliptic_exact(mesh.nodes[:, 0], spec)).max())
    report = verify(field, boundary_hull_elliptic(field), tolerance)
    return field, report, err


def run_parabolic_counterexample(a1=1.0, a2=2.0, cells=256, dt=1e-3, T=1.0, tolerance: float = CHP_TOL):
    """
    Diagonal heat system from ``(sin x, sin x)`` with zero lateral data.

    Returns ``(trajectory, report, max_nodal_error)``.
    """
    spec = ParabolicCounterexampleSpec(a1, a2, T)
    mesh = interval_mesh(0.0, np.pi, cells)
    scenario = ParabolicScenario(mesh, counterexample_preset(a1, a2), T, dt, sine_initial(mesh, 2, same=True))
    traj = run(scenario)
    exact = parabolic_exact(traj.times[:, None], np.clip(mesh.nodes[None, :, 0], 0.0, np.pi), spec)
    err = float(np.abs(traj.stacked() - exact).max())
    report = verify(traj, boundary_hull_parabolic(traj), tolerance)
    return traj, report, err


def elliptic_convergence(levels=(64, 128, 256, 512), ell: float = 0.9):
    """``(h, max nodal error)`` for each cell count."""
    rows = []
    for M in levels:
        _, _, err = solve_elliptic_counterexample(ell, M)
        rows.append((ell / M, err))
    return rows


def heat_convergence(dts=(0.1, 0.05, 0.025, 0.0125), cells: int = 256, T: float = 1.0):
    """``(dt, max nodal error at T)`` for the heat equation from ``sin x`` on ``(0, pi)``."""
    mesh = interval_mesh(0.0, np.pi, cells)
    x = mesh.nodes[:, 0]
    rows = []
    for dt in dts:
        traj = run(ParabolicScenario(mesh, heat_preset(), T, dt, np.sin(x)[:, None]))
        err = float(np.abs(traj.fields[-1].values[:, 0] - np.exp(-traj.times[-1]) * np.sin(x)).max())
        rows.append((dt, err))
    return rows


def sine_initial(mesh: Mesh, N: int, same: bool = False) -> np.ndarray:
    """
    Smooth data vanishing on the boundary: component ``k`` is
    ``sin((k+1) s) / (k+1)`` in the rescaled coordinate ``s in [0, pi]``
    (a product of such factors in 2D); ``same`` repeats the first mode.
    """
    lo, hi = mesh.nodes.min(axis=0), mesh.nodes.max(axis=0)
    s = np.pi * (mesh.nodes - lo) / (hi - lo)
    cols = []
    for k in range(N):
        m = 1 if same else k + 1
        cols.append(np.prod(np.sin(m * s), axis=1) / (1 if same else m))
    return np.column_stack(cols)


def random_spd(rng, n: int, cond: float = 50.0) -> np.ndarray:
    """Random SPD matrix with condition number at most ``cond``."""
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    ev = np.exp(rng.uniform(0.0, np.log(cond), n))
    return (Q * ev) @ Q.T


def random_diffusion(rng, dim: int, floor: float = 0.5):
    """
    Smooth random uniformly-SPD field ``x -> a(x)`` with eigenvalues in
    ``[floor, floor + 3]``; returns ``(callable, floor)``.
    """
    freq = rng.uniform(0.5, 4.0, size=(3, dim))
    phase = rng.uniform(0.0, 2 * np.pi, size=3)
    if dim == 1:
        return (lambda x: np.array([[floor + 1.5 + 1.5 * np.sin(freq[0] @ x + phase[0])]])), floor

    def a(x):
        th = freq[0] @ x + phase[0]
        d1 = floor + 1.5 + 1.5 * np.sin(freq[1] @ x + phase[1])
        d2 = floor + 1.5 + 1.5 * np.cos(freq[2] @ x + phase[2])
        R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        return (R * [d1, d2]) @ R.T

    return a, floor


def grid_mesh(dim: int, cells: int) -> Mesh:
    if dim == 1:
        return interval_mesh(0.0, 1.0, cells)
    return rect_mesh((0.0, 1.0), (0.0, 1.0), cells, cells)
