"""
Implicit Euler for ``du/dt - div(a0 * (D (x) a) grad u) + b . grad u + c u = 0``.

``D`` is the identity except in the diagonal counterexample mode, so the
components only couple through the scalar coefficients ``a0, b, c``, which
may depend on ``(t, x, u, grad u)``. Each time step is a Picard loop: the
coefficients are frozen at the previous iterate (midpoint of each element,
element gradient), the resulting linear problem is solved per component, and
the loop stops when the relative increment drops below ``PICARD_TOL``.

Coefficient callables are vectorized over elements::

    a0(t, x, u, G) -> (n_el,)         x: (n_el, dim), u: (n_el, N), G: (n_el, N, dim)
    a(t, x)        -> (n_el, dim, dim)
    b(t, x, u, G)  -> (n_el, dim)
    c(t, x, u, G)  -> (n_el,)

Plain numbers or arrays are accepted in place of callables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .discretization import Mesh, NodalField, Trajectory, element_gradients, field_to_csv
from .elliptic import CoefficientError, SolverError, assemble_blocks, check_spd, solve_free

__all__ = [
    "ParabolicCoefficients",
    "ParabolicScenario",
    "PicardError",
    "step",
    "run",
    "p_laplace_preset",
    "heat_preset",
    "counterexample_preset",
    "dump_trajectory",
]

PICARD_TOL = 1e-10
PICARD_MAX = 100
DEFAULT_EPSILON = 1e-10


class PicardError(SolverError):
    pass


def _eval_scalar(f, n, *args):
    if f is None:
        return np.zeros(n)
    v = f(*args) if callable(f) else f
    return np.broadcast_to(np.asarray(v, dtype=float), (n,)).copy()


@dataclass(frozen=True)
class ParabolicCoefficients:
    a0: object = 1.0
    a: object = 1.0
    b: object = None
    c: object = None
    C: float = 0.0
    lam: float = 1e-12
    p: float | None = None
    component_diag: tuple | None = None

    def evaluate(self, t, mesh: Mesh, values):
        """Per-element ``(a0, a, b, c)`` at time ``t`` for nodal ``values``, contract-checked."""
        n, dim = mesh.n_elements, mesh.dim
        x = mesh.midpoints
        u = values[mesh.elements].mean(axis=1)
        G = element_gradients(mesh, values)
        a0 = _eval_scalar(self.a0, n, t, x, u, G)
        if callable(self.a):
            a = np.asarray(self.a(t, x), dtype=float).reshape(n, dim, dim)
        else:
            a = np.broadcast_to(np.asarray(self.a, dtype=float) * np.eye(dim)
                                if np.ndim(self.a) == 0 else np.asarray(self.a, dtype=float),
                                (n, dim, dim)).copy()
        if self.b is None:
            b = np.zeros((n, dim))
        else:
            v = self.b(t, x, u, G) if callable(self.b) else self.b
            b = np.broadcast_to(np.asarray(v, dtype=float), (n, dim)).copy()
        c = _eval_scalar(self.c, n, t, x, u, G)

        if not np.all(np.isfinite(a0)) or np.any(a0 < 0.0):
            e = int(np.flatnonzero(~(a0 >= 0.0))[0])
            raise CoefficientError(f"a0 must be nonnegative (element {e}, value {a0[e]:.3e})")
        if np.any(c < 0.0):
            e = int(np.flatnonzero(c < 0.0)[0])
            raise CoefficientError(f"c must be nonnegative (element {e}, value {c[e]:.3e})")
        excess = np.linalg.norm(b, axis=1) - self.C * np.sqrt(a0)
        if np.any(excess > 1e-12):
            e = int(np.argmax(excess))
            raise CoefficientError(
                f"|b| <= C sqrt(a0) violated on element {e} (excess {excess[e]:.3e}, C = {self.C})"
            )
        check_spd(a, "diffusion a", floor=self.lam)
        return a0, a, b, c

    @property
    def diag(self):
        return None if self.component_diag is None else np.asarray(self.component_diag, dtype=float)


def p_laplace_preset(p: float, epsilon: float = DEFAULT_EPSILON) -> ParabolicCoefficients:
    """``a0 = (|G|^2 + epsilon)^((p-2)/2)``, ``a = I``, ``b = 0``, ``c = 0``."""
    if not p > 1.0:
        raise ValueError(f"p-Laplace needs p > 1, got {p}")
    if epsilon < 0.0:
        raise ValueError("epsilon must be nonnegative")
    expo = (p - 2.0) / 2.0

    def a0(t, x, u, G):
        if expo == 0.0:
            return np.ones(len(G))
        return (np.einsum("end,end->e", G, G) + epsilon) ** expo

    return ParabolicCoefficients(a0=a0, p=p)


def heat_preset() -> ParabolicCoefficients:
    return ParabolicCoefficients()


def counterexample_preset(a1: float = 1.0, a2: float = 2.0) -> ParabolicCoefficients:
    """Two uncoupled heat equations with diffusivities ``a1``, ``a2``."""
    return ParabolicCoefficients(component_diag=(a1, a2))


def _as_field_values(mesh, data, N=None):
    if isinstance(data, NodalField):
        return np.array(data.values)
    v = data(mesh.nodes) if callable(data) else data
    v = np.asarray(v, dtype=float)
    if v.ndim == 1 and v.shape[0] == mesh.n_nodes:
        v = v[:, None]
    return np.broadcast_to(v, (mesh.n_nodes, v.shape[-1] if N is None else N)).copy()


@dataclass(frozen=True, eq=False)
class ParabolicScenario:
    """
    ``initial``: NodalField, array ``(n_nodes, N)`` or callable of node coordinates.
    ``boundary``: array ``(n_boundary, N)`` / ``(N,)`` (time-constant) or callable
    ``(t, boundary_coords) -> (n_boundary, N)``; default zero.
    """

    mesh: Mesh
    coefficients: ParabolicCoefficients
    T: float
    dt: float
    initial: object
    boundary: object = None

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.T < self.dt:
            raise ValueError(f"T = {self.T} must be at least dt = {self.dt}")
        u0 = _as_field_values(self.mesh, self.initial)
        if not np.all(np.isfinite(u0)):
            raise ValueError("initial field must be finite")
        diag = self.coefficients.diag
        if diag is not None and len(diag) != u0.shape[1]:
            raise ValueError(f"component_diag has {len(diag)} entries for {u0.shape[1]} components")

    @property
    def n_components(self) -> int:
        return self.initial_values().shape[1]

    def initial_values(self) -> np.ndarray:
        return _as_field_values(self.mesh, self.initial)

    def boundary_values(self, t) -> np.ndarray:
        nb = len(self.mesh.boundary_nodes)
        N = self.initial_values().shape[1]
        if self.boundary is None:
            return np.zeros((nb, N))
        g = self.boundary(t, self.mesh.nodes[self.mesh.boundary_nodes]) if callable(self.boundary) else self.boundary
        return np.broadcast_to(np.asarray(g, dtype=float), (nb, N)).copy()

    def time_grid(self) -> np.ndarray:
        n = max(1, math.ceil(self.T / self.dt - 1e-9))
        return np.minimum(np.arange(n + 1) * self.dt, self.T)


def _operator(mesh, a0, a, b, c, scale, mass_over_dt):
    K = assemble_blocks(mesh, (a0 * scale)[:, None, None], a)
    nloc = mesh.dim + 1
    share = mesh.measures / nloc
    A = K + sp.diags(mass_over_dt)
    if np.any(b):
        # (b . grad phi_j) tested against phi_i, integral of phi_i is |e| / (dim + 1)
        vals = share[:, None, None] * np.einsum("ed,eld->el", b, mesh.basis_gradients)[:, None, :]
        vals = np.broadcast_to(vals, (mesh.n_elements, nloc, nloc))
        rows = np.repeat(mesh.elements, nloc, axis=1).ravel()
        cols = np.tile(mesh.elements, (1, nloc)).ravel()
        A = A + sp.coo_matrix((vals.ravel(), (rows, cols)), shape=K.shape).tocsr()
    if np.any(c):
        r = np.zeros(mesh.n_nodes)
        np.add.at(r, mesh.elements, (c * share)[:, None])
        A = A + sp.diags(r)
    return A.tocsr()


def step(state, t: float, dt: float, scenario: ParabolicScenario) -> NodalField:
    """
    One implicit Euler step from ``state`` at time ``t`` to ``t + dt``.

    Raises :class:`PicardError` if the frozen-coefficient iteration has not
    reached a relative increment of ``PICARD_TOL`` after ``PICARD_MAX`` sweeps.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    mesh = scenario.mesh
    coeffs = scenario.coefficients
    prev = np.asarray(state.values if isinstance(state, NodalField) else state, dtype=float)
    N = prev.shape[1]
    diag = coeffs.diag if coeffs.diag is not None else np.ones(N)
    t1 = t + dt
    mass = mesh.lumped_mass()
    fixed = np.zeros(mesh.n_nodes, dtype=bool)
    fixed[mesh.boundary_nodes] = True
    free = ~fixed
    g = scenario.boundary_values(t1)
    method = "banded" if mesh.dim == 1 else "direct"

    w = prev.copy()
    w[mesh.boundary_nodes] = g
    increment = np.inf
    for _ in range(PICARD_MAX):
        a0, a, b, c = coeffs.evaluate(t1, mesh, w)
        new = np.empty_like(w)
        new[mesh.boundary_nodes] = g
        cache = {}
        for alpha in range(N):
            s = float(diag[alpha])
            if s not in cache:
                A = _operator(mesh, a0, a, b, c, s, mass / dt)
                cache[s] = (A[free][:, free], A[free][:, fixed])
            Aff, Afb = cache[s]
            rhs = (mass / dt * prev[:, alpha])[free] - Afb @ g[:, alpha]
            new[free, alpha] = solve_free(Aff, rhs, method)
        scale = max(np.linalg.norm(new), np.finfo(float).tiny)
        increment = np.linalg.norm(new - w) / scale
        w = new
        if increment <= PICARD_TOL:
            return NodalField(mesh, w)
    raise PicardError(f"Picard iteration did not converge in {PICARD_MAX} sweeps (last increment {increment:.3e})")


def run(scenario: ParabolicScenario) -> Trajectory:
    """Trajectory on ``scenario.time_grid()``; level 0 carries the boundary data at ``t = 0``."""
    times = scenario.time_grid()
    u = scenario.initial_values()
    u[scenario.mesh.boundary_nodes] = scenario.boundary_values(times[0])
    fields = [NodalField(scenario.mesh, u)]
    for k in range(len(times) - 1):
        fields.append(step(fields[-1], times[k], times[k + 1] - times[k], scenario))
    return Trajectory(times, tuple(fields))


def dump_trajectory(traj: Trajectory, directory, stem: str = "level") -> Path:
    """One field CSV per level plus ``times.csv`` (``level,time,filename``)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(len(traj) - 1)))
    lines = ["level,time,filename"]
    for k, (t, f) in enumerate(zip(traj.times, traj.fields)):
        name = f"{stem}_{k:0{width}d}.csv"
        field_to_csv(f, directory / name)
        lines.append(f"{k},{t:.17g},{name}")
    index = directory / "times.csv"
    index.write_text("\n".join(lines) + "\n")
    return index
