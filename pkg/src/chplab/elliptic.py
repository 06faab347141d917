"""
Linear elliptic systems ``-div(A grad u) = 0`` with coefficients of the form
``A_ij^{ab}(x) = metric^{ab}(x) * diffusion_ij(x)``.

Assembly uses P1 elements with one-point (midpoint) quadrature. Dirichlet
conditions are imposed by eliminating the boundary unknowns and moving the
lift to the right-hand side, which keeps the free system symmetric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discretization import Mesh, NodalField

__all__ = [
    "EllipticCoefficients",
    "BlockSparseSystem",
    "CoefficientError",
    "SolverError",
    "assemble",
    "assemble_blocks",
    "solve_dirichlet",
    "solve_scalar_mp",
    "solve_free",
    "backward_error",
]

RESIDUAL_TOL = 1e-10
CG_RTOL = 1e-12


class CoefficientError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


def _as_block(v, shape):
    v = np.asarray(v, dtype=float)
    if v.size == 1 and shape[0] == shape[1]:
        # scalar means a multiple of the identity
        return float(v.reshape(())) * np.eye(shape[0])
    return v.reshape(shape)


def _sample(coef, points, shape):
    if callable(coef):
        return np.array([_as_block(coef(p), shape) for p in points])
    return np.array(np.broadcast_to(_as_block(coef, shape), (len(points),) + shape))


@dataclass(frozen=True)
class EllipticCoefficients:
    """
    Parameters
    ----------
    metric : array (N, N) or callable x -> (N, N)
        Component coupling; constant in the setting where the convex hull
        property is guaranteed, x-dependent for the counterexample.
    diffusion : scalar, array (dim, dim) or callable x -> (dim, dim)
        Spatial diffusion, symmetric with ``xi . a(x) xi >= lam |xi|^2``.
    lam : float
        Ellipticity floor checked at every quadrature point.
    """

    metric: object
    diffusion: object = 1.0
    lam: float = 1e-12

    @property
    def metric_is_constant(self) -> bool:
        return not callable(self.metric)

    @property
    def n_components(self) -> int:
        if callable(self.metric):
            raise AttributeError("component count of an x-dependent metric is known only after sampling")
        return np.atleast_2d(self.metric).shape[0]

    def sample(self, mesh: Mesh):
        """Metric and diffusion at element midpoints, validated."""
        mid = mesh.midpoints
        if callable(self.metric):
            N = np.atleast_2d(self.metric(mid[0])).shape[0]
        else:
            N = np.atleast_2d(self.metric).shape[0]
        metric = _sample(self.metric, mid, (N, N))
        diffusion = _sample(self.diffusion, mid, (mesh.dim, mesh.dim))
        check_spd(metric, "metric", floor=0.0)
        check_spd(diffusion, "diffusion", floor=self.lam)
        return metric, diffusion


def check_spd(mats, name, floor=0.0):
    """Raise naming the first element where ``mats[e]`` is not symmetric with eigenvalues above ``floor``."""
    mats = np.asarray(mats)
    scale = np.abs(mats).max(axis=(1, 2))
    asym = np.abs(mats - mats.transpose(0, 2, 1)).max(axis=(1, 2))
    bad = np.flatnonzero(asym > 1e-12 * np.maximum(scale, 1.0))
    if len(bad):
        raise CoefficientError(f"{name} is not symmetric on element {bad[0]}")
    lo = np.linalg.eigvalsh(mats)[:, 0]
    bad = np.flatnonzero((lo <= 0.0) | (lo < floor * (1.0 - 1e-12)))
    if len(bad):
        e = bad[0]
        raise CoefficientError(
            f"{name} fails positive definiteness on element {e} (smallest eigenvalue {lo[e]:.3e}, floor {floor:.3e})"
        )


@dataclass(frozen=True, eq=False)
class BlockSparseSystem:
    """Stiffness on (node, component) unknowns ordered ``node * N + component``."""

    matrix: sp.csr_matrix
    mesh: Mesh
    n_components: int

    @property
    def dirichlet_mask(self) -> np.ndarray:
        mask = np.zeros(self.matrix.shape[0], dtype=bool)
        N = self.n_components
        for a in range(N):
            mask[self.mesh.boundary_nodes * N + a] = True
        return mask


def assemble_blocks(mesh: Mesh, metric, diffusion) -> sp.csr_matrix:
    """
    Global matrix of ``sum_e |e| metric_e^{ab} (diffusion_e grad phi_j) . grad phi_i``
    from per-element samples ``metric (n_el, N, N)`` and ``diffusion (n_el, dim, dim)``.
    """
    G = mesh.basis_gradients
    S = np.einsum("e,ekd,edf,elf->ekl", mesh.measures, G, diffusion, G)
    N = metric.shape[1]
    vals = np.einsum("eab,ekl->ekalb", metric, S)
    dofs = mesh.elements[:, :, None] * N + np.arange(N)  # (n_el, d+1, N)
    nloc = dofs.shape[1] * N
    dofs = dofs.reshape(len(dofs), nloc)
    rows = np.repeat(dofs, nloc, axis=1).ravel()
    cols = np.tile(dofs, (1, nloc)).ravel()
    n = mesh.n_nodes * N
    return sp.coo_matrix((vals.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble(mesh: Mesh, coeffs: EllipticCoefficients) -> BlockSparseSystem:
    metric, diffusion = coeffs.sample(mesh)
    return BlockSparseSystem(assemble_blocks(mesh, metric, diffusion), mesh, metric.shape[1])


def _boundary_array(mesh, boundary_values, N=None):
    if isinstance(boundary_values, dict):
        missing = set(mesh.boundary_nodes.tolist()) - set(boundary_values)
        if missing:
            raise ValueError(f"boundary data missing on nodes {sorted(missing)[:5]}")
        g = np.array([np.atleast_1d(boundary_values[i]) for i in mesh.boundary_nodes], dtype=float)
    else:
        g = np.asarray(boundary_values, dtype=float)
        if g.ndim == 1:
            g = g[:, None] if N in (None, 1) else g[None, :].repeat(len(mesh.boundary_nodes), 0)
        if g.shape[0] != len(mesh.boundary_nodes):
            raise ValueError(
                f"boundary data has {g.shape[0]} rows for {len(mesh.boundary_nodes)} boundary nodes"
            )
    if not np.all(np.isfinite(g)):
        raise ValueError("boundary data must be finite")
    if N is not None and g.shape[1] != N:
        raise ValueError(f"boundary data has {g.shape[1]} components, system has {N}")
    return g


def _banded_solve(A, b):
    A = A.tocoo()
    off = A.col - A.row
    lower, upper = max(0, -off.min()), max(0, off.max())
    ab = np.zeros((lower + upper + 1, A.shape[0]))
    np.add.at(ab, (upper + A.row - A.col, A.col), A.data)
    return scipy.linalg.solve_banded((lower, upper), ab, b)


def solve_free(A, b, method="direct"):
    """
    Solve the reduced system, checking the relative residual.

    ``method`` is ``"banded"``, ``"cg"`` (Jacobi-preconditioned) or ``"direct"``.
    The check uses the normwise backward error, which stays meaningful when
    ``|A| |x|`` dwarfs ``|b|`` (coefficients spanning many decades).
    """
    A = sp.csr_matrix(A)
    n = A.shape[0]
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    if method == "banded":
        x = _banded_solve(A, b)
    elif method == "cg":
        d = A.diagonal()
        M = sp.diags(1.0 / d)
        x, info = spla.cg(A, b, rtol=CG_RTOL, atol=0.0, maxiter=20 * n, M=M)
        if info != 0:
            res = np.linalg.norm(b - A @ x) / bnorm
            raise SolverError(f"CG did not converge in {20 * n} iterations (relative residual {res:.3e})")
    else:
        x = spla.spsolve(A.tocsc(), b)
    res = backward_error(A, x, b)
    if not np.isfinite(res) or res > RESIDUAL_TOL:
        raise SolverError(f"linear solve failed (relative residual {res:.3e})")
    return x


def backward_error(A, x, b) -> float:
    """Normwise relative residual ``|b - Ax| / (|A| |x| + |b|)`` in the max norm."""
    A = sp.csr_matrix(A)
    scale = abs(A).sum(axis=1).max() * np.abs(x).max() + np.abs(b).max()
    if scale == 0.0:
        return 0.0
    return float(np.abs(b - A @ x).max() / scale)


def solve_dirichlet(system: BlockSparseSystem, boundary_values, method=None) -> NodalField:
    """
    Discrete weak solution with prescribed values on the boundary nodes.

    ``boundary_values`` maps boundary node index to an ``R^N`` vector, or is
    an array aligned with ``mesh.boundary_nodes``. The default solver is a
    banded factorization in 1D and preconditioned CG in 2D.
    """
    mesh, N = system.mesh, system.n_components
    g = _boundary_array(mesh, boundary_values, N)
    if method is None:
        method = "banded" if mesh.dim == 1 else "cg"
    u = np.zeros(mesh.n_nodes * N)
    fixed = system.dirichlet_mask
    u[fixed] = g.ravel()
    free = ~fixed
    A = system.matrix
    rhs = -(A[free][:, fixed] @ u[fixed])
    u[free] = solve_free(A[free][:, free], rhs, method)
    return NodalField(mesh, u.reshape(mesh.n_nodes, N))


def solve_scalar_mp(mesh: Mesh, diffusion, boundary_values, lam: float = 1e-12) -> NodalField:
    """Scalar problem ``-div(a grad u) = 0``: the ``N = 1`` case with unit metric."""
    system = assemble(mesh, EllipticCoefficients(np.eye(1), diffusion, lam))
    return solve_dirichlet(system, boundary_values)
