"""Convex hull property checks for discrete solutions."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .discretization import NodalField, Trajectory
from .geometry import ConvexPolytope, convex_hull, violation_distances

__all__ = [
    "CHP_TOL",
    "ChpReport",
    "nonlinear_tolerance",
    "boundary_hull_elliptic",
    "boundary_hull_parabolic",
    "verify",
    "eta_series",
    "write_eta_csv",
]

CHP_TOL = 1e-7


def nonlinear_tolerance(initial_values) -> float:
    """Default tolerance for Picard-solved presets: ``1e-6 * (1 + max|u0|)``."""
    return 1e-6 * (1.0 + float(np.abs(np.asarray(initial_values)).max()))


@dataclass(frozen=True, eq=False)
class ChpReport:
    """
    ``distances`` has shape ``(n_nodes,)`` for a field and
    ``(levels, n_nodes)`` for a trajectory; ``eta`` is filled for trajectories.
    """

    hull: ConvexPolytope
    distances: np.ndarray
    tolerance: float
    times: np.ndarray | None = None
    eta: list = field(default_factory=list)

    @property
    def max_violation(self) -> float:
        return float(self.distances.max())

    @property
    def argmax(self):
        idx = np.unravel_index(int(np.argmax(self.distances)), self.distances.shape)
        return tuple(int(i) for i in idx)

    @property
    def argmax_node(self) -> int:
        return self.argmax[-1]

    @property
    def argmax_level(self) -> int | None:
        return self.argmax[0] if self.distances.ndim == 2 else None

    @property
    def argmax_time(self) -> float | None:
        lvl = self.argmax_level
        return None if lvl is None else float(self.times[lvl])

    @property
    def verdict(self) -> str:
        return "PASS" if self.max_violation <= self.tolerance else "FAIL"

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_dict(self) -> dict:
        return {
            "hull_vertices": self.hull.vertices.tolist(),
            "max_violation": self.max_violation,
            "argmax_node": self.argmax_node,
            "argmax_time": self.argmax_time,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
        }

    def to_json(self) -> str:
        # one key per line, values compact
        items = [f"  {json.dumps(k)}: {json.dumps(v)}" for k, v in self.to_dict().items()]
        return "{\n" + ",\n".join(items) + "\n}\n"


def boundary_hull_elliptic(field: NodalField) -> ConvexPolytope:
    return convex_hull(field.boundary_values)


def boundary_hull_parabolic(traj: Trajectory, include_zero: bool = False) -> ConvexPolytope:
    """Hull of the initial level, the boundary nodes at every level and optionally the origin."""
    U = traj.stacked()
    samples = [U[0], U[:, traj.mesh.boundary_nodes].reshape(-1, U.shape[-1])]
    if include_zero:
        samples.append(np.zeros((1, U.shape[-1])))
    return convex_hull(np.vstack(samples))


def verify(data, hull: ConvexPolytope, tolerance: float = CHP_TOL) -> ChpReport:
    """Euclidean distance of every nodal (space-time) value to ``hull``."""
    if isinstance(data, Trajectory):
        U = data.stacked()
        d = violation_distances(U.reshape(-1, U.shape[-1]), hull).reshape(U.shape[:2])
        eta = 0.5 * (d**2) @ data.mesh.lumped_mass()
        series = [(float(t), float(e)) for t, e in zip(data.times, eta)]
        return ChpReport(hull, d, tolerance, times=np.array(data.times), eta=series)
    d = violation_distances(data.values, hull)
    return ChpReport(hull, d, tolerance)


def eta_series(traj: Trajectory, hull: ConvexPolytope):
    """``[(t_k, 1/2 sum_i m_i |u_k(i) - Pi u_k(i)|^2)]`` with lumped masses ``m_i``."""
    mass = traj.mesh.lumped_mass()
    out = []
    for t, f in zip(traj.times, traj.fields):
        d = violation_distances(f.values, hull)
        out.append((float(t), 0.5 * float(mass @ d**2)))
    return out


def write_eta_csv(series, path) -> None:
    lines = ["t,eta"] + [f"{t:.17g},{e:.17g}" for t, e in series]
    Path(path).write_text("\n".join(lines) + "\n")
