"""
Two systems that leave the hull
===============================

An elliptic pair coupled through ``[[1, -x], [-x, 1]]`` and two heat
equations with different speeds. Both are compared with closed-form
solutions.
"""
import numpy as np

from chplab.oracles import elliptic_exact, parabolic_exact
from chplab.scenarios import run_parabolic_counterexample, solve_elliptic_counterexample

# elliptic: the solution bows away from the chord between its two boundary values
field, report, err = solve_elliptic_counterexample(ell=0.9, cells=512)
x = field.mesh.nodes[report.argmax_node, 0]
print("elliptic")
print("  nodal error vs exact:", f"{err:.2e}")
print("  boundary values:", field.boundary_values.round(4).tolist())
print("  worst node x =", round(x, 4), "value", field.values[report.argmax_node].round(4),
      "exact", elliptic_exact(x).round(4))
print("  max violation:", round(report.max_violation, 4), report.verdict)

# parabolic: both components start at sin x; the second decays twice as fast,
# so the pair drifts off the diagonal
traj, report, err = run_parabolic_counterexample(a1=1.0, a2=2.0, cells=256, dt=1e-3, T=1.0)
mid = traj.mesh.n_nodes // 2
print("parabolic")
print("  hull:", report.hull.vertices.tolist())
print("  nodal error vs exact:", f"{err:.2e}")
print("  u(1, pi/2) =", traj.fields[-1].values[mid].round(4), "exact", parabolic_exact(1.0, np.pi / 2).round(4))
print("  violation at t = 1:", round(report.distances[-1].max(), 4))
print(f"  worst violation {report.max_violation:.4f} at t = {report.argmax_time:.3f} (near ln 2)")
