"""
Nonlinear diffusion: the p-Laplace system
=========================================

Implicit Euler with Picard iteration for ``u_t = div(|grad u|^(p-2) grad u)``
on the unit square. The boundary holds a constant vector, the initial data
adds smooth bumps to it. The defect energy ``eta`` measures the squared
distance of the solution to the hull and should stay at round-off.
"""
import numpy as np

from chplab import ParabolicScenario, boundary_hull_parabolic, p_laplace_preset, rect_mesh, run, verify
from chplab.scenarios import sine_initial
from chplab.verifier import nonlinear_tolerance

mesh = rect_mesh((0, 1), (0, 1), 16, 16)
g = np.array([0.3, -0.2])
u0 = g + sine_initial(mesh, 2)

for p in (1.5, 3.0):
    traj = run(ParabolicScenario(mesh, p_laplace_preset(p), T=0.1, dt=1e-3, initial=u0, boundary=g))
    report = verify(traj, boundary_hull_parabolic(traj), nonlinear_tolerance(u0))
    eta = max(e for _, e in report.eta)
    print(f"p = {p}: {report.verdict}, max violation {report.max_violation:.1e}, max eta {eta:.1e}")
    print("   sup norm of u - g at T:", np.abs(traj.fields[-1].values - g).max().round(4))
