"""
chplab: convex hull property laboratory.

Metric projections onto convex polytopes, P1 finite element solvers for
elliptic systems ``-div((metric (x) a) grad u) = 0`` and for the parabolic
system ``du/dt - div(a0 (I (x) a) grad u) + b . grad u + c u = 0``
(p-Laplace included), and a verifier measuring how far discrete solutions
stray from the convex hull of their boundary values.
"""
from .geometry import (
    ConvexPolytope,
    MetricMatrix,
    ProjectionResult,
    GeometryError,
    convex_hull,
    metric_project,
    violation_distance,
    violation_distances,
)
from .discretization import (
    Mesh,
    NodalField,
    Trajectory,
    interval_mesh,
    rect_mesh,
    element_gradient,
    project_field,
    field_to_csv,
    field_from_csv,
)
from .elliptic import EllipticCoefficients, assemble, solve_dirichlet, solve_scalar_mp
from .parabolic import (
    ParabolicCoefficients,
    ParabolicScenario,
    step,
    run,
    p_laplace_preset,
    heat_preset,
    counterexample_preset,
    dump_trajectory,
)
from .verifier import (
    CHP_TOL,
    ChpReport,
    boundary_hull_elliptic,
    boundary_hull_parabolic,
    verify,
    eta_series,
)

__version__ = "0.1.0"
