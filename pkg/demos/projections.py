"""
Projections onto a polytope in a weighted norm
==============================================

A convex hull is stored as its vertex list. Projecting in the norm
``|v|_A = sqrt(v . A v)`` reduces to a minimum-norm-point problem.
"""
import numpy as np

from chplab import MetricMatrix, convex_hull, metric_project

# a triangle; the interior point is dropped
K = convex_hull([(0, 0), (1, 0), (0, 1), (0.25, 0.25)])
print("vertices:\n", K.vertices)

# Euclidean projection of a point to the right of the hypotenuse
x = np.array([1.0, 1.0])
r = metric_project(x, K)
print("euclidean:", r.point, "distance", round(r.distance, 6))

# stretching the second axis moves the projection along the hypotenuse
A = MetricMatrix([[1.0, 0.0], [0.0, 9.0]])
rA = metric_project(x, K, A)
print("weighted: ", rA.point, "distance", round(rA.distance, 6))

# the weights are the convex combination of vertices that produces the point
print("weights:", rA.weights, "sum", rA.weights.sum())

# variational inequality: <x - Px, z - Px>_A <= 0 for every vertex z
print("max <x - Px, z - Px>_A:", max(A.inner(x - rA.point, z - rA.point) for z in K.vertices))
