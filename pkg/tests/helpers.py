"""Shared oracles and generators for the test suite."""
import numpy as np


def random_spd(rng, n, cond=20.0):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return (Q * np.exp(rng.uniform(0, np.log(cond), n))) @ Q.T


def brute_force_distance(x, vertices, A, step=1e-3):
    """
    Distance from ``x`` to conv(vertices) in R^2 without any optimizer.

    Triangles are searched on a full weight grid; for larger vertex sets a
    barycentric point-in-triangle test decides membership and the distance
    of outside points is a grid search over all vertex-pair segments (the
    nearest point lies on the boundary, which those segments cover).
    """
    V = np.asarray(vertices, dtype=float)
    L = np.linalg.cholesky(A)
    s = np.arange(0.0, 1.0 + step / 2, step)
    m = len(V)
    if m == 1:
        return float(np.linalg.norm((x - V[0]) @ L))
    if m == 3:
        w1, w2 = np.meshgrid(s, s, indexing="ij")
        keep = w1 + w2 <= 1.0 + 1e-12
        W = np.column_stack([1.0 - w1[keep] - w2[keep], w1[keep], w2[keep]])
        return float(np.linalg.norm((x - W @ V) @ L, axis=1).min())
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(j + 1, m):
                T = np.array([V[j] - V[i], V[k] - V[i]]).T
                if abs(np.linalg.det(T)) < 1e-14:
                    continue
                lam = np.linalg.solve(T, x - V[i])
                if lam.min() >= -1e-12 and lam.sum() <= 1 + 1e-12:
                    return 0.0
    best = np.inf
    for i in range(m):
        for j in range(i + 1, m):
            P = V[i] + s[:, None] * (V[j] - V[i])
            best = min(best, np.linalg.norm((x - P) @ L, axis=1).min())
    return float(best)
