"""
Convex hulls of finite point sets and projections onto them.

Hulls are kept in V-representation (a minimal vertex list). Projections under
an SPD inner product ``<v, w>_A = v . A w`` are reduced to a Euclidean
minimum-norm-point problem over the vertices mapped by ``L^T`` where
``A = L L^T``, which is then solved by Wolfe's active-set method over convex
combinations.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConvexPolytope",
    "MetricMatrix",
    "ProjectionResult",
    "GeometryError",
    "convex_hull",
    "min_norm_point",
    "metric_project",
    "violation_distance",
    "violation_distances",
]

MAX_AMBIENT_DIM = 8
GAP_TOL = 1e-12
MEMBERSHIP_TOL = 1e-10


class GeometryError(ValueError):
    pass


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ConvexPolytope:
    """Closed convex hull of ``vertices`` (shape ``(m, N)``)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if v.size == 0:
            raise GeometryError("empty point set")
        object.__setattr__(self, "vertices", _frozen(v))

    @property
    def dim_ambient(self) -> int:
        return self.vertices.shape[1]

    def __len__(self):
        return len(self.vertices)

    def same_vertices(self, other: "ConvexPolytope", tol: float = 1e-12) -> bool:
        """Vertex sets agree up to ordering, within ``tol``."""
        if other.vertices.shape != self.vertices.shape:
            return False
        d = np.linalg.norm(self.vertices[:, None, :] - other.vertices[None, :, :], axis=-1)
        return bool(np.all(d.min(axis=1) <= tol) and np.all(d.min(axis=0) <= tol))


@dataclass(frozen=True)
class MetricMatrix:
    """SPD matrix defining ``<v, w>_A``; the Cholesky factor is cached."""

    entries: np.ndarray
    factor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.entries, dtype=float))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GeometryError(f"metric must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise GeometryError("metric has non-finite entries")
        amax = np.abs(a).max()
        if amax == 0.0:
            raise GeometryError("metric is not positive definite")
        if np.abs(a - a.T).max() > 1e-12 * amax:
            raise GeometryError("metric is not symmetric")
        a = 0.5 * (a + a.T)
        try:
            L = np.linalg.cholesky(a)
        except np.linalg.LinAlgError:
            raise GeometryError("metric is not positive definite") from None
        if np.any(np.diag(L) ** 2 <= 1e-12 * amax):
            raise GeometryError("metric is not positive definite")
        object.__setattr__(self, "entries", _frozen(a))
        object.__setattr__(self, "factor", _frozen(L))

    @classmethod
    def identity(cls, n: int) -> "MetricMatrix":
        return cls(np.eye(n))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def gamma(self) -> float:
        """Coercivity constant: smallest eigenvalue."""
        return float(np.linalg.eigvalsh(self.entries)[0])

    def inner(self, v, w):
        return np.einsum("...i,ij,...j->...", v, self.entries, w)

    def norm(self, v):
        return np.sqrt(np.maximum(self.inner(v, v), 0.0))

    def transform(self, x):
        """Map ``x -> L^T x`` (rows of ``x`` are points)."""
        return np.asarray(x, dtype=float) @ self.factor


@dataclass(frozen=True)
class ProjectionResult:
    point: np.ndarray
    distance: float
    weights: np.ndarray


def _check_points(points) -> np.ndarray:
    try:
        p = np.asarray(points, dtype=float)
    except (TypeError, ValueError):
        raise GeometryError("invalid point") from None
    if p.size == 0:
        raise GeometryError("empty point set")
    if p.ndim == 1:
        p = p[:, None]
    if p.ndim != 2:
        raise GeometryError("invalid point")
    if not np.all(np.isfinite(p)):
        raise GeometryError("invalid point")
    return p


def _affine_minimizer(Q):
    # min |sum_i v_i q_i| subject to sum_i v_i = 1
    if len(Q) == 1:
        return np.ones(1)
    D = (Q[1:] - Q[0]).T
    mu = np.linalg.lstsq(D, -Q[0], rcond=None)[0]
    return np.concatenate([[1.0 - mu.sum()], mu])


def min_norm_point(points, tol: float = GAP_TOL, max_iter: int | None = None) -> np.ndarray:
    """
    Convex weights of the minimum-norm point of ``conv(points)``.

    Wolfe's method: a corral of active points is grown by the point most
    violating the optimality condition (lowest index on ties) and shrunk by
    line searches whenever the affine minimizer of the corral leaves the
    simplex. Terminates when ``|x|^2 - min_j x . p_j <= tol * max_j |p_j|^2``.

    Parameters
    ----------
    points : array, shape (m, N)
    tol : float
        Relative tolerance on the optimality gap.
    max_iter : int, optional
        Cap on major cycles, default ``10 * m``.

    Returns
    -------
    weights : array, shape (m,)
        Nonnegative, summing to one; ``weights @ points`` is the minimizer.
    """
    P = np.asarray(points, dtype=float)
    m = len(P)
    if max_iter is None:
        max_iter = 10 * m
    sq = np.einsum("ij,ij->i", P, P)
    scale = max(sq.max(), np.finfo(float).tiny)

    S = [int(np.argmin(sq))]
    w = np.ones(1)
    x = P[S[0]].copy()
    gap = x @ x - (P @ x).min()
    for _ in range(max_iter):
        g = P @ x
        j = int(np.argmin(g))
        gap = x @ x - g[j]
        if gap <= tol * scale or j in S:
            break
        S.append(j)
        w = np.append(w, 0.0)
        theta = None
        while True:
            v = _affine_minimizer(P[S])
            if np.all(v > 0.0):
                w = v
                break
            neg = v <= 0.0
            denom = w[neg] - v[neg]
            ratios = np.where(denom > 0.0, w[neg] / np.where(denom > 0.0, denom, 1.0), 0.0)
            theta = ratios.min()
            w = (1.0 - theta) * w + theta * v
            # the point that hit zero in the line search always leaves
            drop = np.flatnonzero(neg)[np.argmin(ratios)]
            w[drop] = 0.0
            keep = w > 0.0
            S = [s for s, k in zip(S, keep) if k]
            w = w[keep]
        if j not in S and theta == 0.0:
            # entering point rejected without progress: numerically optimal
            x = w @ P[S]
            break
        x = w @ P[S]
    else:
        raise GeometryError(
            f"minimum-norm-point did not converge in {max_iter} iterations (gap {gap:.3e})"
        )
    weights = np.zeros(m)
    weights[S] = w / w.sum()
    return weights


def metric_project(x, K: ConvexPolytope, A: MetricMatrix | None = None) -> ProjectionResult:
    """Nearest point of ``K`` to ``x`` in the norm ``|.|_A`` (Euclidean if ``A`` is None)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.shape[0] != K.dim_ambient:
        raise GeometryError(
            f"dimension mismatch: point has {x.shape[-1]} components, hull lives in R^{K.dim_ambient}"
        )
    if A is not None and A.dim != K.dim_ambient:
        raise GeometryError(
            f"dimension mismatch: metric is {A.dim}x{A.dim}, hull lives in R^{K.dim_ambient}"
        )
    shifted = K.vertices - x
    Q = shifted if A is None else A.transform(shifted)
    weights = min_norm_point(Q)
    point = weights @ K.vertices
    dist = float(np.linalg.norm(weights @ Q))
    return ProjectionResult(point=point, distance=dist, weights=weights)


def violation_distance(x, K: ConvexPolytope) -> float:
    """Euclidean distance from ``x`` to ``K``."""
    return metric_project(x, K).distance


def _segment_distances(X, a, b):
    d = b - a
    dd = d @ d
    s = np.clip(((X - a) @ d) / dd, 0.0, 1.0) if dd > 0 else np.zeros(len(X))
    return np.linalg.norm(X - (a + s[:, None] * d), axis=1)


def violation_distances(X, K: ConvexPolytope) -> np.ndarray:
    """
    Euclidean distances of the rows of ``X`` to ``K``.

    Closed-form for ``N <= 2`` (interval, segment or counterclockwise
    polygon); falls back to :func:`metric_project` per row otherwise.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if K.dim_ambient == 1 else X[None, :]
    if X.shape[1] != K.dim_ambient:
        raise GeometryError(
            f"dimension mismatch: points have {X.shape[1]} components, hull lives in R^{K.dim_ambient}"
        )
    V = K.vertices
    if K.dim_ambient == 1:
        lo, hi = V[:, 0].min(), V[:, 0].max()
        return np.maximum(lo - X[:, 0], 0.0) + np.maximum(X[:, 0] - hi, 0.0)
    if K.dim_ambient == 2:
        m = len(V)
        if m == 1:
            return np.linalg.norm(X - V[0], axis=1)
        if m == 2:
            return _segment_distances(X, V[0], V[1])
        dist = np.full(len(X), np.inf)
        inside = np.ones(len(X), dtype=bool)
        for i in range(m):
            a, b = V[i], V[(i + 1) % m]
            e = b - a
            cross = e[0] * (X[:, 1] - a[1]) - e[1] * (X[:, 0] - a[0])
            inside &= cross >= 0.0
            dist = np.minimum(dist, _segment_distances(X, a, b))
        dist[inside] = 0.0
        return dist
    return np.array([metric_project(x, K).distance for x in X])


def _monotone_chain(P):
    P = np.unique(P, axis=0)
    if len(P) <= 2:
        return P
    scale = np.abs(P).max() ** 2 + np.finfo(float).tiny

    def half(points):
        out = []
        for p in points:
            while len(out) >= 2:
                o, a = out[-2], out[-1]
                cross = (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0])
                if cross <= 1e-14 * scale:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(P)
    upper = half(P[::-1])
    hull = lower[:-1] + upper[:-1]
    return np.array(hull)


def _filter_by_membership(P):
    P = np.unique(P, axis=0)
    scale = 1.0 + np.abs(P).max()
    keep = np.ones(len(P), dtype=bool)
    for i in range(len(P)):
        keep[i] = False
        others = P[keep]
        if len(others) == 0:
            keep[i] = True
            continue
        w = min_norm_point(others - P[i])
        if np.linalg.norm(w @ (others - P[i])) > MEMBERSHIP_TOL * scale:
            keep[i] = True
    return P[keep]


def convex_hull(points) -> ConvexPolytope:
    """
    Minimal V-representation of the convex hull of ``points``.

    For ``N = 1`` the result is ``[min, max]`` (one vertex if they coincide),
    for ``N = 2`` the vertices are returned counterclockwise; for larger
    ``N`` non-extreme points are removed by point-in-hull tests.
    """
    P = _check_points(points)
    N = P.shape[1]
    if N > MAX_AMBIENT_DIM:
        raise GeometryError(f"hulls are supported up to R^{MAX_AMBIENT_DIM}, got R^{N}")
    if N == 1:
        lo, hi = P.min(), P.max()
        return ConvexPolytope(np.array([[lo]]) if lo == hi else np.array([[lo], [hi]]))
    if N == 2:
        return ConvexPolytope(_monotone_chain(P))
    return ConvexPolytope(_filter_by_membership(P))
