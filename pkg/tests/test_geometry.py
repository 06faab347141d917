import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from chplab.geometry import (
    ConvexPolytope,
    GeometryError,
    MetricMatrix,
    convex_hull,
    metric_project,
    min_norm_point,
    violation_distance,
    violation_distances,
)

from helpers import brute_force_distance, random_spd


def as_set(vertices):
    return {tuple(np.round(v, 12)) for v in np.asarray(vertices)}


# --- convex_hull -----------------------------------------------------------

def test_hull_drops_interior_point():
    K = convex_hull([(0, 0), (1, 0), (0, 1), (0.25, 0.25)])
    assert as_set(K.vertices) == {(0, 0), (1, 0), (0, 1)}


def test_hull_of_diagonal_samples_is_segment():
    s = np.round(np.arange(11) * 0.1, 12)
    K = convex_hull(np.column_stack([s, s]))
    assert as_set(K.vertices) == {(0, 0), (1, 1)}


def test_hull_of_singleton_1d():
    K = convex_hull([3.0])
    assert K.vertices.tolist() == [[3.0]]


def test_hull_1d_is_interval():
    K = convex_hull([[2.0], [-1.0], [0.5], [2.0]])
    assert K.vertices.ravel().tolist() == [-1.0, 2.0]


def test_hull_2d_counterclockwise(rng):
    P = rng.normal(size=(40, 2))
    V = convex_hull(P).vertices
    area = 0.5 * np.sum(V[:, 0] * np.roll(V[:, 1], -1) - np.roll(V[:, 0], -1) * V[:, 1])
    assert area > 0
    # strictly convex turn at every vertex
    e1 = np.roll(V, -1, axis=0) - V
    e0 = V - np.roll(V, 1, axis=0)
    assert np.all(e0[:, 0] * e1[:, 1] - e0[:, 1] * e1[:, 0] > 0)


@pytest.mark.parametrize("N", [3, 4, 5])
def test_hull_minimal_and_covering(rng, N):
    P = rng.normal(size=(25, N))
    K = convex_hull(P)
    assert max(violation_distance(p, K) for p in P) <= 1e-10
    for i in range(len(K)):
        others = ConvexPolytope(np.delete(K.vertices, i, axis=0))
        assert violation_distance(K.vertices[i], others) > 1e-10


def test_hull_3d_cube_with_interior_points(rng):
    cube = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)], dtype=float)
    P = np.vstack([cube, rng.uniform(0.1, 0.9, size=(20, 3)), [[0.5, 0.5, 0.0]]])
    assert as_set(convex_hull(P).vertices) == as_set(cube)


def test_hull_degenerate_coplanar_in_3d():
    P = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0], [0.5, 0.5, 0]]
    assert len(convex_hull(P)) == 4


def test_hull_errors():
    with pytest.raises(GeometryError, match="empty point set"):
        convex_hull([])
    with pytest.raises(GeometryError, match="invalid point"):
        convex_hull([[0.0, np.nan]])
    with pytest.raises(GeometryError, match="invalid point"):
        convex_hull([[0.0, np.inf], [1.0, 1.0]])
    with pytest.raises(GeometryError):
        convex_hull(np.zeros((2, 9)))


# --- metric -----------------------------------------------------------------

def test_metric_rejects_nonsymmetric_and_indefinite():
    with pytest.raises(GeometryError, match="symmetric"):
        MetricMatrix([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(GeometryError, match="positive definite"):
        MetricMatrix([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(GeometryError, match="positive definite"):
        MetricMatrix([[1.0, 0.0], [0.0, 1e-14]])


def test_metric_factor_and_gamma():
    A = MetricMatrix([[4.0, 1.0], [1.0, 3.0]])
    L = A.factor
    assert np.allclose(L @ L.T, A.entries)
    assert A.gamma == pytest.approx(np.linalg.eigvalsh(A.entries)[0])
    v = np.array([1.0, -2.0])
    assert A.norm(v) == pytest.approx(np.linalg.norm(A.transform(v)))


def test_values_are_read_only():
    K = convex_hull([[0, 0], [1, 1]])
    with pytest.raises(ValueError):
        K.vertices[0, 0] = 5.0


# --- metric_project -----------------------------------------------------------

def test_project_onto_segment_euclidean():
    # closed form: minimize (s-2)^2 + s^2 over [0, 1] -> s = 1
    r = metric_project([2.0, 0.0], convex_hull([[0, 0], [1, 1]]), MetricMatrix.identity(2))
    assert np.allclose(r.point, [1.0, 1.0])
    assert r.distance == pytest.approx(np.sqrt(2.0), abs=1e-12)


def test_project_weighted_slab():
    K = convex_hull([[-10, 0], [10, 0], [10, -10], [-10, -10]])
    r = metric_project([1.0, 1.0], K, MetricMatrix(np.diag([1.0, 4.0])))
    assert np.allclose(r.point, [1.0, 0.0], atol=1e-12)
    assert r.distance == pytest.approx(2.0, abs=1e-12)


def test_project_vertex_is_fixed(rng):
    K = convex_hull(rng.normal(size=(8, 3)))
    A = MetricMatrix(random_spd(rng, 3))
    for v in K.vertices:
        r = metric_project(v, K, A)
        assert np.array_equal(r.point, v)
        assert r.distance == 0.0


def test_projection_weights_reproduce_point(rng):
    for N in (1, 2, 3, 5):
        K = convex_hull(rng.normal(size=(10, N)))
        r = metric_project(rng.normal(size=N) * 3, K, MetricMatrix(random_spd(rng, N)))
        assert np.all(r.weights >= 0)
        assert r.weights.sum() == pytest.approx(1.0, abs=1e-10)
        assert np.allclose(r.weights @ K.vertices, r.point, atol=1e-10)


def test_project_dimension_mismatch():
    K = convex_hull([[0, 0], [1, 1]])
    with pytest.raises(GeometryError, match="dimension mismatch"):
        metric_project([1.0, 2.0, 3.0], K)
    with pytest.raises(GeometryError, match="dimension mismatch"):
        metric_project([1.0, 2.0], K, MetricMatrix.identity(3))


def test_min_norm_point_tie_break_lowest_index():
    w = min_norm_point(np.array([[1.0, 0.0], [1.0, 0.0], [2.0, 0.0]]))
    assert w.tolist() == [1.0, 0.0, 0.0]


def test_min_norm_point_iteration_cap():
    P = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 3.0]])
    with pytest.raises(GeometryError, match="did not converge"):
        min_norm_point(P, max_iter=0)


# --- violation distance -------------------------------------------------------

def test_violation_distance_examples():
    K = convex_hull([[0, 0], [1, 1]])
    x = np.array([0.3679, 0.1353])
    assert violation_distance(x, K) == pytest.approx(abs(x[0] - x[1]) / np.sqrt(2), abs=1e-12)
    assert violation_distance(x, K) == pytest.approx(0.1645, abs=1e-4)
    assert violation_distance([0.5, 0.5], K) == pytest.approx(0.0, abs=1e-15)
    assert violation_distance([-1.0], convex_hull([[0.0], [2.0]])) == 1.0


@pytest.mark.parametrize("N", [1, 2, 3])
def test_vectorized_distances_match_projection(rng, N):
    for m in (1, 2, 3, 7):
        K = convex_hull(rng.normal(size=(m, N)))
        X = rng.normal(size=(50, N)) * 2
        fast = violation_distances(X, K)
        slow = np.array([metric_project(x, K).distance for x in X])
        assert np.allclose(fast, slow, atol=1e-10)


# --- invariants -----------------------------------------------------------------

@st.composite
def projection_case(draw):
    N = draw(st.sampled_from([1, 2, 3, 5]))
    m = draw(st.integers(1, 9))
    coords = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
    P = draw(arrays(float, (m, N), elements=coords))
    B = draw(arrays(float, (N, N), elements=st.floats(-2, 2)))
    A = B @ B.T + 0.2 * np.eye(N)
    x = draw(arrays(float, (N,), elements=coords))
    y = draw(arrays(float, (N,), elements=coords))
    return convex_hull(P), MetricMatrix(A), x, y


@given(projection_case())
def test_variational_inequality(case):
    K, A, x, _ = case
    p = metric_project(x, K, A).point
    scale = 1.0 + A.norm(x - p) * max(A.norm(z - p) for z in K.vertices)
    for z in K.vertices:
        assert A.inner(x - p, z - p) <= 1e-9 * scale


@given(projection_case())
def test_monotone_and_nonexpansive(case):
    K, A, x, y = case
    px, py = metric_project(x, K, A).point, metric_project(y, K, A).point
    scale = 1.0 + A.norm(x - y) ** 2
    assert A.inner(x - y, px - py) >= A.norm(px - py) ** 2 - 1e-9 * scale
    assert A.norm(px - py) <= A.norm(x - y) + 1e-9 * np.sqrt(scale)


@given(projection_case())
def test_idempotent(case):
    K, A, x, _ = case
    p = metric_project(x, K, A).point
    assert np.allclose(metric_project(p, K, A).point, p, atol=1e-9 * (1 + np.abs(p).max()))


@given(projection_case())
def test_metric_transform_consistency(case):
    K, A, x, _ = case
    L = A.factor
    p = metric_project(x, K, A).point
    Kt = ConvexPolytope(K.vertices @ L)
    pt = metric_project(x @ L, Kt).point
    assert np.allclose(pt, p @ L, atol=1e-9 * (1 + np.abs(pt).max()))


def test_nodal_orthogonality_on_supporting_face(rng):
    # equality in the variational inequality on every vertex carrying weight
    for N in (2, 3, 5):
        for _ in range(50):
            K = convex_hull(rng.normal(size=(rng.integers(2, 10), N)))
            A = MetricMatrix(random_spd(rng, N))
            x = rng.normal(size=N) * 3
            r = metric_project(x, K, A)
            for z in K.vertices[r.weights > 1e-12]:
                assert abs(A.inner(x - r.point, z - r.point)) <= 1e-9 * (1 + A.norm(x) ** 2)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_brute_force_oracle(rng, m):
    for _ in range(8):
        V = rng.uniform(0, 1, size=(m, 2))
        A = random_spd(rng, 2, cond=4.0)
        x = rng.uniform(-1, 2, size=2)
        r = metric_project(x, convex_hull(V), MetricMatrix(A))
        assert r.distance == pytest.approx(brute_force_distance(x, V, A), abs=2e-3)
