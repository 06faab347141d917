"""
P1 finite elements on interval meshes and structured rectangle triangulations.

Node-major storage is used throughout: a field with ``N`` components is an
array of shape ``(n_nodes, N)`` and the global unknown of node ``i``,
component ``alpha`` is ``i * N + alpha``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import ConvexPolytope, MetricMatrix, metric_project, GeometryError

__all__ = [
    "Mesh",
    "NodalField",
    "Trajectory",
    "MeshError",
    "interval_mesh",
    "rect_mesh",
    "element_gradient",
    "element_gradients",
    "project_field",
    "field_to_csv",
    "field_from_csv",
]


class MeshError(ValueError):
    pass


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Simplicial mesh of an interval or rectangle.

    ``basis_gradients[e, k]`` is the (constant) gradient of the hat function
    of local node ``k`` on element ``e``; ``measures[e]`` its length or area.
    """

    nodes: np.ndarray
    elements: np.ndarray
    boundary_nodes: np.ndarray
    extents: tuple | None = None
    divisions: tuple | None = None
    measures: np.ndarray = field(init=False, repr=False)
    basis_gradients: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        elements = np.asarray(self.elements, dtype=np.int64)
        if elements.min() < 0 or elements.max() >= len(nodes):
            raise MeshError("element node index out of range")
        dim = nodes.shape[1]
        if elements.shape[1] != dim + 1:
            raise MeshError(f"{dim}D elements need {dim + 1} nodes")
        X = nodes[elements]  # (n_el, dim+1, dim)
        J = (X[:, 1:, :] - X[:, :1, :]).transpose(0, 2, 1)  # columns are edge vectors
        det = np.linalg.det(J)
        if np.any(det <= 0.0):
            raise MeshError("element with nonpositive measure")
        measures = det / (1.0 if dim == 1 else 2.0)
        # reference gradients of the barycentric hats: -1 for node 0, e_k for node k
        ref = np.vstack([-np.ones(dim), np.eye(dim)])
        grads = ref @ np.linalg.inv(J)  # (n_el, dim+1, dim)
        object.__setattr__(self, "nodes", _frozen(nodes))
        object.__setattr__(self, "elements", _frozen(elements, np.int64))
        object.__setattr__(self, "boundary_nodes", _frozen(np.sort(self.boundary_nodes), np.int64))
        object.__setattr__(self, "measures", _frozen(measures))
        object.__setattr__(self, "basis_gradients", _frozen(grads))

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def midpoints(self) -> np.ndarray:
        return self.nodes[self.elements].mean(axis=1)

    @property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)

    @property
    def h(self) -> float:
        """Largest element edge length."""
        X = self.nodes[self.elements]
        d = X[:, :, None, :] - X[:, None, :, :]
        return float(np.linalg.norm(d, axis=-1).max())

    def lumped_mass(self) -> np.ndarray:
        """Row-sum lumped P1 mass: each element shares its measure equally among its nodes."""
        m = np.zeros(self.n_nodes)
        np.add.at(m, self.elements, (self.measures / (self.dim + 1))[:, None])
        return m


def interval_mesh(a: float, b: float, M: int) -> Mesh:
    if not a < b:
        raise MeshError("a < b required")
    if M < 2:
        raise MeshError(f"at least 2 cells required, got {M}")
    x = np.linspace(a, b, M + 1)
    elements = np.column_stack([np.arange(M), np.arange(1, M + 1)])
    return Mesh(x[:, None], elements, np.array([0, M]), extents=((a, b),), divisions=(M,))


def rect_mesh(x_extent, y_extent, Mx: int, My: int) -> Mesh:
    """
    Structured triangulation of ``x_extent x y_extent``.

    Nodes are numbered row by row (``j * (Mx + 1) + i``); each cell is split
    along the diagonal from its lower-left corner.
    """
    (x0, x1), (y0, y1) = x_extent, y_extent
    if not (x0 < x1 and y0 < y1):
        raise MeshError("degenerate rectangle extents")
    if Mx < 2 or My < 2:
        raise MeshError(f"at least 2 cells per direction required, got {Mx}x{My}")
    xs, ys = np.linspace(x0, x1, Mx + 1), np.linspace(y0, y1, My + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(Mx), np.arange(My))
    ll = (j * (Mx + 1) + i).ravel()
    lr, ul = ll + 1, ll + Mx + 1
    ur = ul + 1
    elements = np.empty((2 * Mx * My, 3), dtype=np.int64)
    elements[0::2] = np.column_stack([ll, lr, ur])
    elements[1::2] = np.column_stack([ll, ur, ul])
    ii, jj = np.meshgrid(np.arange(Mx + 1), np.arange(My + 1))
    on_edge = (ii == 0) | (ii == Mx) | (jj == 0) | (jj == My)
    boundary = np.flatnonzero(on_edge.ravel())
    return Mesh(nodes, elements, boundary, extents=((x0, x1), (y0, y1)), divisions=(Mx, My))


@dataclass(frozen=True, eq=False)
class NodalField:
    """Vector-valued P1 function: ``values[i]`` is the value at node ``i``."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.mesh.n_nodes:
            raise MeshError(f"field has {v.shape[0]} values for {self.mesh.n_nodes} nodes")
        if not np.all(np.isfinite(v)):
            raise MeshError("field has non-finite values")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def from_function(cls, mesh: Mesh, f) -> "NodalField":
        """Interpolate ``f``; it receives the node array of shape ``(n_nodes, dim)``."""
        return cls(mesh, np.asarray(f(mesh.nodes), dtype=float).reshape(mesh.n_nodes, -1))

    @property
    def components(self) -> int:
        return self.values.shape[1]

    @property
    def boundary_values(self) -> np.ndarray:
        return self.values[self.mesh.boundary_nodes]


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    fields: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if len(t) == 0 or len(t) != len(self.fields):
            raise MeshError("trajectory needs one field per time level")
        if np.any(np.diff(t) <= 0.0):
            raise MeshError("trajectory times must be strictly increasing")
        shape = self.fields[0].values.shape
        if any(f.values.shape != shape for f in self.fields):
            raise MeshError("trajectory fields must share one shape")
        object.__setattr__(self, "times", _frozen(t))
        object.__setattr__(self, "fields", tuple(self.fields))

    @property
    def mesh(self) -> Mesh:
        return self.fields[0].mesh

    def __len__(self):
        return len(self.times)

    def stacked(self) -> np.ndarray:
        """Values as an array of shape ``(levels, n_nodes, N)``."""
        return np.stack([f.values for f in self.fields])


def element_gradients(mesh: Mesh, values) -> np.ndarray:
    """Gradients of the P1 interpolant on all elements, shape ``(n_el, N, dim)``."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return np.einsum("ekn,ekd->end", values[mesh.elements], mesh.basis_gradients)


def element_gradient(field: NodalField, element: int) -> np.ndarray:
    """Gradient (``N x dim``) of ``field`` on one element."""
    mesh = field.mesh
    if not 0 <= element < mesh.n_elements:
        raise MeshError(f"element index {element} out of range [0, {mesh.n_elements})")
    return field.values[mesh.elements[element]].T @ mesh.basis_gradients[element]


def project_field(field: NodalField, K: ConvexPolytope, A: MetricMatrix | None = None) -> NodalField:
    """Nodewise projection ``Pi_K^A`` composed with ``field``."""
    if field.components != K.dim_ambient:
        raise GeometryError(
            f"dimension mismatch: field has {field.components} components, hull lives in R^{K.dim_ambient}"
        )
    out = np.array([metric_project(v, K, A).point for v in field.values])
    return NodalField(field.mesh, out)


def field_to_csv(field: NodalField, path=None) -> str:
    """Write ``x[,y],u_1,...,u_N`` rows (17 significant digits); returns the text."""
    mesh = field.mesh
    coords = ["x", "y"][: mesh.dim]
    header = coords + [f"u_{k + 1}" for k in range(field.components)]
    data = np.hstack([mesh.nodes, field.values])
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in data:
        buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def field_from_csv(path) -> NodalField:
    """
    Read a field dump. The mesh is rebuilt from the node coordinates: an
    interval in 1D, a structured rectangle in 2D (node order must match).
    """
    text = Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise MeshError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    dim = 2 if len(header) > 1 and header[1] == "y" else 1
    if header[0] != "x" or len(header) <= dim or any(
        h != f"u_{k + 1}" for k, h in enumerate(header[dim:])
    ):
        raise MeshError(f"{path}:1: bad header {','.join(header)!r}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise MeshError(f"{path}: non-numeric entry ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise MeshError(f"{path}: ragged rows")
    nodes, values = data[:, :dim], data[:, dim:]
    if dim == 1:
        x = nodes[:, 0]
        mesh = Mesh(nodes, np.column_stack([np.arange(len(x) - 1), np.arange(1, len(x))]),
                    np.array([0, len(x) - 1]), extents=((x[0], x[-1]),), divisions=(len(x) - 1,))
    else:
        xs, ys = np.unique(nodes[:, 0]), np.unique(nodes[:, 1])
        mesh = rect_mesh((xs[0], xs[-1]), (ys[0], ys[-1]), len(xs) - 1, len(ys) - 1)
        if not np.allclose(mesh.nodes, nodes, rtol=0, atol=1e-12 * (1 + np.abs(nodes).max())):
            raise MeshError(f"{path}: nodes do not form a structured rectangle grid")
    return NodalField(mesh, values)
