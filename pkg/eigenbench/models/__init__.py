from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from eigenbench.errors import InputError


def _frozen_array(values, dtype):
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulated planar chart of a compact oriented surface with boundary.

    Triangles are counterclockwise. A boundary edge (a, b) is stored with the
    orientation it has in its only triangle, so the domain lies to its left.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen_array(self.vertices, float).reshape(-1, 2))
        object.__setattr__(self, "triangles", _frozen_array(self.triangles, np.int64).reshape(-1, 3))
        object.__setattr__(
            self, "boundary_edges", _frozen_array(self.boundary_edges, np.int64).reshape(-1, 2)
        )

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def edges(self):
        """Unique undirected edges as sorted index pairs."""
        tri = self.triangles
        pairs = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        return np.unique(np.sort(pairs, axis=1), axis=0)

    @property
    def signed_areas(self):
        p0, p1, p2 = (self.vertices[self.triangles[:, k]] for k in range(3))
        e1, e2 = p1 - p0, p2 - p0
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def euler_characteristic(self):
        return self.n_vertices - self.edges.shape[0] + self.n_triangles

    @property
    def mesh_size(self):
        """Longest edge length in chart coordinates."""
        e = self.edges
        return float(np.max(np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)))

    def boundary_loops(self):
        """Split boundary edges into closed loops of vertex indices."""
        successor = {int(a): int(b) for a, b in self.boundary_edges}
        loops, seen = [], set()
        for start in sorted(successor):
            if start in seen:
                continue
            loop, v = [], start
            while v not in seen:
                seen.add(v)
                loop.append(v)
                v = successor[v]
            loops.append(loop)
        return loops

    def to_dict(self):
        return {
            "vertices": self.n_vertices,
            "triangles": self.n_triangles,
            "boundary_edges": int(self.boundary_edges.shape[0]),
            "euler_characteristic": int(self.euler_characteristic),
        }


@dataclass(frozen=True, eq=False)
class MetricField:
    """Per-vertex symmetric positive definite 2x2 matrices stored as (g11, g12, g22)."""

    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", _frozen_array(self.components, float).reshape(-1, 3))

    @property
    def matrices(self):
        return components_to_matrices(self.components)

    def __len__(self):
        return self.components.shape[0]


@dataclass(frozen=True, eq=False)
class SymTensorField:
    """Per-vertex symmetric 2x2 tensors stored as (H11, H12, H22)."""

    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", _frozen_array(self.components, float).reshape(-1, 3))

    @property
    def matrices(self):
        return components_to_matrices(self.components)

    def __len__(self):
        return self.components.shape[0]

    def scaled(self, factor):
        return SymTensorField(self.components * factor)


@dataclass(frozen=True, eq=False)
class ScalarField:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, float).reshape(-1))

    def __len__(self):
        return self.values.shape[0]


def components_to_matrices(components):
    components = np.asarray(components, dtype=float)
    mats = np.empty(components.shape[:-1] + (2, 2))
    mats[..., 0, 0] = components[..., 0]
    mats[..., 0, 1] = components[..., 1]
    mats[..., 1, 0] = components[..., 1]
    mats[..., 1, 1] = components[..., 2]
    return mats


def matrices_to_components(matrices):
    matrices = np.asarray(matrices, dtype=float)
    return np.stack(
        [matrices[..., 0, 0], 0.5 * (matrices[..., 0, 1] + matrices[..., 1, 0]), matrices[..., 1, 1]],
        axis=-1,
    )


@dataclass(frozen=True, eq=False)
class EigenPair:
    value: float
    vector: np.ndarray


@dataclass(frozen=True, eq=False)
class EigenCluster:
    """A group of nearby discrete eigenvalues modelling one multiple eigenvalue."""

    mean: float
    values: np.ndarray
    basis: np.ndarray  # N x m, M-orthonormal columns
    indices: tuple
    cluster_tol: float

    @property
    def multiplicity(self):
        return self.basis.shape[1]

    def rotated(self, q):
        """Same cluster with basis Phi @ q (q orthogonal m x m)."""
        return EigenCluster(self.mean, self.values, self.basis @ q, self.indices, self.cluster_tol)

    def to_dict(self):
        return {
            "mean": float(self.mean),
            "multiplicity": int(self.multiplicity),
            "values": [float(v) for v in self.values],
            "indices": [int(i) for i in self.indices],
        }


@dataclass(frozen=True, eq=False)
class BranchMatrix:
    """Symmetric m x m first-variation matrix; its eigenvalues are the branch slopes."""

    matrix: np.ndarray
    provenance: Literal["geometric", "discrete-oracle"]

    @property
    def slopes(self):
        return np.linalg.eigvalsh(self.matrix)

    @property
    def min_gap(self):
        slopes = self.slopes
        return float(np.min(np.diff(slopes))) if slopes.size > 1 else float("inf")


@dataclass(frozen=True, eq=False)
class BranchCurves:
    t: np.ndarray
    values: np.ndarray  # len(t) x m, column i is branch i
    overlaps: np.ndarray  # len(t) x m, overlap with the matched branch at the neighbouring step

    @property
    def multiplicity(self):
        return self.values.shape[1]

    def slopes(self):
        """Three-point slopes at 0 from the t values closest to 0 on each side; exact for quadratics."""
        zero = np.flatnonzero(self.t == 0.0)
        left, right = self.t[self.t < 0], self.t[self.t > 0]
        if zero.size == 0 or left.size == 0 or right.size == 0:
            raise InputError("slopes need t = 0 and at least one t value on each side of it", module="perturbation")
        a, b = -float(left.max()), float(right.min())
        f0 = self.values[zero[0]]
        fa = self.values[np.flatnonzero(self.t == -a)[0]]
        fb = self.values[np.flatnonzero(self.t == b)[0]]
        return (a * a * fb - b * b * fa + (b * b - a * a) * f0) / (a * b * (a + b))

    def gaps(self):
        """Smallest distance between branches at every t."""
        ordered = np.sort(self.values, axis=1)
        if ordered.shape[1] < 2:
            return np.full(ordered.shape[0], np.inf)
        return np.min(np.diff(ordered, axis=1), axis=1)


@dataclass(frozen=True, eq=False)
class ResidualTensor:
    field: SymTensorField
    norm: float
    pair: tuple


@dataclass(frozen=True, eq=False)
class ReducedMatrix:
    matrix: np.ndarray
    asymmetry: float
    t: float
    lam: float


@dataclass(frozen=True)
class GenericityReport:
    split_fraction: float
    samples: int
    confirmed_fraction: float
    rows: tuple = field(default=(), repr=False)
