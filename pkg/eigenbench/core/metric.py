"""
Metric and symmetric-tensor fields on a mesh, and the pointwise tensor algebra
used by the Hadamard formula: the (0,2) inner product, traces, index raising and
the volume density.

Pointwise helpers accept a single 2x2 matrix or a stack of them (shape (..., 2, 2)).
"""
import csv
import logging

import numpy as np

from eigenbench.errors import InputError, MetricError
from eigenbench.models import MetricField, ScalarField, SymTensorField, components_to_matrices

logger = logging.getLogger(__name__)

RHO_PRESETS = {
    "constant": lambda x, y: np.ones_like(x),
    "linear_x": lambda x, y: x,
    "bump": lambda x, y: np.exp(-((x - 0.5) ** 2 + (y - 0.5) ** 2) / 0.1),
    "saddle": lambda x, y: (x - 0.5) * (y - 0.5),
}


def first_non_spd(components):
    """Index of the first entry that is not positive definite, or None."""
    components = np.asarray(components, dtype=float)
    det = components[:, 0] * components[:, 2] - components[:, 1] ** 2
    bad = np.flatnonzero(~((components[:, 0] > 0.0) & (det > 0.0)) | ~np.all(np.isfinite(components), axis=1))
    return int(bad[0]) if bad.size else None


def make_metric(components, t=0.0):
    vertex = first_non_spd(components)
    if vertex is not None:
        raise MetricError(vertex, t)
    return MetricField(components)


def metric_at_t(g0, T, t):
    """
    Linear metric deformation g(t) = g0 + t T.

    Raises:
        MetricError naming the first vertex where positive definiteness is lost
    """
    if len(g0) != len(T):
        raise InputError(f"metric has {len(g0)} vertices, perturbation has {len(T)}", module="metric")
    return make_metric(g0.components + t * T.components, t=t)


def _inverse(g):
    g = np.asarray(g, dtype=float)
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    inv = np.empty_like(g)
    inv[..., 0, 0] = g[..., 1, 1] / det
    inv[..., 1, 1] = g[..., 0, 0] / det
    inv[..., 0, 1] = -g[..., 0, 1] / det
    inv[..., 1, 0] = -g[..., 1, 0] / det
    return inv


def inverse(g):
    return _inverse(g)


def inner02(T, S, g):
    """<T, S> = g^{ik} g^{jl} T_ij S_kl."""
    ginv = _inverse(g)
    return np.einsum("...ik,...jl,...ij,...kl->...", ginv, ginv, np.asarray(T, float), np.asarray(S, float))


def trace(H, g):
    """g^{ij} H_ij for matrices."""
    return np.einsum("...ij,...ij->...", _inverse(g), np.asarray(H, float))


def trace_h(H, g):
    """h = <H, g> per vertex."""
    if len(H) != len(g):
        raise InputError(f"tensor has {len(H)} vertices, metric has {len(g)}", module="metric")
    return ScalarField(trace(H.matrices, g.matrices))


def sharp(df, g):
    """Raise an index: the vector v with g v = df."""
    return np.linalg.solve(np.asarray(g, float), np.asarray(df, float)[..., None])[..., 0]


def volume_density(g):
    """sqrt(det g), the chart density of dM."""
    g = np.asarray(g, dtype=float)
    return np.sqrt(g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0])


class TrigSeries:
    """
    Smooth symmetric-tensor valued function on the chart,

        H_c(x, y) = sum_{p,q <= cap} a_c[p, q] cos(p pi x) cos(q pi y),   c in (11, 12, 22)

    Every coefficient lies in [-amplitude, amplitude] and the absolute
    coefficient sum per component is at most amplitude, so entries are
    bounded by amplitude as well.
    """

    def __init__(self, coefficients):
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.frequency_cap = self.coefficients.shape[1] - 1

    @classmethod
    def random(cls, seed, amplitude, frequency_cap=2):
        if amplitude < 0:
            raise InputError(f"amplitude must be non-negative, got {amplitude!r}", module="metric")
        if frequency_cap < 0:
            raise InputError(f"frequency cap must be non-negative, got {frequency_cap!r}", module="metric")
        rng = np.random.default_rng(seed)
        size = frequency_cap + 1
        unit = rng.uniform(-1.0, 1.0, size=(3, size, size))
        return cls(amplitude * unit / (size * size))

    def __call__(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        p = np.arange(self.frequency_cap + 1)
        cx = np.cos(np.pi * np.multiply.outer(x, p))
        cy = np.cos(np.pi * np.multiply.outer(y, p))
        return np.einsum("...p,...q,cpq->...c", cx, cy, self.coefficients)

    def matrix(self, x, y):
        return components_to_matrices(self(x, y))

    def sample(self, mesh):
        return SymTensorField(self(mesh.vertices[:, 0], mesh.vertices[:, 1]))


def random_perturbation(mesh, seed, amplitude, frequency_cap=2):
    """Seeded trigonometric SymTensorField sampled at the mesh vertices."""
    return TrigSeries.random(seed, amplitude, frequency_cap).sample(mesh)


def constant_tensor(mesh, h11, h12, h22):
    return SymTensorField(np.tile([h11, h12, h22], (mesh.n_vertices, 1)))


def identity_metric(mesh):
    return MetricField(np.tile([1.0, 0.0, 1.0], (mesh.n_vertices, 1)))


def diag_metric(mesh, a, b):
    return make_metric(np.tile([a, 0.0, b], (mesh.n_vertices, 1)))


def conformal_metric(mesh, rho="constant", strength=1.0):
    """e^{strength * rho} * I with rho a named preset function."""
    if rho not in RHO_PRESETS:
        raise InputError(f"unknown conformal factor {rho!r}", module="metric")
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    factor = np.exp(strength * RHO_PRESETS[rho](x, y))
    return make_metric(np.column_stack([factor, np.zeros_like(factor), factor]))


def sample_preset(mesh, descriptor):
    """MetricField from a descriptor validated by MetricPresetSchema."""
    preset = descriptor.get("preset", "identity")
    if preset == "identity":
        return identity_metric(mesh)
    if preset == "diag":
        return diag_metric(mesh, descriptor.get("a", 1.0), descriptor.get("b", 1.0))
    if preset == "conformal":
        return conformal_metric(mesh, descriptor.get("rho", "constant"), descriptor.get("strength", 1.0))
    raise InputError(f"unknown metric preset {preset!r}", module="metric")


def export_field_csv(field, path):
    """Write (vertex id, components...) rows for a metric, tensor or scalar field."""
    if isinstance(field, ScalarField):
        header, rows = ["vertex", "value"], field.values[:, None]
    else:
        header, rows = ["vertex", "c11", "c12", "c22"], field.components
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for vertex, row in enumerate(rows.tolist()):
            writer.writerow([vertex] + [repr(float(v)) for v in row])
