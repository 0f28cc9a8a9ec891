"""
Piecewise-linear assembly of the Laplace-Neumann pencil (K, M) for a metric
field, and of its first derivatives along g(t) = g0 + t T.

K discretizes -Delta_g. The Neumann condition is natural: no boundary rows are
touched. Integrals use the 3-point edge-midpoint rule with the metric
interpolated barycentrically from the vertex values.
"""
import csv
import logging

import numpy as np
from scipy import sparse

from eigenbench.core.metric import first_non_spd, inverse, trace, volume_density
from eigenbench.errors import AssemblyError, InputError
from eigenbench.models import components_to_matrices

logger = logging.getLogger(__name__)

# barycentric coordinates of the edge midpoints, one row per quadrature point
QUADRATURE = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])


def hat_gradients(mesh):
    """Constant gradients of the three hat functions per triangle, shape (F, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    twice_area = 2.0 * mesh.signed_areas
    grads = np.empty((mesh.n_triangles, 3, 2))
    for k in range(3):
        a, b = p[:, (k + 1) % 3], p[:, (k + 2) % 3]
        grads[:, k, 0] = (a[:, 1] - b[:, 1]) / twice_area
        grads[:, k, 1] = (b[:, 0] - a[:, 0]) / twice_area
    return grads


def quadrature_weights(mesh):
    """Chart-area weights of the edge-midpoint rule, shape (F, 3)."""
    return np.repeat(mesh.signed_areas[:, None] / 3.0, 3, axis=1)


def at_quadrature(mesh, values):
    """Interpolate per-vertex values (N, ...) to the quadrature points, shape (F, 3, ...)."""
    values = np.asarray(values, dtype=float)
    return np.einsum("qk,fk...->fq...", QUADRATURE, values[mesh.triangles])


def metric_at_quadrature(mesh, g):
    """2x2 metric matrices at the quadrature points; AssemblyError on a non-SPD point."""
    if len(g) != mesh.n_vertices:
        raise InputError(f"metric has {len(g)} vertices, mesh has {mesh.n_vertices}", module="fem")
    components = at_quadrature(mesh, g.components)
    bad = first_non_spd(components.reshape(-1, 3))
    if bad is not None:
        raise AssemblyError(bad // 3)
    return components_to_matrices(components)


def _scatter(mesh, local):
    """Sum (F, 3, 3) element matrices into a sparse N x N matrix."""
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.n_vertices
    matrix = sparse.csc_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    return ((matrix + matrix.T) * 0.5).tocsc()


def _stiffness_from_coefficient(mesh, coefficient):
    """K_e[a, b] = grad psi_a . C_e grad psi_b with C_e the integrated 2x2 coefficient."""
    grads = hat_gradients(mesh)
    return _scatter(mesh, np.einsum("fad,fde,fbe->fab", grads, coefficient, grads))


def _mass_from_density(mesh, density):
    """M_e[a, b] = sum_q w_q rho_q psi_a(q) psi_b(q)."""
    weighted = quadrature_weights(mesh) * density
    return _scatter(mesh, np.einsum("fq,qa,qb->fab", weighted, QUADRATURE, QUADRATURE))


def assemble_stiffness(mesh, g):
    """K_ab = int (g^{-1} grad psi_a) . grad psi_b sqrt(det g), sparse CSC."""
    gq = metric_at_quadrature(mesh, g)
    w = quadrature_weights(mesh)
    coefficient = np.einsum("fq,fq,fqij->fij", w, volume_density(gq), inverse(gq))
    K = _stiffness_from_coefficient(mesh, coefficient)
    logger.debug("assembled stiffness: %d x %d, nnz=%d", K.shape[0], K.shape[1], K.nnz)
    return K


def assemble_mass(mesh, g):
    """Mass matrix M_ab = int psi_a psi_b sqrt(det g)."""
    gq = metric_at_quadrature(mesh, g)
    return _mass_from_density(mesh, volume_density(gq))


def assemble_derivatives(mesh, g0, T):
    """
    d/dt at t = 0 of (K, M) assembled for g(t) = g0 + t T.

    Uses d/dt g^{-1} = -g^{-1} T g^{-1} and d/dt sqrt(det g) = 1/2 tr(g^{-1} T) sqrt(det g).

    Returns:
        (K', M') as symmetric scipy.sparse CSC matrices
    """
    if len(T) != mesh.n_vertices:
        raise InputError(f"perturbation has {len(T)} vertices, mesh has {mesh.n_vertices}", module="fem")
    gq = metric_at_quadrature(mesh, g0)
    Tq = components_to_matrices(at_quadrature(mesh, T.components))
    ginv = inverse(gq)
    density = volume_density(gq)
    half_trace = 0.5 * trace(Tq, gq)
    w = quadrature_weights(mesh)

    velocity = half_trace[..., None, None] * ginv - ginv @ Tq @ ginv
    coefficient = np.einsum("fq,fq,fqij->fij", w, density, velocity)
    return _stiffness_from_coefficient(mesh, coefficient), _mass_from_density(mesh, half_trace * density)


def assemble_cotangent_stiffness(mesh):
    """Classical cotangent-weight stiffness matrix of the Euclidean triangulation."""
    p = mesh.vertices[mesh.triangles]
    tri = mesh.triangles
    rows, cols, data = [], [], []
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        u, v = p[:, i] - p[:, k], p[:, j] - p[:, k]
        cot = np.einsum("fd,fd->f", u, v) / np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        half = 0.5 * cot
        rows += [tri[:, i], tri[:, j], tri[:, i], tri[:, j]]
        cols += [tri[:, j], tri[:, i], tri[:, i], tri[:, j]]
        data += [-half, -half, half, half]
    n = mesh.n_vertices
    return sparse.csc_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def lumped_mass(mesh, g):
    """Row sums of the mass matrix, one positive weight per vertex."""
    return np.asarray(assemble_mass(mesh, g).sum(axis=1)).ravel()


def export_coo(matrix, path):
    """Write the nonzeros of a sparse matrix as (row, col, value) CSV rows."""
    coo = sparse.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["row", "col", "value"])
        for k in order:
            writer.writerow([int(coo.row[k]), int(coo.col[k]), repr(float(coo.data[k]))])
