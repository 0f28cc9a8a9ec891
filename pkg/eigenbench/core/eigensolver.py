"""
Dense symmetric generalized eigensolver for the pencil (K, M) and grouping of
near-degenerate eigenvalues into clusters.
"""
import logging

import numpy as np
from scipy import linalg, sparse

from eigenbench.errors import FactorizationError, InputError
from eigenbench.models import EigenCluster, EigenPair

logger = logging.getLogger(__name__)


def _dense(matrix):
    dense = matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix, dtype=float)
    return 0.5 * (dense + dense.T)


def _fix_signs(vectors):
    """Make the largest-magnitude coefficient of every column positive."""
    if vectors.size == 0:
        return vectors
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _eigh(K, M, **subset):
    try:
        values, vectors = linalg.eigh(_dense(K), _dense(M), **subset)
    except linalg.LinAlgError as error:
        raise FactorizationError(f"mass matrix is not positive definite: {error}")
    return [EigenPair(float(v), vec) for v, vec in zip(values, _fix_signs(vectors).T)]


def solve_gevp(K, M, k):
    """
    The k smallest eigenpairs of K phi = lambda M phi.

    Args:
        K: Stiffness matrix (sparse or dense), symmetric positive semidefinite
        M: Mass matrix, symmetric positive definite
        k: Number of eigenpairs, 1 <= k <= N

    Returns:
        List of EigenPair in ascending order with M-orthonormal vectors
    """
    n = K.shape[0]
    if int(k) != k or not 1 <= k <= n:
        raise InputError(f"eigenpair count must lie in [1, {n}], got {k!r}", module="eigensolver")
    pairs = _eigh(K, M, subset_by_index=[0, int(k) - 1])
    logger.debug("solved %d x %d pencil: lowest %s", n, n, [round(p.value, 6) for p in pairs[:6]])
    return pairs


def solve_window(K, M, lo, hi):
    """All eigenpairs with lo < lambda <= hi, ascending."""
    if not lo < hi:
        raise InputError(f"empty eigenvalue window ({lo!r}, {hi!r}]", module="eigensolver")
    return _eigh(K, M, subset_by_value=(lo, hi))


def orthonormalize(basis, M):
    """Re-orthonormalize columns in the M inner product (Cholesky of the Gram matrix)."""
    gram = basis.T @ (M @ basis)
    try:
        factor = linalg.cholesky(0.5 * (gram + gram.T), lower=True)
    except linalg.LinAlgError as error:
        raise FactorizationError(f"cluster basis is rank deficient in the M inner product: {error}")
    return linalg.solve_triangular(factor, basis.T, lower=True).T


def cluster(eigenpairs, cluster_tol, M=None):
    """
    Group ascending eigenpairs into maximal runs of nearby eigenvalues.

    A new cluster starts where lambda_k - lambda_{k-1} >= cluster_tol * max(1, |lambda_{k-1}|).
    When M is given every cluster basis is re-orthonormalized against it.
    """
    if not cluster_tol > 0:
        raise InputError(f"cluster tolerance must be positive, got {cluster_tol!r}", module="eigensolver")
    runs, current = [], []
    for index, pair in enumerate(eigenpairs):
        if current and pair.value - eigenpairs[current[-1]].value >= cluster_tol * max(
            1.0, abs(eigenpairs[current[-1]].value)
        ):
            runs.append(current)
            current = []
        current.append(index)
    if current:
        runs.append(current)

    clusters = []
    for run in runs:
        values = np.array([eigenpairs[i].value for i in run])
        basis = np.column_stack([eigenpairs[i].vector for i in run])
        if M is not None:
            basis = orthonormalize(basis, M)
        clusters.append(EigenCluster(float(values.mean()), values, basis, tuple(run), cluster_tol))
    logger.info("clusters: %s", [(round(c.mean, 6), c.multiplicity) for c in clusters])
    return clusters


def lowest_clusters(K, M, k, cluster_tol):
    """
    Complete clusters covering at least the k smallest eigenpairs.

    The pencil is solved past k until the last kept cluster is separated from the
    next eigenvalue, so no cluster is cut at the count.

    Returns:
        (pairs, clusters) with pairs restricted to the kept clusters
    """
    n = K.shape[0]
    if int(k) != k or not 1 <= k <= n:
        raise InputError(f"eigenpair count must lie in [1, {n}], got {k!r}", module="eigensolver")
    count = min(int(k) + 1, n)
    while True:
        pairs = solve_gevp(K, M, count)
        clusters = cluster(pairs, cluster_tol, M)
        if count == n:
            return pairs, clusters
        # the last cluster may continue past the count
        complete = clusters[:-1]
        covered = sum(c.multiplicity for c in complete)
        if covered >= k:
            return pairs[:covered], complete
        count = min(n, count + max(2, int(k) // 2))


def select_cluster(clusters, index=None, near=None):
    """Pick a cluster by position in the list or by the mean closest to `near`."""
    if (index is None) == (near is None):
        raise InputError("select a cluster either by index or by eigenvalue", module="eigensolver")
    if index is not None:
        if not 0 <= index < len(clusters):
            raise InputError(f"cluster index {index} out of range 0..{len(clusters) - 1}", module="eigensolver")
        return clusters[index]
    return min(clusters, key=lambda c: abs(c.mean - near))


def simplicity_report(eigenpairs, gap_tol, lam_max):
    """
    Whether every eigenvalue up to lam_max is simple.

    Returns:
        Dict with keys simple, count, min_relative_gap and the position of the
        closest pair (None when fewer than two eigenvalues qualify)
    """
    values = np.array([p.value for p in eigenpairs if p.value <= lam_max])
    if values.size < 2:
        return {"simple": True, "count": int(values.size), "min_relative_gap": float("inf"), "closest": None}
    gaps = np.diff(values) / np.maximum(1.0, np.abs(values[:-1]))
    closest = int(np.argmin(gaps))
    return {
        "simple": bool(gaps[closest] > gap_tol),
        "count": int(values.size),
        "min_relative_gap": float(gaps[closest]),
        "closest": closest,
    }


def spectrum_rows(clusters):
    """Rows (index, eigenvalue, cluster id, multiplicity) for spectrum.csv."""
    rows = []
    for cluster_id, item in enumerate(clusters):
        for index, value in zip(item.indices, item.values):
            rows.append({
                "index": int(index),
                "eigenvalue": float(value),
                "cluster": cluster_id,
                "multiplicity": item.multiplicity,
            })
    return rows
