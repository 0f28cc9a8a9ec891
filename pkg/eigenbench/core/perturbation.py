"""
First-order perturbation of a multiple Neumann eigenvalue under a metric
deformation g(t) = g0 + t T: the branch matrix (geometric and discrete
constructions), tracking of the eigenvalue branches in t, the residual tensor
that obstructs multiplicity and the genericity sampling built on them.
"""
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from eigenbench.core import fem
from eigenbench.core.eigensolver import solve_gevp, solve_window
from eigenbench.core.metric import inner02, inverse, metric_at_t, random_perturbation, trace, volume_density
from eigenbench.errors import ConsistencyError, InputError, TrackingError
from eigenbench.models import (
    BranchCurves,
    BranchMatrix,
    EigenCluster,
    GenericityReport,
    ResidualTensor,
    SymTensorField,
    components_to_matrices,
    matrices_to_components,
)

logger = logging.getLogger(__name__)

ORTHONORMALITY_TOL = 1e-8


def _check_basis(basis, M):
    gram = basis.T @ (M @ basis)
    defect = float(np.max(np.abs(gram - np.eye(basis.shape[1]))))
    if defect > ORTHONORMALITY_TOL:
        raise ConsistencyError(f"cluster basis is not M-orthonormal for this metric (defect {defect:.2e})")


def _symmetric(matrix):
    return 0.5 * (matrix + matrix.T)


def hadamard_matrix(mesh, g, cluster, H):
    """
    Geometric branch matrix of a cluster under the metric velocity H.

        L_ij = int_M < 1/4 Delta(phi_i phi_j) g - d phi_i (x) d phi_j, H > dM

    The Laplacian term is integrated by parts against h = tr_g H with the
    boundary flux dropped:
    int 1/4 Delta(phi_i phi_j) h dM = -1/4 int <d(phi_i phi_j), dh> dM.

    Args:
        mesh: Mesh
        g: MetricField the cluster was computed for
        cluster: EigenCluster with M(g)-orthonormal basis
        H: SymTensorField

    Returns:
        BranchMatrix with provenance "geometric"
    """
    _check_basis(cluster.basis, fem.assemble_mass(mesh, g))
    if len(H) != mesh.n_vertices:
        raise InputError(f"tensor has {len(H)} vertices, mesh has {mesh.n_vertices}", module="perturbation")

    gq = fem.metric_at_quadrature(mesh, g)
    ginv = inverse(gq)
    Hq = components_to_matrices(fem.at_quadrature(mesh, H.components))
    weight = fem.quadrature_weights(mesh) * volume_density(gq)
    grads = fem.hat_gradients(mesh)

    local = cluster.basis[mesh.triangles]  # F x 3 x m
    dphi = np.einsum("fkd,fkm->fdm", grads, local)
    phi_q = fem.at_quadrature(mesh, cluster.basis)  # F x 3 x m

    h = trace(H.matrices, g.matrices)
    dh = np.einsum("fkd,fk->fd", grads, h[mesh.triangles])
    raised_dh = np.einsum("fqde,fe->fqd", ginv, dh)
    along_dh = np.einsum("fdm,fqd->fqm", dphi, raised_dh)
    product = np.einsum("fq,fqi,fqj->ij", weight, phi_q, along_dh)
    laplacian_term = -0.25 * (product + product.T)

    coefficient = np.einsum("fq,fqab->fab", weight, ginv @ Hq @ ginv)
    gradient_term = np.einsum("fai,fab,fbj->ij", dphi, coefficient, dphi)

    return BranchMatrix(_symmetric(laplacian_term - gradient_term), "geometric")


def discrete_branch_matrix(cluster, K_prime, M_prime, M=None):
    """Phi^T (K' - mean M') Phi, the first-order oracle of the discrete pencil."""
    if M is not None:
        _check_basis(cluster.basis, M)
    basis = cluster.basis
    matrix = basis.T @ (K_prime @ basis) - cluster.mean * (basis.T @ (M_prime @ basis))
    return BranchMatrix(_symmetric(matrix), "discrete-oracle")


def simple_slope(mesh, g, pair, H):
    """Derivative at t = 0 of a simple eigenvalue along g + t H."""
    single = EigenCluster(pair.value, np.array([pair.value]), pair.vector[:, None], (0,), 0.0)
    return float(hadamard_matrix(mesh, g, single, H).matrix[0, 0])


def boundary_flux(mesh, g, cluster, H):
    """
    The boundary term 1/4 oint d_nu(phi_i phi_j) h ds dropped by hadamard_matrix.

    Each boundary edge is integrated with Simpson's rule using the gradients of
    its only triangle.
    """
    owner = {}
    for element, (a, b, c) in enumerate(mesh.triangles.tolist()):
        for edge in ((a, b), (b, c), (c, a)):
            owner[edge] = element
    grads = fem.hat_gradients(mesh)
    basis = cluster.basis
    h = trace(H.matrices, g.matrices)
    m = basis.shape[1]
    flux = np.zeros((m, m))

    for a, b in mesh.boundary_edges.tolist():
        element = owner[(a, b)]
        dphi = grads[element].T @ basis[mesh.triangles[element]]  # 2 x m
        tangent = mesh.vertices[b] - mesh.vertices[a]
        normal = np.array([tangent[1], -tangent[0]])
        for s, weight in ((0.0, 1.0 / 6.0), (0.5, 4.0 / 6.0), (1.0, 1.0 / 6.0)):
            metric = (1.0 - s) * g.matrices[a] + s * g.matrices[b]
            phi = (1.0 - s) * basis[a] + s * basis[b]
            flow = volume_density(metric) * (normal @ inverse(metric) @ dphi)  # m
            local = np.outer(phi, flow)
            flux += 0.25 * weight * ((1.0 - s) * h[a] + s * h[b]) * (local + local.T)
    return _symmetric(flux)


def _vertex_average(mesh, per_element):
    """Area-weighted average of per-element values onto the vertices."""
    area = mesh.signed_areas
    n = mesh.n_vertices
    totals = np.zeros((n,) + per_element.shape[1:])
    weights = np.zeros(n)
    for k in range(3):
        np.add.at(totals, mesh.triangles[:, k], area.reshape((-1,) + (1,) * (per_element.ndim - 1)) * per_element)
        np.add.at(weights, mesh.triangles[:, k], area)
    return totals / weights.reshape((-1,) + (1,) * (per_element.ndim - 1))


def _projected_laplacian(mesh, g, values):
    """Mass-lumped L2 projection of the weak Laplacian of a P1 function."""
    K = fem.assemble_stiffness(mesh, g)
    return -(K @ values) / fem.lumped_mass(mesh, g)


def residual_tensor(mesh, g, cluster, i, j):
    """R = 1/4 Delta(phi_i phi_j) g - sym(d phi_i (x) d phi_j) at the vertices, with its lumped L2(g) norm."""
    m = cluster.multiplicity
    if i == j:
        raise InputError("residual tensor needs two distinct basis functions", module="perturbation")
    if not (0 <= i < m and 0 <= j < m):
        raise InputError(f"basis indices ({i}, {j}) out of range for multiplicity {m}", module="perturbation")

    phi_i, phi_j = cluster.basis[:, i], cluster.basis[:, j]
    laplacian = _projected_laplacian(mesh, g, phi_i * phi_j)

    grads = fem.hat_gradients(mesh)
    di = np.einsum("fkd,fk->fd", grads, phi_i[mesh.triangles])
    dj = np.einsum("fkd,fk->fd", grads, phi_j[mesh.triangles])
    outer = np.einsum("fa,fb->fab", di, dj)
    S = _vertex_average(mesh, 0.5 * (outer + np.swapaxes(outer, 1, 2)))

    R = 0.25 * laplacian[:, None, None] * g.matrices - S
    norm = float(np.sqrt(np.sum(fem.lumped_mass(mesh, g) * inner02(R, R, g.matrices))))
    logger.info("residual tensor for pair (%d, %d): |R| = %.6g", i, j, norm)
    return ResidualTensor(SymTensorField(matrices_to_components(R)), norm, (i, j))


def trace_obstruction(mesh, g, cluster, i, j):
    """
    The 2D trace identity tr_g R = -lambda phi_i phi_j.

    Returns:
        (|lambda phi_i phi_j|_L2, |tr_g R + lambda phi_i phi_j|_L2); a nonzero
        first entry means R cannot vanish identically
    """
    residual = residual_tensor(mesh, g, cluster, i, j)
    weights = fem.lumped_mass(mesh, g)
    target = -cluster.mean * cluster.basis[:, i] * cluster.basis[:, j]
    traced = trace(residual.field.matrices, g.matrices)
    return (
        float(np.sqrt(np.sum(weights * target**2))),
        float(np.sqrt(np.sum(weights * (traced - target) ** 2))),
    )


def splitting_perturbation(mesh, g, cluster, threshold=1e-8, seed=0):
    """
    A metric velocity that splits the cluster at first order.

    Returns the residual tensor of the first two basis functions, for which the
    off-diagonal branch matrix entry equals |R|^2 > 0; falls back to a seeded
    random perturbation when |R| <= threshold.
    """
    if cluster.multiplicity < 2:
        raise InputError("a splitting perturbation needs a cluster of multiplicity >= 2", module="perturbation")
    residual = residual_tensor(mesh, g, cluster, 0, 1)
    if residual.norm > threshold:
        return residual.field
    logger.warning("residual tensor norm %.3e below %.1e, using a random perturbation", residual.norm, threshold)
    return random_perturbation(mesh, seed, amplitude=1.0)


def _pencil(mesh, g0, T, t):
    g = metric_at_t(g0, T, t)
    return fem.assemble_stiffness(mesh, g), fem.assemble_mass(mesh, g)


def _greedy_match(overlap):
    """assignment[k] is the column matched to row k, taking the largest overlaps first."""
    m = overlap.shape[0]
    work = np.abs(overlap).astype(float).copy()
    assignment = np.full(m, -1)
    for _ in range(m):
        row, col = np.unravel_index(np.argmax(work), work.shape)
        assignment[row] = col
        work[row, :] = -1.0
        work[:, col] = -1.0
    return assignment


def track_branches(mesh, g0, T, lam_bar, t_grid, window=None, threads=1):
    """
    Follow the eigenvalue branches leaving lam_bar along g(t) = g0 + t T.

    Every t is solved independently for the eigenpairs in (lam_bar - window,
    lam_bar + window]; the t = 0 basis is rotated into the eigenbasis of the
    discrete branch matrix and branches are matched outward from t = 0 by
    maximal |phi(t_k)^T M(t_{k+1}) phi(t_{k+1})|.

    Args:
        mesh, g0, T: Mesh, base metric and metric velocity
        lam_bar: Eigenvalue to follow
        t_grid: t values; 0 is always added
        window: Half-width of the tracking window (default 0.25 max(1, lam_bar))
        threads: Worker threads for the independent solves

    Returns:
        BranchCurves with branches ordered by their slope at 0
    """
    window = 0.25 * max(1.0, abs(lam_bar)) if window is None else window
    lo, hi = lam_bar - window, lam_bar + window
    grid = np.unique(np.append(np.asarray(t_grid, dtype=float), 0.0))
    centre = int(np.flatnonzero(grid == 0.0)[0])

    def solve(t):
        K, M = _pencil(mesh, g0, T, t)
        return K, M, solve_window(K, M, lo, hi)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        solved = list(pool.map(solve, grid))

    m = len(solved[centre][2])
    if m == 0:
        raise TrackingError(0.0, 0, 1)
    for t, (_, _, pairs) in zip(grid, solved):
        if len(pairs) != m:
            raise TrackingError(float(t), len(pairs), m)

    K0, _, pairs0 = solved[centre]
    basis0 = np.column_stack([p.vector for p in pairs0])
    K_prime, M_prime = fem.assemble_derivatives(mesh, g0, T)
    start = EigenCluster(float(np.mean([p.value for p in pairs0])), np.array([p.value for p in pairs0]),
                         basis0, tuple(range(m)), 0.0)
    _, rotation = np.linalg.eigh(discrete_branch_matrix(start, K_prime, M_prime).matrix)
    basis0 = basis0 @ rotation

    values = np.empty((grid.size, m))
    overlaps = np.ones((grid.size, m))
    values[centre] = np.einsum("nk,nk->k", basis0, K0 @ basis0)

    for step in (1, -1):
        previous = basis0
        k = centre + step
        while 0 <= k < grid.size:
            _, M, pairs = solved[k]
            candidates = np.column_stack([p.vector for p in pairs])
            overlap = previous.T @ (M @ candidates)
            assignment = _greedy_match(overlap)
            matched = candidates[:, assignment]
            signs = np.sign(np.einsum("nk,nk->k", previous, M @ matched))
            signs[signs == 0] = 1.0
            matched = matched * signs
            values[k] = [pairs[c].value for c in assignment]
            overlaps[k] = np.abs(overlap[np.arange(m), assignment])
            logger.debug("t=%g overlaps %s", grid[k], overlaps[k])
            previous = matched
            k += step

    logger.info("tracked %d branches from %.6g over %d t values", m, lam_bar, grid.size)
    return BranchCurves(grid, values, overlaps)


def _sample_tensor(mesh, g, family, seed, amplitude):
    if family == "conformal":
        scale = np.random.default_rng(seed).uniform(-amplitude, amplitude)
        return SymTensorField(g.components * scale)
    return random_perturbation(mesh, seed, amplitude)


def genericity_experiment(mesh, g, cluster, samples, seed, t_probe=0.01, gap_tol=None, confirm=5,
                          amplitude=1.0, family="random", threads=1):
    """
    Empirical density of splitting perturbations for a multiple eigenvalue.

    Sample s uses seed + s. A sample splits when the smallest gap between the
    eigenvalues of its discrete branch matrix exceeds gap_tol. The first
    `confirm` samples are solved again at t_probe and confirmed when the change
    of the pencil gap inside the cluster agrees with that verdict. A change no
    larger than the uniform rescaling of the cluster counts as no change.

    Args:
        family: "random" (trigonometric tensors) or "conformal" (T = c g)

    Returns:
        GenericityReport
    """
    if int(samples) != samples or samples < 1:
        raise InputError(f"samples must be a positive integer, got {samples!r}", module="perturbation")
    if family not in ("random", "conformal"):
        raise InputError(f"unknown perturbation family {family!r}", module="perturbation")
    gap_tol = 1e-6 * max(1.0, abs(cluster.mean)) if gap_tol is None else gap_tol
    count = max(cluster.indices) + 1
    spread = float(np.min(np.diff(np.sort(cluster.values)))) if cluster.multiplicity > 1 else 0.0

    def run_sample(s):
        T = _sample_tensor(mesh, g, family, seed + s, amplitude)
        branch = discrete_branch_matrix(cluster, *fem.assemble_derivatives(mesh, g, T))
        gap = branch.min_gap
        row = {"sample": s, "seed": seed + s, "min_gap": gap, "split": bool(gap > gap_tol),
               "probe_gap": float("nan"), "confirmed": None}
        if s < confirm:
            K, M = _pencil(mesh, g, T, t_probe)
            values = np.array([p.value for p in solve_gevp(K, M, count)])[list(cluster.indices)]
            probe_gap = float(np.min(np.diff(values))) if values.size > 1 else float("inf")
            rescaling = 2.0 * abs(t_probe) * spread * np.max(np.abs(branch.slopes)) / max(abs(cluster.mean), 1e-12)
            moved = abs(probe_gap - spread) > 0.5 * abs(t_probe) * max(gap, gap_tol) + rescaling
            row["probe_gap"] = probe_gap
            row["confirmed"] = bool(moved == row["split"])
        return row

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(run_sample, range(int(samples))))

    probed = [row["confirmed"] for row in rows if row["confirmed"] is not None]
    report = GenericityReport(
        split_fraction=sum(row["split"] for row in rows) / len(rows),
        samples=len(rows),
        confirmed_fraction=sum(probed) / len(probed) if probed else float("nan"),
        rows=tuple(rows),
    )
    logger.info("genericity: %d samples, split fraction %.2f, confirmed %.2f",
                report.samples, report.split_fraction, report.confirmed_fraction)
    return report
