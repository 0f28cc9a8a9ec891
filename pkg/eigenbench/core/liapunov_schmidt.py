"""
Discrete Liapunov-Schmidt reduction of the pencil (K(t), M(t)) onto the
eigenspace of a multiple eigenvalue at t = 0.

The reference basis Phi and the projector P = M(0) Phi Phi^T are held fixed.
For each (t, lambda) the complement corrections W solve the bordered system

    [ K(t) - lambda M(t)   M(0) Phi ] [ W  ]   [ -(K(t) - lambda M(t)) Phi ]
    [ Phi^T M(0)               0    ] [ mu ] = [             0             ]

and A(t, lambda) = Phi^T (lambda M(t) - K(t)) (Phi + W) is the m x m matrix
whose singular points are the eigenvalues of the pencil near lambda_0.
"""
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import optimize, sparse
from scipy.sparse.linalg import splu

from eigenbench.core import fem
from eigenbench.core.eigensolver import solve_window
from eigenbench.core.metric import metric_at_t
from eigenbench.errors import InputError, SingularSystemError, WindowError
from eigenbench.models import ReducedMatrix

logger = logging.getLogger(__name__)

ASYMMETRY_TOL = 1e-6


class Reduction:
    """
    Fixed-projector reduction around a cluster of the pencil at t = 0.

    Args:
        mesh: Mesh
        g0: Base MetricField
        T: SymTensorField, the metric velocity
        cluster: EigenCluster of (K(0), M(0))
        shift: Relative shift of lambda used once when the bordered system is singular
        fd_step: Step of the central differences in derivative()
    """

    def __init__(self, mesh, g0, T, cluster, shift=1e-9, fd_step=1e-4):
        self.mesh = mesh
        self.g0 = g0
        self.T = T
        self.cluster = cluster
        self.lam0 = float(cluster.mean)
        self.basis = cluster.basis
        self.shift = shift
        self.fd_step = fd_step
        self._operators = {}
        _, M0 = self.operators(0.0)
        self._constraint = M0 @ self.basis  # N x m, columns of M(0) Phi

    @property
    def multiplicity(self):
        return self.basis.shape[1]

    def operators(self, t):
        """(K(t), M(t)) for g0 + t T, assembled once per t."""
        key = float(t)
        if key not in self._operators:
            g = metric_at_t(self.g0, self.T, key)
            self._operators[key] = (fem.assemble_stiffness(self.mesh, g), fem.assemble_mass(self.mesh, g))
        return self._operators[key]

    def project(self, u):
        """P u = M(0) Phi Phi^T u."""
        return self._constraint @ (self.basis.T @ u)

    def projector_defect(self, seed=0):
        """max |P(P u) - P u| / |P u| over a few random probes."""
        probes = np.random.default_rng(seed).standard_normal((self.basis.shape[0], 4))
        once = self.project(probes)
        return float(np.max(np.abs(self.project(once) - once)) / np.max(np.abs(once)))

    def _bordered(self, t, lam):
        K, M = self.operators(t)
        shifted = (K - lam * M).tocsc()
        system = sparse.bmat([[shifted, sparse.csc_matrix(self._constraint)],
                              [sparse.csc_matrix(self._constraint.T), None]], format="csc")
        return shifted, system

    def complement_solve(self, t, lam, j=None):
        """
        Corrections w_j with Phi^T M(0) w_j = 0 and (I - P)(K - lam M)(phi_j + w_j) = 0.

        Args:
            t: Deformation parameter
            lam: Spectral parameter
            j: Basis column; all columns (N x m) when None

        Returns:
            w_j, or the N x m matrix W
        """
        n, m = self.basis.shape
        for attempt, value in enumerate((lam, lam + self.shift * max(1.0, abs(lam)))):
            shifted, system = self._bordered(t, value)
            try:
                factor = splu(system)
            except RuntimeError:
                logger.debug("bordered system singular at lambda=%r, t=%r (attempt %d)", value, t, attempt)
                continue
            rhs = np.vstack([-(shifted @ self.basis), np.zeros((m, m))])
            solution = factor.solve(rhs)
            if np.all(np.isfinite(solution)):
                W = solution[:n]
                return W if j is None else W[:, j]
        raise SingularSystemError(lam, t)

    def reduced_matrix(self, t, lam):
        """A(t, lam) = Phi^T (lam M(t) - K(t)) (Phi + W), symmetrized."""
        K, M = self.operators(t)
        W = self.complement_solve(t, lam)
        A = self.basis.T @ ((lam * M - K) @ (self.basis + W))
        scale = np.linalg.norm(A)
        asymmetry = float(np.linalg.norm(A - A.T) / scale) if scale > 0 else 0.0
        if asymmetry > ASYMMETRY_TOL:
            logger.warning("reduced matrix asymmetry %.2e at t=%r, lambda=%r", asymmetry, t, lam)
        return ReducedMatrix(0.5 * (A + A.T), asymmetry, float(t), float(lam))

    def derivative(self, wrt, t, lam, step=None):
        """Central difference of A in t ("t") or in lambda ("lam")."""
        step = self.fd_step if step is None else step
        if wrt == "t":
            upper, lower = self.reduced_matrix(t + step, lam), self.reduced_matrix(t - step, lam)
        elif wrt == "lam":
            upper, lower = self.reduced_matrix(t, lam + step), self.reduced_matrix(t, lam - step)
        else:
            raise InputError(f"derivative is taken in 't' or 'lam', got {wrt!r}", module="liapunov_schmidt")
        return (upper.matrix - lower.matrix) / (2.0 * step)

    def window(self, width=None):
        width = 0.1 * max(1.0, abs(self.lam0)) if width is None else width
        return self.lam0 - width, self.lam0 + width

    def _sorted_eigenvalues(self, t, lam):
        return np.linalg.eigvalsh(self.reduced_matrix(t, lam).matrix)

    def det_roots(self, t, window=None):
        """
        The m values of lambda in the window where A(t, lambda) is singular, ascending.

        The eigenvalues of A increase with lambda; the k-th smallest root is the
        zero of the (m-1-k)-th sorted eigenvalue, refined with Brent's method.
        """
        if window is None or np.isscalar(window):
            window = self.window(window)
        lo, hi = window
        m = self.multiplicity
        at_lo, at_hi = self._sorted_eigenvalues(t, lo), self._sorted_eigenvalues(t, hi)
        count = int(np.sum(at_lo < 0.0) - np.sum(at_hi < 0.0))
        if count != m:
            raise WindowError(count, m, t)

        roots = []
        for k in range(m):
            index = m - 1 - k
            root = optimize.brentq(lambda lam: self._sorted_eigenvalues(t, lam)[index], lo, hi,
                                   xtol=1e-14 * max(1.0, abs(self.lam0)), rtol=4 * np.finfo(float).eps)
            roots.append(float(root))
        logger.info("t=%r: roots %s", t, roots)
        return sorted(roots)

    def eigenvector(self, t, root):
        """
        Null vector c of A(t, root) lifted to u = (Phi + W) c, M(t)-normalized.

        Returns:
            (u, relative pencil residual |K u - root M u| / |K u|)
        """
        K, M = self.operators(t)
        values, vectors = np.linalg.eigh(self.reduced_matrix(t, root).matrix)
        c = vectors[:, int(np.argmin(np.abs(values)))]
        u = (self.basis + self.complement_solve(t, root)) @ c
        u = u / np.sqrt(u @ (M @ u))
        Ku = K @ u
        return u, float(np.linalg.norm(Ku - root * (M @ u)) / np.linalg.norm(Ku))

    def compare_with_pencil(self, t, roots, window=None):
        """Rows (t, root index, root, pencil eigenvalue, |difference|) against a direct solve."""
        if window is None or np.isscalar(window):
            window = self.window(window)
        K, M = self.operators(t)
        pencil = [pair.value for pair in solve_window(K, M, *window)]
        if len(pencil) != len(roots):
            raise WindowError(len(roots), len(pencil), t)
        return [
            {"t": float(t), "root_index": k, "root": root, "pencil": value, "difference": abs(root - value)}
            for k, (root, value) in enumerate(zip(sorted(roots), pencil))
        ]


def root_sweep(mesh, g0, T, cluster, t_values, window=None, threads=1):
    """det_roots and the pencil comparison for every t, one Reduction per t."""
    def one(t):
        reduction = Reduction(mesh, g0, T, cluster)
        return reduction.compare_with_pencil(t, reduction.det_roots(t, window), window)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return [row for rows in pool.map(one, t_values) for row in rows]
