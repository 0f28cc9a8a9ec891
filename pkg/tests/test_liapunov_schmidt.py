import numpy as np
import pytest

from eigenbench.core import fem
from eigenbench.core.liapunov_schmidt import Reduction, root_sweep
from eigenbench.core.metric import constant_tensor
from eigenbench.core.perturbation import discrete_branch_matrix
from eigenbench.errors import InputError, WindowError


@pytest.fixture(scope="module")
def stretch(square16):
    mesh, g, _, _, _, clusters = square16
    T = constant_tensor(mesh, 2.0, 0.0, 1.0)
    return mesh, g, T, clusters[1]


@pytest.fixture
def reduction(stretch):
    return Reduction(*stretch)


def test_projector_is_idempotent(reduction):
    assert reduction.multiplicity == 2
    assert reduction.projector_defect() < 1e-10


def test_reduction_is_trivial_at_zero(reduction):
    lam = reduction.lam0 + 0.1
    W = reduction.complement_solve(0.0, lam)
    assert np.linalg.norm(W) <= 1e-8 * np.linalg.norm(reduction.basis)
    A = reduction.reduced_matrix(0.0, lam)
    spread = np.ptp(reduction.cluster.values)
    np.testing.assert_allclose(A.matrix, 0.1 * np.eye(2), atol=spread + 1e-8)
    assert A.asymmetry < 1e-8


def test_complement_correction_is_first_order(reduction):
    lam = reduction.lam0
    small = np.linalg.norm(reduction.complement_solve(0.01, lam))
    large = np.linalg.norm(reduction.complement_solve(0.02, lam))
    assert large / small == pytest.approx(2.0, rel=0.1)
    column = reduction.complement_solve(0.01, lam, j=1)
    _, M0 = reduction.operators(0.0)
    np.testing.assert_allclose(reduction.basis.T @ (M0 @ column), 0.0, atol=1e-10)


def test_t_derivative_is_minus_branch_matrix(stretch, reduction):
    mesh, g, T, pair = stretch
    K_prime, M_prime = fem.assemble_derivatives(mesh, g, T)
    branch = discrete_branch_matrix(pair, K_prime, M_prime).matrix
    dA_dt = reduction.derivative("t", 0.0, reduction.lam0)
    assert np.max(np.abs(dA_dt + branch)) <= 1e-6 * np.max(np.abs(branch))


def test_lambda_derivative_is_identity_at_zero(reduction):
    np.testing.assert_allclose(reduction.derivative("lam", 0.0, reduction.lam0), np.eye(2), atol=1e-6)
    with pytest.raises(InputError):
        reduction.derivative("x", 0.0, reduction.lam0)


def test_roots_match_pencil(reduction):
    roots = reduction.det_roots(0.02)
    assert len(roots) == 2 and roots[0] < roots[1]
    np.testing.assert_allclose(roots, [np.pi**2 / 1.04, np.pi**2 / 1.02], rtol=1e-2)
    for row in reduction.compare_with_pencil(0.02, roots):
        assert row["difference"] <= 1e-7 * reduction.lam0
    for root in roots:
        u, residual = reduction.eigenvector(0.02, root)
        assert residual < 1e-8
        _, M = reduction.operators(0.02)
        assert u @ (M @ u) == pytest.approx(1.0)


def test_window_without_all_roots(reduction):
    with pytest.raises(WindowError) as excinfo:
        reduction.det_roots(0.02, 1e-3)
    assert excinfo.value.expected == 2
    with pytest.raises(WindowError):
        reduction.compare_with_pencil(0.02, [reduction.lam0])


def test_default_window(reduction):
    lo, hi = reduction.window()
    assert hi - reduction.lam0 == pytest.approx(0.1 * reduction.lam0)
    assert reduction.lam0 - lo == pytest.approx(0.1 * reduction.lam0)


def test_root_sweep(stretch):
    rows = root_sweep(*stretch, t_values=[0.01, -0.01], threads=2)
    assert [row["t"] for row in rows] == [0.01, 0.01, -0.01, -0.01]
    assert [row["root_index"] for row in rows] == [0, 1, 0, 1]
    assert max(row["difference"] for row in rows) <= 1e-7 * np.pi**2
