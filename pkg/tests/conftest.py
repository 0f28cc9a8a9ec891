import numpy as np
import pytest

from eigenbench.core import fem
from eigenbench.core.eigensolver import cluster, solve_gevp
from eigenbench.core.mesh import generate_square
from eigenbench.core.metric import constant_tensor, identity_metric
from eigenbench.core.perturbation import discrete_branch_matrix


def square_spectrum(n, count=6, cluster_tol=1e-3):
    mesh = generate_square(n)
    g = identity_metric(mesh)
    K, M = fem.assemble_stiffness(mesh, g), fem.assemble_mass(mesh, g)
    pairs = solve_gevp(K, M, count)
    return mesh, g, K, M, pairs, cluster(pairs, cluster_tol, M)


@pytest.fixture(scope="session")
def square16():
    """Unit square n=16 with identity metric: (mesh, g, K, M, pairs, clusters)."""
    return square_spectrum(16)


@pytest.fixture(scope="session")
def pi_cluster(square16):
    """
    The pi^2 pair of the square, rotated so that its columns approximate
    cos(pi x) and cos(pi y) (the eigenbasis of the diag(2, 1) branch matrix).
    """
    mesh, g, _, M, _, clusters = square16
    pair = clusters[1]
    K_prime, M_prime = fem.assemble_derivatives(mesh, g, constant_tensor(mesh, 2.0, 0.0, 1.0))
    _, rotation = np.linalg.eigh(discrete_branch_matrix(pair, K_prime, M_prime).matrix)
    return pair.rotated(rotation)
