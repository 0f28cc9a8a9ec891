import numpy as np
import pytest

from eigenbench.core import fem
from eigenbench.core.eigensolver import solve_gevp
from eigenbench.core.chart_calculus import fit_order
from eigenbench.core.mesh import generate_disk, generate_square
from eigenbench.core.metric import (
    conformal_metric,
    constant_tensor,
    diag_metric,
    identity_metric,
    metric_at_t,
    random_perturbation,
)
from eigenbench.errors import AssemblyError
from eigenbench.models import MetricField


def test_single_cell_stiffness_has_zero_row_sums():
    mesh = generate_square(1)
    K = fem.assemble_stiffness(mesh, identity_metric(mesh)).toarray()
    assert K.shape == (4, 4)
    np.testing.assert_allclose(K.sum(axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(K, K.T)


def test_stiffness_matches_cotangent_formula():
    mesh = generate_disk(4)
    K = fem.assemble_stiffness(mesh, identity_metric(mesh)).toarray()
    cot = fem.assemble_cotangent_stiffness(mesh).toarray()
    np.testing.assert_allclose(K, cot, atol=1e-12)


def test_stiffness_is_conformally_invariant():
    mesh = generate_square(6)
    K = fem.assemble_stiffness(mesh, identity_metric(mesh)).toarray()
    scaled = fem.assemble_stiffness(mesh, diag_metric(mesh, 3.5, 3.5)).toarray()
    np.testing.assert_allclose(scaled, K, atol=1e-12)


def test_stiffness_is_positive_semidefinite_with_constant_kernel():
    mesh = generate_square(5)
    g = conformal_metric(mesh, "bump", 0.7)
    K = fem.assemble_stiffness(mesh, g).toarray()
    np.testing.assert_allclose(K @ np.ones(mesh.n_vertices), 0.0, atol=1e-12)
    assert np.linalg.eigvalsh(K).min() > -1e-12
    assert np.linalg.eigvalsh(fem.assemble_mass(mesh, g).toarray()).min() > 0


@pytest.mark.parametrize("a, b, area", [(1.0, 1.0, 1.0), (4.0, 9.0, 6.0)])
def test_mass_integrates_area(a, b, area):
    mesh = generate_square(4)
    M = fem.assemble_mass(mesh, diag_metric(mesh, a, b))
    ones = np.ones(mesh.n_vertices)
    assert ones @ (M @ ones) == pytest.approx(area, abs=1e-12)
    assert fem.lumped_mass(mesh, diag_metric(mesh, a, b)).sum() == pytest.approx(area, abs=1e-12)


def test_assembly_names_bad_element():
    mesh = generate_square(2)
    components = np.tile([1.0, 0.0, 1.0], (mesh.n_vertices, 1))
    components[8] = [-5.0, 0.0, 1.0]
    with pytest.raises(AssemblyError) as excinfo:
        fem.assemble_stiffness(mesh, MetricField(components))
    assert 8 in mesh.triangles[excinfo.value.element]


def test_derivatives_vanish_for_zero_velocity():
    mesh = generate_square(3)
    K_prime, M_prime = fem.assemble_derivatives(mesh, identity_metric(mesh), constant_tensor(mesh, 0, 0, 0))
    assert abs(K_prime).max() == 0.0
    assert abs(M_prime).max() == 0.0


def test_derivatives_for_conformal_velocity():
    mesh = generate_square(3)
    g = identity_metric(mesh)
    K_prime, M_prime = fem.assemble_derivatives(mesh, g, constant_tensor(mesh, 1.0, 0.0, 1.0))
    np.testing.assert_allclose(K_prime.toarray(), 0.0, atol=1e-12)
    np.testing.assert_allclose(M_prime.toarray(), fem.assemble_mass(mesh, g).toarray(), atol=1e-14)


def test_derivatives_match_finite_differences():
    mesh = generate_square(6)
    g0 = conformal_metric(mesh, "linear_x", 0.3)
    T = random_perturbation(mesh, seed=2, amplitude=0.5)
    K_prime, M_prime = fem.assemble_derivatives(mesh, g0, T)
    step = 1e-5

    def assembled(t):
        g = metric_at_t(g0, T, t)
        return fem.assemble_stiffness(mesh, g).toarray(), fem.assemble_mass(mesh, g).toarray()

    (K_plus, M_plus), (K_minus, M_minus) = assembled(step), assembled(-step)
    fd_K = (K_plus - K_minus) / (2 * step)
    fd_M = (M_plus - M_minus) / (2 * step)
    assert np.linalg.norm(K_prime.toarray() - fd_K) <= 1e-6 * np.linalg.norm(K_prime.toarray())
    assert np.linalg.norm(M_prime.toarray() - fd_M) <= 1e-6 * np.linalg.norm(M_prime.toarray())


def test_export_coo(tmp_path):
    mesh = generate_square(1)
    K = fem.assemble_stiffness(mesh, identity_metric(mesh))
    path = tmp_path / "K.csv"
    fem.export_coo(K, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "row,col,value"
    assert len(lines) == K.nnz + 1
    row, col, value = lines[1].split(",")
    assert (int(row), int(col)) == (0, 0)
    assert float(value) == pytest.approx(K[0, 0])


def test_eigenvalues_scale_inversely_with_metric():
    mesh = generate_square(6)
    base = solve_gevp(fem.assemble_stiffness(mesh, identity_metric(mesh)),
                      fem.assemble_mass(mesh, identity_metric(mesh)), 5)
    doubled = solve_gevp(fem.assemble_stiffness(mesh, diag_metric(mesh, 2.0, 2.0)),
                         fem.assemble_mass(mesh, diag_metric(mesh, 2.0, 2.0)), 5)
    np.testing.assert_allclose([p.value for p in doubled[1:]], [p.value / 2 for p in base[1:]], rtol=1e-10)


@pytest.mark.slow
def test_square_eigenvalue_converges_at_second_order():
    sizes, errors = [16, 32, 64], []
    for n in sizes:
        mesh = generate_square(n)
        g = identity_metric(mesh)
        pairs = solve_gevp(fem.assemble_stiffness(mesh, g), fem.assemble_mass(mesh, g), 2)
        errors.append(abs(pairs[1].value - np.pi**2))
    assert fit_order([1.0 / n for n in sizes], errors) >= 1.9
