import numpy as np
import pytest

from eigenbench.core.mesh import (
    generate_annulus,
    generate_disk,
    generate_square,
    load_mesh,
    permute_vertices,
    save_mesh,
    validate_mesh,
)
from eigenbench.errors import InputError, MeshParseError, MeshValidationError
from eigenbench.models import Mesh


def test_square_counts():
    mesh = generate_square(2)
    assert mesh.n_vertices == 9
    assert mesh.n_triangles == 8
    assert mesh.boundary_edges.shape == (8, 2)
    assert mesh.euler_characteristic == 1
    assert np.all(mesh.signed_areas > 0)
    assert np.isclose(mesh.signed_areas.sum(), 1.0)


def test_square_rejects_zero_subdivisions():
    with pytest.raises(InputError):
        generate_square(0)


def test_disk_rings():
    mesh = generate_disk(3)
    assert mesh.n_vertices == 1 + 6 + 12 + 18
    assert mesh.n_triangles == 6 + 18 + 30
    assert mesh.euler_characteristic == 1
    loops = mesh.boundary_loops()
    assert len(loops) == 1 and len(loops[0]) == 18
    radii = np.linalg.norm(mesh.vertices[loops[0]], axis=1)
    np.testing.assert_allclose(radii, 1.0)


def test_disk_area_approaches_pi():
    mesh = generate_disk(12)
    assert mesh.signed_areas.sum() == pytest.approx(np.pi, rel=1e-2)


def test_annulus_has_two_loops():
    mesh = generate_annulus(3, inner_radius=0.4)
    assert mesh.euler_characteristic == 0
    loops = sorted(mesh.boundary_loops(), key=len)
    assert len(loops) == 2
    np.testing.assert_allclose(np.linalg.norm(mesh.vertices[loops[0]], axis=1), 0.4)
    np.testing.assert_allclose(np.linalg.norm(mesh.vertices[loops[1]], axis=1), 1.0)


def test_annulus_rejects_bad_radius():
    with pytest.raises(InputError):
        generate_annulus(2, inner_radius=1.5)


def test_validate_rejects_clockwise_triangle():
    mesh = Mesh([[0, 0], [1, 0], [0, 1]], [[0, 2, 1]], [[0, 2], [2, 1], [1, 0]])
    with pytest.raises(MeshValidationError) as excinfo:
        validate_mesh(mesh)
    assert excinfo.value.invariant == "positive-area"


def test_validate_rejects_non_manifold_edge():
    vertices = [[0, 0], [1, 0], [0.5, 1], [0.5, 2], [0.5, -1]]
    mesh = Mesh(vertices, [[0, 1, 2], [0, 1, 3], [1, 0, 4]], np.empty((0, 2)))
    with pytest.raises(MeshValidationError) as excinfo:
        validate_mesh(mesh)
    assert excinfo.value.invariant == "edge-manifold"


def test_validate_checks_euler_characteristic():
    with pytest.raises(MeshValidationError) as excinfo:
        validate_mesh(generate_annulus(2), expected_euler=1)
    assert excinfo.value.invariant == "euler-characteristic"


def test_validate_rejects_missing_boundary_edge():
    square = generate_square(1)
    mesh = Mesh(square.vertices, square.triangles, square.boundary_edges[:-1])
    with pytest.raises(MeshValidationError) as excinfo:
        validate_mesh(mesh)
    assert excinfo.value.invariant == "boundary-cover"


def test_save_and_load(tmp_path):
    mesh = generate_disk(2)
    path = tmp_path / "disk.txt"
    save_mesh(mesh, path)
    loaded = load_mesh(path)
    np.testing.assert_array_equal(loaded.vertices, mesh.vertices)
    np.testing.assert_array_equal(loaded.triangles, mesh.triangles)
    np.testing.assert_array_equal(loaded.boundary_edges, mesh.boundary_edges)


def test_load_reports_line_number(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("vertices 3\n0 0\n1 0\n0 x\n")
    with pytest.raises(MeshParseError) as excinfo:
        load_mesh(path)
    assert excinfo.value.line == 4


def test_load_reports_missing_section(tmp_path):
    path = tmp_path / "short.txt"
    path.write_text("vertices 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2\n")
    with pytest.raises(MeshParseError, match="boundary"):
        load_mesh(path)


def test_load_reorients_clockwise_triangles(tmp_path):
    path = tmp_path / "cw.txt"
    path.write_text("vertices 3\n0 0\n1 0\n0 1\ntriangles 1\n0 2 1\nboundary 3\n0 2\n2 1\n1 0\n")
    with pytest.raises(MeshValidationError):
        load_mesh(path)
    mesh = load_mesh(path, reorient=True)
    assert mesh.signed_areas[0] == pytest.approx(0.5)


def test_permute_vertices_keeps_geometry():
    mesh = generate_square(3)
    perm = np.random.default_rng(3).permutation(mesh.n_vertices)
    permuted = permute_vertices(mesh, perm)
    validate_mesh(permuted)
    np.testing.assert_array_equal(permuted.vertices[perm], mesh.vertices)
    np.testing.assert_allclose(np.sort(permuted.signed_areas), np.sort(mesh.signed_areas))


def test_mesh_arrays_are_read_only():
    mesh = generate_square(1)
    with pytest.raises(ValueError):
        mesh.vertices[0, 0] = 5.0
