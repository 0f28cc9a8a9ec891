"""
Generation, validation and text I/O of triangulated parameter domains.
"""
import logging
from collections import Counter
from pathlib import Path

import numpy as np

from eigenbench.errors import InputError, MeshParseError, MeshValidationError
from eigenbench.models import Mesh

logger = logging.getLogger(__name__)

SECTIONS = ("vertices", "triangles", "boundary")


def generate_square(n):
    """Unit square [0, 1]^2 with n subdivisions per side, every cell split along the (x, y) to (x+h, y+h) diagonal."""
    if int(n) != n or n < 1:
        raise InputError(f"square subdivisions must be a positive integer, got {n!r}", module="mesh")
    n = int(n)
    ticks = np.arange(n + 1) / n
    xs, ys = np.meshgrid(ticks, ticks)
    vertices = np.column_stack([xs.ravel(), ys.ravel()])

    def index(i, j):
        return j * (n + 1) + i

    triangles = []
    for j in range(n):
        for i in range(n):
            v00, v10 = index(i, j), index(i + 1, j)
            v01, v11 = index(i, j + 1), index(i + 1, j + 1)
            triangles.append((v00, v10, v11))
            triangles.append((v00, v11, v01))

    mesh = _build(vertices, triangles)
    logger.debug("square mesh n=%d: %s", n, mesh.to_dict())
    return mesh


def generate_disk(rings):
    """
    Triangulation of the unit disk by concentric rings.

    Ring k (1..rings) has radius k/rings and 6k equally spaced vertices; the
    first ring is a fan around the centre, later strips are stitched by angle.
    """
    if int(rings) != rings or rings < 1:
        raise InputError(f"disk rings must be a positive integer, got {rings!r}", module="mesh")
    rings = int(rings)
    vertices = [(0.0, 0.0)]
    triangles = []
    previous_ids = None
    for k in range(1, rings + 1):
        count = 6 * k
        angles = 2.0 * np.pi * np.arange(count) / count
        ids = list(range(len(vertices), len(vertices) + count))
        radius = k / rings
        vertices.extend(zip(radius * np.cos(angles), radius * np.sin(angles)))
        if k == 1:
            for j in range(count):
                triangles.append((0, ids[j], ids[(j + 1) % count]))
        else:
            triangles.extend(_stitch(previous_ids, ids))
        previous_ids = ids

    return _build(np.array(vertices), triangles)


def generate_annulus(rings, inner_radius=0.5):
    """Annulus inner_radius <= |x| <= 1 in `rings` radial layers; two boundary loops."""
    if int(rings) != rings or rings < 1:
        raise InputError(f"annulus rings must be a positive integer, got {rings!r}", module="mesh")
    if not 0.0 < inner_radius < 1.0:
        raise InputError(f"inner radius must lie in (0, 1), got {inner_radius!r}", module="mesh")
    rings = int(rings)
    dr = (1.0 - inner_radius) / rings
    vertices, triangles = [], []
    previous = None
    for k in range(rings + 1):
        radius = inner_radius + k * dr
        count = max(6, int(round(2.0 * np.pi * radius / dr)))
        angles = 2.0 * np.pi * np.arange(count) / count
        ids = list(range(len(vertices), len(vertices) + count))
        vertices.extend(zip(radius * np.cos(angles), radius * np.sin(angles)))
        if previous is not None:
            triangles.extend(_stitch(previous, ids))
        previous = ids

    return _build(np.array(vertices), triangles)


def _stitch(inner_ids, outer_ids):
    """
    Triangulate the strip between two closed rings of equally spaced vertices
    starting at angle 0, advancing by angle. Angles k/n are compared as exact
    fractions so rotationally symmetric rings give symmetric strips.
    """
    n_in, n_out = len(inner_ids), len(outer_ids)
    i = j = 0
    triangles = []
    while i < n_in or j < n_out:
        advance_outer = j < n_out and (i == n_in or (j + 1) * n_in <= (i + 1) * n_out)
        a, b = inner_ids[i % n_in], outer_ids[j % n_out]
        if advance_outer:
            triangles.append((a, b, outer_ids[(j + 1) % n_out]))
            j += 1
        else:
            triangles.append((a, b, inner_ids[(i + 1) % n_in]))
            i += 1
    return triangles


def _directed_edges(triangles):
    tri = np.asarray(triangles)
    return np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])


def boundary_edges_from_triangles(triangles):
    """Directed edges with exactly one incident triangle, in triangle order."""
    directed = _directed_edges(triangles)
    counts = Counter(map(tuple, np.sort(directed, axis=1).tolist()))
    return np.array(
        [edge for edge in directed.tolist() if counts[tuple(sorted(edge))] == 1], dtype=np.int64
    ).reshape(-1, 2)


def _build(vertices, triangles):
    triangles = np.asarray(triangles, dtype=np.int64)
    mesh = Mesh(vertices, triangles, boundary_edges_from_triangles(triangles))
    validate_mesh(mesh)
    return mesh


def validate_mesh(mesh, expected_euler=None):
    """
    Check the mesh invariants, raising MeshValidationError naming the first one violated.
    """
    nv = mesh.n_vertices
    if not np.all(np.isfinite(mesh.vertices)):
        raise MeshValidationError("finite-vertices")
    tri = mesh.triangles
    if tri.size == 0:
        raise MeshValidationError("non-empty")
    if tri.min() < 0 or tri.max() >= nv:
        raise MeshValidationError("vertex-index-range")
    if np.any((tri[:, 0] == tri[:, 1]) | (tri[:, 1] == tri[:, 2]) | (tri[:, 2] == tri[:, 0])):
        raise MeshValidationError("distinct-triangle-vertices")

    areas = mesh.signed_areas
    bad = np.flatnonzero(areas <= 0.0)
    if bad.size:
        raise MeshValidationError("positive-area", f"triangle {int(bad[0])} has signed area {areas[bad[0]]:.3e}")

    directed = _directed_edges(tri)
    undirected = Counter(map(tuple, np.sort(directed, axis=1).tolist()))
    overfull = [edge for edge, count in undirected.items() if count > 2]
    if overfull:
        raise MeshValidationError("edge-manifold", f"edge {overfull[0]} is shared by more than 2 triangles")
    directed_counts = Counter(map(tuple, directed.tolist()))
    repeated = [edge for edge, count in directed_counts.items() if count > 1]
    if repeated:
        raise MeshValidationError("consistent-orientation", f"directed edge {repeated[0]} appears twice")

    single = {edge for edge, count in undirected.items() if count == 1}
    boundary = [tuple(edge) for edge in mesh.boundary_edges.tolist()]
    if len(set(boundary)) != len(boundary) or {tuple(sorted(edge)) for edge in boundary} != single:
        raise MeshValidationError("boundary-cover", "boundary edges differ from edges with one incident triangle")
    wrong_way = [edge for edge in boundary if edge not in directed_counts]
    if wrong_way:
        raise MeshValidationError("boundary-orientation", f"boundary edge {wrong_way[0]} opposes its triangle")

    heads = Counter(a for a, _ in boundary)
    tails = Counter(b for _, b in boundary)
    if any(heads[v] != 1 or tails[v] != 1 for v in set(heads) | set(tails)):
        raise MeshValidationError("boundary-loops", "boundary edges do not form closed loops")

    if expected_euler is not None and mesh.euler_characteristic != expected_euler:
        raise MeshValidationError(
            "euler-characteristic", f"expected {expected_euler}, got {mesh.euler_characteristic}"
        )
    return mesh


def permute_vertices(mesh, perm):
    """Renumber vertices so that old vertex v becomes perm[v]."""
    perm = np.asarray(perm, dtype=np.int64)
    if sorted(perm.tolist()) != list(range(mesh.n_vertices)):
        raise InputError("perm must be a permutation of the vertex indices", module="mesh")
    vertices = np.empty_like(mesh.vertices)
    vertices[perm] = mesh.vertices
    return Mesh(vertices, perm[mesh.triangles], perm[mesh.boundary_edges])


def save_mesh(mesh, path):
    """Write the mesh in the sectioned text format."""
    lines = ["# eigenbench mesh", f"vertices {mesh.n_vertices}"]
    lines.extend(f"{float(x)!r} {float(y)!r}" for x, y in mesh.vertices.tolist())
    lines.append(f"triangles {mesh.n_triangles}")
    lines.extend(f"{a} {b} {c}" for a, b, c in mesh.triangles.tolist())
    lines.append(f"boundary {mesh.boundary_edges.shape[0]}")
    lines.extend(f"{a} {b}" for a, b in mesh.boundary_edges.tolist())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_mesh(path, reorient=False):
    """Read and validate a mesh written by save_mesh; reorient flips clockwise triangles instead of rejecting them."""
    records = {}
    current, expected = None, 0
    widths = {"vertices": 2, "triangles": 3, "boundary": 2}
    parsers = {"vertices": float, "triangles": int, "boundary": int}

    number = 0
    with open(path, encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if current is not None and len(records[current]) < expected:
                if len(tokens) != widths[current]:
                    raise MeshParseError(
                        f"expected {widths[current]} values in '{current}' record, got {len(tokens)}", number
                    )
                try:
                    records[current].append([parsers[current](token) for token in tokens])
                except ValueError:
                    raise MeshParseError(f"malformed '{current}' record: {line!r}", number)
                continue
            if tokens[0] not in SECTIONS or len(tokens) != 2:
                raise MeshParseError(f"expected a section header, got {line!r}", number)
            if tokens[0] in records:
                raise MeshParseError(f"duplicate section '{tokens[0]}'", number)
            try:
                expected = int(tokens[1])
            except ValueError:
                raise MeshParseError(f"malformed record count {tokens[1]!r}", number)
            if expected < 0:
                raise MeshParseError(f"negative record count {expected}", number)
            current = tokens[0]
            records[current] = []
    last = number

    for section in SECTIONS:
        if section not in records:
            raise MeshParseError(f"missing section '{section}'", last + 1)
    if current is not None and len(records[current]) < expected:
        raise MeshParseError(f"section '{current}' ended after {len(records[current])} of {expected} records", last + 1)

    vertices = np.array(records["vertices"], dtype=float).reshape(-1, 2)
    triangles = np.array(records["triangles"], dtype=np.int64).reshape(-1, 3)
    boundary = np.array(records["boundary"], dtype=np.int64).reshape(-1, 2)

    if reorient and triangles.size and triangles.max() < len(vertices):
        flipped = Mesh(vertices, triangles, boundary).signed_areas < 0
        if np.any(flipped):
            logger.info("reorienting %d clockwise triangles from %s", int(flipped.sum()), path)
            triangles[flipped] = triangles[flipped][:, [0, 2, 1]]
            directed = set(map(tuple, _directed_edges(triangles).tolist()))
            boundary = np.array([e if tuple(e) in directed else e[::-1] for e in boundary.tolist()],
                                dtype=np.int64).reshape(-1, 2)

    return validate_mesh(Mesh(vertices, triangles, boundary))
