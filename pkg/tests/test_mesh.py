from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from cgks.errors import BoundaryStencilError, MeshError
from cgks.mesh import (
    EDGE_DIRS,
    STENCIL_OFFSETS,
    build_mesh,
    face_gauss_ref,
    face_quadrature,
    geometry_classes,
    inverse_reference_map,
    neighbor_boxes,
    reference_map,
    single_face_quad,
    stencil_neighbors,
)


def test_uniform_cube_volumes():
    m = build_mesh((4, 4, 4), [(-math.pi, math.pi)] * 3)
    np.testing.assert_allclose(m.volumes, (math.pi / 2) ** 3, rtol=1e-14)
    assert m.is_uniform


def test_single_unit_cell():
    m = build_mesh((1, 1, 1), [(0.0, 1.0)] * 3)
    g = m.cell_geom(0)
    np.testing.assert_allclose(g.centroid, [0.5, 0.5, 0.5])
    assert g.volume == 1.0


def test_explicit_nodes_give_constant_width():
    m = build_mesh((3, 1, 1), [[0, 0.04, 0.08, 0.12], (0, 1), (0, 1)])
    np.testing.assert_allclose(m.widths[0], 0.04, rtol=1e-12)


def test_construction_errors():
    with pytest.raises(MeshError):
        build_mesh((3, 1, 1), [[0, 0.08, 0.04, 0.12], (0, 1), (0, 1)])
    with pytest.raises(MeshError):
        build_mesh((0, 1, 1), [(0, 1)] * 3)
    with pytest.raises(MeshError):
        build_mesh((2, 1, 1), [[0, 1], (0, 1), (0, 1)][:2])


def test_face_gauss_rule():
    pts, w = face_gauss_ref("fifth")
    np.testing.assert_allclose(w, 0.25)
    x, _ = np.polynomial.legendre.leggauss(2)
    np.testing.assert_allclose(np.sort(np.unique(np.round(pts, 15))), np.sort(x / 2), atol=1e-15)
    assert abs(pts[0, 0]) == pytest.approx(1 / (2 * math.sqrt(3)), abs=1e-15)
    pts2, w2 = face_gauss_ref("second")
    np.testing.assert_array_equal(pts2, [[0.0, 0.0]])
    np.testing.assert_array_equal(w2, [1.0])


def test_face_rule_exact_for_cubics():
    pts, w = face_gauss_ref("fifth")
    for a, b in itertools.product(range(4), repeat=2):
        exact = (0.5 ** (a + 1) - (-0.5) ** (a + 1)) / (a + 1) * (0.5 ** (b + 1) - (-0.5) ** (b + 1)) / (b + 1)
        assert np.sum(w * pts[:, 0] ** a * pts[:, 1] ** b) == pytest.approx(exact, abs=1e-16)


def test_single_face_quad_geometry():
    m = build_mesh((2, 2, 2), [(0, 2), (0, 1), (0, 4)])
    fq = single_face_quad(m, (1, 0, 1), axis=0, side=1, order_mode="second")
    assert fq.area == pytest.approx(0.5 * 2.0)
    np.testing.assert_allclose(fq.gauss_points, [[2.0, 0.25, 3.0]])
    np.testing.assert_allclose(fq.normal, [1, 0, 0])


def test_face_quadrature_conserves_geometry():
    nodes = [np.array([0, 0.3, 1.0, 1.2, 2.0]), (0.0, 1.0), np.array([0, 0.5, 0.7, 2.0])]
    m = build_mesh((4, 2, 3), nodes)
    fq = face_quadrature(m)
    H = m.scales
    # Closed cell surface: sum of outward area vectors is zero, plus-face areas match transverse widths.
    for a in range(3):
        t1, t2 = (a + 1) % 3, (a + 2) % 3
        np.testing.assert_allclose(fq[a]["area"], H[..., t1] * H[..., t2])
        assert fq[a]["weights"].sum() == pytest.approx(1.0)
    # Divergence theorem on f = x_a per axis gives the cell volume.
    for a in range(3):
        plus = fq[a]["points"][..., a].mean(axis=-1)
        minus = plus - H[..., a]
        np.testing.assert_allclose((plus - minus) * fq[a]["area"], m.volumes, rtol=1e-13)


def _lattice_neighbors(dims, cell):
    out = []
    for off in STENCIL_OFFSETS:
        idx = tuple((c + o) % n for c, o, n in zip(cell, off, dims))
        out.append(np.ravel_multi_index(idx, dims))
    return out


@pytest.mark.parametrize("dims", [(4, 4, 4), (5, 5, 5), (2, 2, 2), (3, 1, 2)])
def test_stencil_matches_brute_force(dims):
    m = build_mesh(dims, [(0, 1)] * 3)
    for cell in itertools.product(*(range(n) for n in dims)):
        st = stencil_neighbors(m, cell)
        assert len(st.face_neighbors) == 6 and len(st.edge_neighbors) == 12
        np.testing.assert_array_equal(st.all, _lattice_neighbors(dims, cell))


def test_wraparound_and_distinct_interior():
    m = build_mesh((4, 4, 4), [(0, 1)] * 3)
    assert stencil_neighbors(m, (0, 0, 0)).face_neighbors[0] == m.index(3, 0, 0)
    m5 = build_mesh((5, 5, 5), [(0, 1)] * 3)
    assert len(set(stencil_neighbors(m5, (2, 2, 2)).all.tolist())) == 18


def test_non_periodic_boundary_raises():
    m = build_mesh((4, 4, 4), [(0, 1)] * 3, periodic=(False, True, True))
    with pytest.raises(BoundaryStencilError):
        stencil_neighbors(m, (0, 1, 1))


def test_reference_map_examples():
    m = build_mesh((1, 1, 1), [(0, 2), (0, 1), (0, 1)])
    g = m.cell_geom(0)
    np.testing.assert_allclose(reference_map(g, g.centroid + [1, 0, 0]), [0.5, 0, 0])
    np.testing.assert_allclose(reference_map(g, g.centroid), [0, 0, 0])
    x = np.array([0.3, 0.9, 0.1])
    np.testing.assert_allclose(inverse_reference_map(g, reference_map(g, x)), x, rtol=1e-15)


def test_edge_dirs_follow_edge_and_diagonal():
    for n, off in enumerate(STENCIL_OFFSETS[6:]):
        d = EDGE_DIRS[n]
        np.testing.assert_allclose(d @ d.T, np.eye(2), atol=1e-15)
        edge_axis = int(np.flatnonzero(off == 0)[0])
        assert d[0, edge_axis] == 1.0
        np.testing.assert_allclose(d[1], off / np.linalg.norm(off))


def test_neighbor_boxes_on_stretched_mesh():
    x = np.array([0.0, 1.0, 3.0, 4.0])
    m = build_mesh((3, 1, 1), [x, (0, 1), (0, 1)])
    b = neighbor_boxes(m, (1, 0, 0))
    # Target width 2; neighbors of width 1 sit at reference [-1, -0.5] and [0.5, 1].
    np.testing.assert_allclose(b[0, 0], [-1.0, -0.5])
    np.testing.assert_allclose(b[1, 0], [0.5, 1.0])
    np.testing.assert_allclose(b[0, 1], [-0.5, 0.5])


def test_geometry_classes_uniform_and_stretched():
    cls, boxes = geometry_classes(build_mesh((4, 4, 4), [(0, 1)] * 3))
    assert len(boxes) == 1 and np.all(cls == 0)
    x = np.array([0.0, 1.0, 3.0, 4.0, 4.5])
    m = build_mesh((4, 2, 2), [x, (0, 1), (0, 1)])
    cls, boxes = geometry_classes(m)
    for c in range(m.ncells):
        np.testing.assert_allclose(boxes[cls[c]], neighbor_boxes(m, c), atol=1e-12)
