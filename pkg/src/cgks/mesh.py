"""Tensor-product Cartesian meshes with periodic topology.

Cells are indexed (i, j, k) on the lattice and flattened in C order,
``c = (i * ny + j) * nz + k``.  All neighbor lookups are index arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from cgks.errors import BoundaryStencilError, MeshError

# Face neighbors: -x, +x, -y, +y, -z, +z.
FACE_OFFSETS = np.array(
    [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)], dtype=np.int64
)
# Edge neighbors: cells sharing exactly one edge with the target.
EDGE_OFFSETS = np.array(
    [
        (-1, -1, 0), (-1, 1, 0), (1, -1, 0), (1, 1, 0),
        (-1, 0, -1), (-1, 0, 1), (1, 0, -1), (1, 0, 1),
        (0, -1, -1), (0, -1, 1), (0, 1, -1), (0, 1, 1),
    ],
    dtype=np.int64,
)
STENCIL_OFFSETS = np.concatenate([FACE_OFFSETS, EDGE_OFFSETS])



def _edge_dirs() -> np.ndarray:
    # Directional derivatives carried by each edge neighbor, in reference
    # coordinates: along the shared edge, then along the diagonal toward it.
    out = np.zeros((len(EDGE_OFFSETS), 2, 3))
    for n, o in enumerate(EDGE_OFFSETS):
        out[n, 0, np.flatnonzero(o == 0)[0]] = 1.0
        out[n, 1] = o / np.sqrt(2.0)
    return out


EDGE_DIRS = _edge_dirs()

GAUSS_2 = 0.5 / np.sqrt(3.0)


def transverse_axes(axis: int) -> tuple[int, int]:
    """Cyclic transverse axes; (axis, t1, t2) is a right-handed frame."""
    return (axis + 1) % 3, (axis + 2) % 3


def face_gauss_ref(order_mode: str = "fifth") -> tuple[np.ndarray, np.ndarray]:
    """Face-local Gauss points on [-1/2, 1/2]^2 and normalized weights.

    Point ordering for the 2x2 rule is (t1, t2) = (-g,-g), (-g,+g), (+g,-g), (+g,+g).
    """
    if order_mode == "fifth":
        g = GAUSS_2
        pts = np.array([(-g, -g), (-g, g), (g, -g), (g, g)])
        return pts, np.full(4, 0.25)
    if order_mode == "second":
        return np.zeros((1, 2)), np.ones(1)
    raise ValueError(f"unknown order mode {order_mode!r}")


@dataclass(frozen=True)
class CellGeom:
    centroid: np.ndarray
    volume: float
    scales: np.ndarray


@dataclass(frozen=True)
class FaceQuad:
    area: float
    normal: np.ndarray
    gauss_points: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class StencilMap:
    face_neighbors: np.ndarray
    edge_neighbors: np.ndarray

    @property
    def all(self) -> np.ndarray:
        return np.concatenate([self.face_neighbors, self.edge_neighbors])


@dataclass(frozen=True, eq=False)
class StructuredMesh:
    dims: tuple[int, int, int]
    node_coords: tuple[np.ndarray, np.ndarray, np.ndarray]
    periodic: tuple[bool, bool, bool] = (True, True, True)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def ncells(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    @cached_property
    def widths(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.diff(n) for n in self.node_coords)

    @cached_property
    def centers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(0.5 * (n[1:] + n[:-1]) for n in self.node_coords)

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([n[-1] - n[0] for n in self.node_coords])

    @cached_property
    def volumes(self) -> np.ndarray:
        hx, hy, hz = self.widths
        return hx[:, None, None] * hy[None, :, None] * hz[None, None, :]

    @cached_property
    def scales(self) -> np.ndarray:
        """Per-cell (h_x, h_y, h_z), shape (nx, ny, nz, 3)."""
        hx, hy, hz = self.widths
        out = np.empty(self.dims + (3,))
        out[..., 0] = hx[:, None, None]
        out[..., 1] = hy[None, :, None]
        out[..., 2] = hz[None, None, :]
        return out

    @cached_property
    def is_uniform(self) -> bool:
        return all(np.allclose(h, h[0], rtol=1e-13, atol=0.0) for h in self.widths)

    @property
    def min_width(self) -> float:
        return float(min(h.min() for h in self.widths))

    def index(self, i: int, j: int, k: int) -> int:
        nx, ny, nz = self.dims
        return (i * ny + j) * nz + k

    def unravel(self, c: int) -> tuple[int, int, int]:
        return tuple(int(v) for v in np.unravel_index(c, self.dims))

    def cell_geom(self, cell) -> CellGeom:
        i, j, k = self.unravel(cell) if np.isscalar(cell) else cell
        centroid = np.array([self.centers[0][i], self.centers[1][j], self.centers[2][k]])
        scales = np.array([self.widths[0][i], self.widths[1][j], self.widths[2][k]])
        return CellGeom(centroid=centroid, volume=float(np.prod(scales)), scales=scales)

    def neighbor_offset_center(self, axis: int, i: int, offset: int) -> float:
        """Signed centroid distance from cell i to cell i+offset along ``axis``.

        Periodic wraparound continues the lattice, so the distance is measured
        through the shared face rather than across the domain.
        """
        h = self.widths[axis]
        n = len(h)
        if offset == 0:
            return 0.0
        if not self.periodic[axis] and not (0 <= i + offset < n):
            raise BoundaryStencilError(
                f"cell index {i}{offset:+d} leaves non-periodic axis {axis}"
            )
        step = 1 if offset > 0 else -1
        dist = 0.5 * h[i]
        cur = i
        for s in range(abs(offset)):
            cur = (cur + step) % n
            dist += h[cur] if s < abs(offset) - 1 else 0.5 * h[cur]
        return step * dist

    @cached_property
    def neighbor_table(self) -> np.ndarray:
        """(ncells, 18) flat indices: 6 face neighbors then 12 edge neighbors."""
        nx, ny, nz = self.dims
        I, J, K = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
        out = np.empty((self.ncells, len(STENCIL_OFFSETS)), dtype=np.int64)
        for s, (di, dj, dk) in enumerate(STENCIL_OFFSETS):
            idx = []
            for ax, (arr, d, n) in enumerate(zip((I, J, K), (di, dj, dk), self.dims)):
                shifted = arr + d
                if not self.periodic[ax] and ((shifted < 0) | (shifted >= n)).any():
                    raise BoundaryStencilError(
                        f"stencil offset {(di, dj, dk)} leaves non-periodic axis {ax}; "
                        "only periodic ghost policy is supported"
                    )
                idx.append(shifted % n)
            out[:, s] = ((idx[0] * ny + idx[1]) * nz + idx[2]).ravel()
        return out


def build_mesh(
    dims: Sequence[int],
    axis_spacing: Sequence,
    periodic: Sequence[bool] = (True, True, True),
) -> StructuredMesh:
    """Build a tensor-product mesh.

    Each entry of ``axis_spacing`` is either ``(lo, hi)`` for uniform spacing or
    an explicit node array of length ``dims[axis] + 1``.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or len(axis_spacing) != 3:
        raise MeshError("need three axes")
    if any(d < 1 for d in dims):
        raise MeshError(f"cell counts must be positive, got {dims}")
    nodes = []
    for ax, (n, spec) in enumerate(zip(dims, axis_spacing)):
        arr = np.asarray(spec, dtype=float)
        if arr.shape == (2,) and n != 1:
            arr = np.linspace(arr[0], arr[1], n + 1)
        elif arr.shape == (2,) and n == 1:
            pass
        if arr.ndim != 1 or len(arr) != n + 1:
            raise MeshError(f"axis {ax}: expected {n + 1} nodes, got shape {arr.shape}")
        if not np.all(np.diff(arr) > 0):
            raise MeshError(f"axis {ax}: node coordinates must be strictly increasing")
        nodes.append(arr)
    return StructuredMesh(dims=dims, node_coords=tuple(nodes), periodic=tuple(bool(p) for p in periodic))


def stencil_neighbors(mesh: StructuredMesh, cell) -> StencilMap:
    c = mesh.index(*cell) if not np.isscalar(cell) else int(cell)
    row = mesh.neighbor_table[c]
    return StencilMap(face_neighbors=row[:6].copy(), edge_neighbors=row[6:].copy())


def face_quadrature(mesh: StructuredMesh, order_mode: str = "fifth") -> list[dict]:
    """Quadrature for every face, grouped by normal axis.

    Entry ``a`` describes the faces normal to axis ``a`` located on the plus side
    of each cell: ``area`` (nx, ny, nz), ``normal`` (3,), ``points``
    (nx, ny, nz, K, 3) physical coordinates, ``weights`` (K,) summing to one.
    On a periodic axis the plus face of the last cell is the minus face of the
    first, so every face appears exactly once.
    """
    ref, w = face_gauss_ref(order_mode)
    hx, hy, hz = mesh.widths
    cx, cy, cz = mesh.centers
    C = np.stack(np.meshgrid(cx, cy, cz, indexing="ij"), axis=-1)
    H = mesh.scales
    out = []
    for a in range(3):
        t1, t2 = transverse_axes(a)
        normal = np.zeros(3)
        normal[a] = 1.0
        pts = np.repeat(C[..., None, :], len(w), axis=-2).copy()
        pts[..., a] += 0.5 * H[..., None, a]
        pts[..., t1] += ref[:, 0] * H[..., None, t1]
        pts[..., t2] += ref[:, 1] * H[..., None, t2]
        area = H[..., t1] * H[..., t2]
        out.append({"area": area, "normal": normal, "points": pts, "weights": w.copy()})
    return out


def single_face_quad(mesh: StructuredMesh, cell, axis: int, side: int, order_mode: str = "fifth") -> FaceQuad:
    """FaceQuad of one face of ``cell``; ``side`` is -1 or +1."""
    g = mesh.cell_geom(cell)
    ref, w = face_gauss_ref(order_mode)
    t1, t2 = transverse_axes(axis)
    pts = np.repeat(g.centroid[None, :], len(w), axis=0)
    pts[:, axis] += 0.5 * side * g.scales[axis]
    pts[:, t1] += ref[:, 0] * g.scales[t1]
    pts[:, t2] += ref[:, 1] * g.scales[t2]
    normal = np.zeros(3)
    normal[axis] = float(side)
    return FaceQuad(area=float(g.scales[t1] * g.scales[t2]), normal=normal, gauss_points=pts, weights=w)


def reference_map(cell: CellGeom, x) -> np.ndarray:
    return (np.asarray(x, dtype=float) - cell.centroid) / cell.scales


def inverse_reference_map(cell: CellGeom, delta) -> np.ndarray:
    return cell.centroid + np.asarray(delta, dtype=float) * cell.scales


def neighbor_boxes(mesh: StructuredMesh, cell) -> np.ndarray:
    """Stencil cells as boxes in the reference coordinates of ``cell``.

    Returns (18, 3, 2) lower/upper bounds, same ordering as ``STENCIL_OFFSETS``.
    """
    i, j, k = mesh.unravel(cell) if np.isscalar(cell) else cell
    own = (i, j, k)
    boxes = np.empty((len(STENCIL_OFFSETS), 3, 2))
    for s, off in enumerate(STENCIL_OFFSETS):
        for a in range(3):
            h = mesh.widths[a]
            n = len(h)
            h0 = h[own[a]]
            d = mesh.neighbor_offset_center(a, own[a], int(off[a]))
            hn = h[(own[a] + off[a]) % n]
            boxes[s, a] = ((d - 0.5 * hn) / h0, (d + 0.5 * hn) / h0)
    return boxes


def geometry_key(mesh: StructuredMesh, cell) -> tuple:
    """Hashable signature of a cell's stencil shape in reference coordinates.

    Cells with equal keys share every reconstruction matrix.
    """
    b = neighbor_boxes(mesh, cell)
    return tuple(np.round(b.ravel(), 12))


def axis_patterns(mesh: StructuredMesh, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Neighbor-width ratios along one axis.

    Returns ``(ids, patterns)``: ``ids[i]`` indexes into ``patterns`` whose rows
    are ``(h[i-1]/h[i], h[i+1]/h[i])``, rounded to 12 digits so that cells with
    equal local spacing share a pattern.  Non-periodic ends reuse their own width.
    """
    h = mesh.widths[axis]
    if mesh.periodic[axis]:
        hm, hp = np.roll(h, 1), np.roll(h, -1)
    else:
        hm = np.concatenate([h[:1], h[:-1]])
        hp = np.concatenate([h[1:], h[-1:]])
    ratios = np.round(np.stack([hm / h, hp / h], axis=1), 12)
    patterns, ids = np.unique(ratios, axis=0, return_inverse=True)
    return ids.reshape(-1).astype(np.int64), patterns


def boxes_from_ratios(ratios: np.ndarray) -> np.ndarray:
    """Reference-coordinate stencil boxes (18, 3, 2) from per-axis (r_minus, r_plus)."""
    boxes = np.empty((len(STENCIL_OFFSETS), 3, 2))
    for s, off in enumerate(STENCIL_OFFSETS):
        for a in range(3):
            rm, rp = ratios[a]
            if off[a] < 0:
                boxes[s, a] = (-0.5 - rm, -0.5)
            elif off[a] > 0:
                boxes[s, a] = (0.5, 0.5 + rp)
            else:
                boxes[s, a] = (-0.5, 0.5)
    return boxes


def geometry_classes(mesh: StructuredMesh) -> tuple[np.ndarray, list[np.ndarray]]:
    """Group cells with identical reference stencils.

    Returns a class id per flat cell and, per class, its (18, 3, 2) boxes.
    """
    ids, pats = zip(*(axis_patterns(mesh, a) for a in range(3)))
    npat = [len(p) for p in pats]
    I, J, K = np.meshgrid(ids[0], ids[1], ids[2], indexing="ij")
    combo = ((I * npat[1] + J) * npat[2] + K).ravel()
    used, cls = np.unique(combo, return_inverse=True)
    boxes = []
    for u in used:
        pi, rem = divmod(int(u), npat[1] * npat[2])
        pj, pk = divmod(rem, npat[2])
        boxes.append(boxes_from_ratios(np.array([pats[0][pi], pats[1][pj], pats[2][pk]])))
    return cls.reshape(-1).astype(np.int64), boxes
