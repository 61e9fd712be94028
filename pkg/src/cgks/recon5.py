"""Fifth-order compact reconstruction with GENO blending.

All polynomials live on the reference cell: delta = (x - x0)/h per axis, so the
target cell is [-1/2, 1/2]^3.  The quartic uses the 34 zero-mean monomials
p_d = delta^d/d! - mean(delta^d/d!) with 1 <= |d| <= 4.

Data layout of the 72-entry reconstruction vector (all derivatives scaled to
reference units, i.e. multiplied by the target cell's h along that axis):

    [0:18)   Q_k - Q_0 for the 6 face and 12 edge neighbors
    [18:36)  face-neighbor cell-averaged gradients, index 18 + 3*m + axis
    [36:60)  edge-neighbor directional derivatives along EDGE_DIRS[n, j],
             index 36 + 2*n + j
    [60:72)  own line-averaged derivatives, index 60 + 4*axis + k
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from cgks.errors import NumericalError
from cgks.mesh import EDGE_DIRS, GAUSS_2, face_gauss_ref, geometry_classes, transverse_axes

NDATA = 72
EPS_GENO = 1e-15
LINEAR_WEIGHT = 1.0 / 6.0


def _exponents() -> np.ndarray:
    out = []
    for deg in range(1, 5):
        for d1 in range(deg, -1, -1):
            for d2 in range(deg - d1, -1, -1):
                out.append((d1, d2, deg - d1 - d2))
    return np.array(out, dtype=np.int64)


EXPONENTS = _exponents()
NBASIS = len(EXPONENTS)
_FACT = np.array([math.factorial(n) for n in range(8)], dtype=float)


def _axis_mean(d, lo, hi):
    """Mean of t^d/d! over [lo, hi] (vectorized over d)."""
    d = np.asarray(d)
    return (hi ** (d + 1) - lo ** (d + 1)) / (_FACT[d + 1] * (hi - lo))


def _box_monomial_mean(box, exps):
    out = np.ones(len(exps))
    for a in range(3):
        out *= _axis_mean(exps[:, a], box[a, 0], box[a, 1])
    return out


OWN_BOX = np.array([[-0.5, 0.5]] * 3)
OWN_MEAN = _box_monomial_mean(OWN_BOX, EXPONENTS)


def box_mean_row(box) -> np.ndarray:
    """Row r with r @ a = mean of sum_d a_d p_d over ``box``."""
    return _box_monomial_mean(np.asarray(box, dtype=float), EXPONENTS) - OWN_MEAN


def box_deriv_row(box, axis: int) -> np.ndarray:
    box = np.asarray(box, dtype=float)
    e = EXPONENTS.copy()
    has = e[:, axis] > 0
    e[:, axis] = np.maximum(e[:, axis] - 1, 0)
    return np.where(has, _box_monomial_mean(box, e), 0.0)


def point_value_row(delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    v = np.ones(NBASIS)
    for a in range(3):
        v *= delta[a] ** EXPONENTS[:, a] / _FACT[EXPONENTS[:, a]]
    return v - OWN_MEAN


def point_deriv_row(delta, axis: int) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    e = EXPONENTS.copy()
    has = e[:, axis] > 0
    e[:, axis] = np.maximum(e[:, axis] - 1, 0)
    v = np.ones(NBASIS)
    for a in range(3):
        v *= delta[a] ** e[:, a] / _FACT[e[:, a]]
    return np.where(has, v, 0.0)


def line_pairs() -> np.ndarray:
    """Transverse reference coordinates (t1, t2) of the 4 lines per axis."""
    return face_gauss_ref("fifth")[0]


def line_row(axis: int, k: int) -> np.ndarray:
    """Line average of d/d(delta_axis) across the cell at transverse point k."""
    t1, t2 = transverse_axes(axis)
    tp = line_pairs()[k]
    lo = np.zeros(3)
    lo[axis] = -0.5
    lo[t1], lo[t2] = tp
    hi = lo.copy()
    hi[axis] = 0.5
    return point_value_row(hi) - point_value_row(lo)


@dataclass(frozen=True)
class CLSOperator:
    """Linear map from the 72-entry data vector to the 34 quartic coefficients."""

    M: np.ndarray
    constraint_rows: np.ndarray
    ls_rows: np.ndarray
    cond: float


def build_cls(boxes: np.ndarray, weights=(1.0, 1.0, 1.0)) -> CLSOperator:
    """Constrained least squares by null-space elimination.

    ``boxes`` (18, 3, 2) are the stencil cells in reference coordinates in
    face-then-edge order.
    """
    h1, h2, h3 = weights
    C = np.array([box_mean_row(b) for b in boxes])
    rows, w = [], []
    for m in range(6):
        for a in range(3):
            rows.append(box_deriv_row(boxes[m], a))
            w.append(h1)
    for n in range(12):
        for j in range(2):
            d = EDGE_DIRS[n, j]
            rows.append(sum(d[a] * box_deriv_row(boxes[6 + n], a) for a in range(3)))
            w.append(h2)
    for a in range(3):
        for k in range(4):
            rows.append(line_row(a, k))
            w.append(h3)
    A = np.array(rows)
    wv = np.array(w)

    U, s, Vt = np.linalg.svd(C)
    rank = int(np.sum(s > s[0] * 1e-12))
    if rank != C.shape[0]:
        raise NumericalError(f"cell-average constraints are rank deficient ({rank} < {C.shape[0]})")
    Cp = np.linalg.pinv(C)
    Z = Vt[rank:].T
    AZ = wv[:, None] * (A @ Z)
    s2 = np.linalg.svd(AZ, compute_uv=False)
    if s2[-1] <= s2[0] * 1e-12:
        raise NumericalError("least-squares block is rank deficient after constraint elimination")
    AZp = np.linalg.pinv(AZ)
    Sr = np.zeros((18, NDATA))
    Sr[:, :18] = np.eye(18)
    Sb = np.zeros((A.shape[0], NDATA))
    Sb[:, 18:] = np.diag(wv)
    part = Cp @ Sr
    M = part + Z @ (AZp @ (Sb - (wv[:, None] * A) @ part))
    return CLSOperator(M=M, constraint_rows=C, ls_rows=A, cond=float(s2[0] / s2[-1]))


def face_point_refs(face: int) -> np.ndarray:
    """Reference coordinates (4, 3) of the Gauss points on face ``face`` = 2*axis + side."""
    a, side = divmod(face, 2)
    t1, t2 = transverse_axes(a)
    pts = np.zeros((4, 3))
    pts[:, a] = 0.5 if side else -0.5
    ref = face_gauss_ref("fifth")[0]
    pts[:, t1] = ref[:, 0]
    pts[:, t2] = ref[:, 1]
    return pts


def interior_point_refs() -> np.ndarray:
    g = GAUSS_2
    return np.array([(i, j, k) for i in (-g, g) for j in (-g, g) for k in (-g, g)])


def face_eval_matrix(M: np.ndarray) -> np.ndarray:
    """(6, 4, 4, 72): value and derivatives along (normal, t1, t2) at face Gauss points."""
    out = np.empty((6, 4, 4, NDATA))
    for f in range(6):
        a = f // 2
        t1, t2 = transverse_axes(a)
        for k, x in enumerate(face_point_refs(f)):
            out[f, k, 0] = point_value_row(x) @ M
            out[f, k, 1] = point_deriv_row(x, a) @ M
            out[f, k, 2] = point_deriv_row(x, t1) @ M
            out[f, k, 3] = point_deriv_row(x, t2) @ M
    return out


def interior_eval_matrix(M: np.ndarray) -> np.ndarray:
    """(8, 4, 72): value and x/y/z derivatives at the 2x2x2 interior Gauss points."""
    pts = interior_point_refs()
    out = np.empty((8, 4, NDATA))
    for p, x in enumerate(pts):
        out[p, 0] = point_value_row(x) @ M
        for a in range(3):
            out[p, 1 + a] = point_deriv_row(x, a) @ M
    return out


@dataclass(frozen=True)
class ReconTables:
    cell_class: np.ndarray
    W_face: np.ndarray
    W_int: np.ndarray
    face_offset: np.ndarray  # (ncls, 6) neighbor center offset along its axis
    cond: np.ndarray


@lru_cache(maxsize=64)
def _class_tables(key: bytes, weights: tuple):
    boxes = np.frombuffer(key).reshape(18, 3, 2)
    op = build_cls(boxes, weights)
    off = np.array([boxes[m, m // 2].mean() for m in range(6)])
    return face_eval_matrix(op.M), interior_eval_matrix(op.M), off, op.cond


def build_recon_tables(mesh, weights=(1.0, 1.0, 1.0)) -> ReconTables:
    cls, boxes = geometry_classes(mesh)
    Wf, Wi, off, cond = [], [], [], []
    for b in boxes:
        f, i, o, c = _class_tables(np.ascontiguousarray(b).tobytes(), tuple(float(w) for w in weights))
        Wf.append(f)
        Wi.append(i)
        off.append(o)
        cond.append(c)
    return ReconTables(cls, np.array(Wf), np.array(Wi), np.array(off), np.array(cond))


# ---------------------------------------------------------------------------
# Per-cell public API.


@dataclass
class CellDofs:
    q0: np.ndarray
    grad: np.ndarray  # (3, 5)
    line: np.ndarray  # (3, 4, 5), line index k per axis

    @classmethod
    def from_lines(cls, q0, line) -> "CellDofs":
        line = np.asarray(line, dtype=float)
        return cls(np.asarray(q0, dtype=float), line.mean(axis=1), line)


@dataclass
class QuarticPoly:
    q0: np.ndarray
    a: np.ndarray  # (34, ncomp)

    def value(self, delta) -> np.ndarray:
        return self.q0 + point_value_row(delta) @ self.a

    def deriv_ref(self, delta) -> np.ndarray:
        return np.array([point_deriv_row(delta, ax) @ self.a for ax in range(3)])


@dataclass
class LinearPoly:
    q0: np.ndarray
    b: np.ndarray  # (3, ncomp) reference-coordinate slopes

    def value(self, delta) -> np.ndarray:
        return self.q0 + np.asarray(delta, dtype=float) @ self.b


@dataclass
class GenoOutput:
    value: np.ndarray
    deriv: np.ndarray
    chi: np.ndarray
    w: np.ndarray


def assemble_data(dofs: CellDofs, neighbors, scales) -> np.ndarray:
    """72-row data matrix for one cell; ``neighbors`` are 18 CellDofs in stencil order."""
    h = np.asarray(scales, dtype=float)
    q0 = np.atleast_1d(np.asarray(dofs.q0, dtype=float))
    D = np.zeros((NDATA,) + q0.shape)
    for s, nb in enumerate(neighbors):
        D[s] = np.asarray(nb.q0) - q0
    for m in range(6):
        for a in range(3):
            D[18 + 3 * m + a] = h[a] * np.asarray(neighbors[m].grad)[a]
    for n in range(12):
        g = np.asarray(neighbors[6 + n].grad)
        for j in range(2):
            D[36 + 2 * n + j] = sum(EDGE_DIRS[n, j, a] * h[a] * g[a] for a in range(3))
    for a in range(3):
        for k in range(4):
            D[60 + 4 * a + k] = h[a] * np.asarray(dofs.line)[a, k]
    return D


def quartic_cls(dofs: CellDofs, neighbors, boxes, scales=(1.0, 1.0, 1.0), weights=(1.0, 1.0, 1.0)) -> QuarticPoly:
    op = build_cls(np.asarray(boxes, dtype=float), weights)
    D = assemble_data(dofs, neighbors, scales)
    return QuarticPoly(np.atleast_1d(np.asarray(dofs.q0, dtype=float)), op.M @ D)


def substencil_linears(dofs: CellDofs, face_avgs, face_offsets, scales=(1.0, 1.0, 1.0)) -> list[LinearPoly]:
    """Six linear polynomials, one per face neighbor.

    The normal slope matches the neighbor average exactly; the two transverse
    slopes are least-squares fits to the own line derivatives along those
    axes, i.e. their means.
    """
    h = np.asarray(scales, dtype=float)
    q0 = np.atleast_1d(np.asarray(dofs.q0, dtype=float))
    line = np.asarray(dofs.line, dtype=float)
    trans = np.array([h[a] * line[a].mean(axis=0) for a in range(3)])
    out = []
    for m in range(6):
        a = m // 2
        b = trans.copy()
        b[a] = (np.asarray(face_avgs[m], dtype=float) - q0) / face_offsets[m]
        out.append(LinearPoly(q0, b))
    return out


def smoothness(poly: LinearPoly) -> np.ndarray:
    return np.sum(np.asarray(poly.b) ** 2, axis=0)


def chi_indicator(IS: np.ndarray, c: float = 0.01) -> np.ndarray:
    """Blending weight of the quartic, from the spread of sub-stencil indicators.

    IS has the six sub-stencils on axis 0.  zeta is the relative spread; the
    map exp(-zeta^4) is flat near zero and vanishes to round-off well before
    the spread saturates at 1/c.
    """
    IS = np.asarray(IS, dtype=float)
    lo = IS.min(axis=0)
    hi = IS.max(axis=0)
    zeta = (hi - lo) / (lo + EPS_GENO + c * hi)
    return np.exp(-zeta ** 4)


def geno_weights(IS: np.ndarray) -> np.ndarray:
    wb = LINEAR_WEIGHT / (np.asarray(IS, dtype=float) + EPS_GENO) ** 5
    return wb / wb.sum(axis=0)


def geno_combine(p4: QuarticPoly, subs, x_ref, scales=(1.0, 1.0, 1.0), chi_c: float = 0.01,
                 force_linear: bool = False) -> GenoOutput:
    """Blend the quartic with the weighted sub-stencil linears at ``x_ref``.

    Derivatives are returned in physical coordinates.
    """
    h = np.asarray(scales, dtype=float)
    IS = np.array([smoothness(s) for s in subs])
    w = geno_weights(IS)
    chi = np.ones(IS.shape[1]) if force_linear else chi_indicator(IS, chi_c)
    lin_v = sum(w[m] * subs[m].value(x_ref) for m in range(len(subs)))
    lin_d = sum(w[m] * np.asarray(subs[m].b) for m in range(len(subs)))
    value = chi * p4.value(x_ref) + (1 - chi) * lin_v
    deriv = chi * p4.deriv_ref(x_ref) + (1 - chi) * lin_d
    return GenoOutput(value=value, deriv=deriv / h[:, None], chi=chi, w=w)
