"""Limited linear reconstruction for the second-order scheme (per-cell API).

Coordinates are reference coordinates of the target cell (unit box centered
at the origin), so the linear basis x_a is already zero-mean and the slope
``b[a]`` is the change of Q per unit reference length.  The field-wide kernel
in :mod:`cgks._kernels` performs the same arithmetic for every cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cgks.errors import NumericalError

DEFAULT_K_VENKAT = 0.3


@dataclass
class LinearPoly:
    q0: np.ndarray  # (5,)
    b: np.ndarray  # (3, 5), per unit reference length
    scales: np.ndarray  # (3,) physical cell widths

    def value(self, x_ref) -> np.ndarray:
        return self.q0 + np.asarray(x_ref, dtype=float) @ self.b


@dataclass
class LimiterState:
    phi0: np.ndarray  # (5,), each in [0, 1]


def ls_linear(q0, neighbors, offsets) -> LinearPoly:
    """Least-squares slopes from the six face-neighbor averages.

    ``neighbors`` is (6, 5) ordered (-x, +x, -y, +y, -z, +z); ``offsets`` is
    (6,) signed center offsets along the pair's axis in target reference units
    (-1, 1 on a uniform mesh; see :func:`neighbor_offsets`).
    """
    q0 = np.asarray(q0, dtype=float)
    nb = np.asarray(neighbors, dtype=float)
    d = np.asarray(offsets, dtype=float)
    if nb.shape[0] != 6 or d.shape != (6,):
        raise NumericalError("need six face neighbors with six offsets")
    b = np.empty((3, q0.shape[-1]))
    for a in range(3):
        dm, dp = d[2 * a], d[2 * a + 1]
        den = dm * dm + dp * dp
        if not den > 0:
            raise NumericalError("degenerate least-squares stencil")
        b[a] = (dm * (nb[2 * a] - q0) + dp * (nb[2 * a + 1] - q0)) / den
    return LinearPoly(q0, b, np.ones(3))


def neighbor_offsets(h_own, h_nb) -> np.ndarray:
    """Reference-unit center offsets of the six face neighbors.

    ``h_own`` (3,) widths of the target cell, ``h_nb`` (6,) widths of each
    neighbor along the pair's axis.
    """
    h_own = np.asarray(h_own, dtype=float)
    h_nb = np.asarray(h_nb, dtype=float)
    out = np.empty(6)
    for a in range(3):
        out[2 * a] = -0.5 - 0.5 * h_nb[2 * a] / h_own[a]
        out[2 * a + 1] = 0.5 + 0.5 * h_nb[2 * a + 1] / h_own[a]
    return out


def venkat_phi(d1, d2, eps2):
    """Smooth Venkatakrishnan limiter function, clipped to [0, 1]; 1 when d2 == 0."""
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    num = d1 * d1 + eps2 + 2.0 * d2 * d1
    den = d1 * d1 + 2.0 * d2 * d2 + d1 * d2 + eps2
    with np.errstate(invalid="ignore", divide="ignore"):
        phi = np.where(d2 == 0.0, 1.0, num / np.where(den == 0.0, 1.0, den))
    return np.minimum(1.0, phi)


def venkat_limit(poly: LinearPoly, neighbors, k_venkat: float = DEFAULT_K_VENKAT, h=None) -> LimiterState:
    """phi0 = min over the six face midpoints of the limiter function, per component.

    ``h`` is the length in eps^2 = (K h)^3; defaults to the geometric mean of
    the cell widths stored on ``poly``.
    """
    nb = np.asarray(neighbors, dtype=float)
    q0 = poly.q0
    qmax = np.maximum(q0, nb.max(axis=0))
    qmin = np.minimum(q0, nb.min(axis=0))
    if h is None:
        h = float(np.prod(poly.scales)) ** (1.0 / 3.0)
    eps2 = (k_venkat * h) ** 3
    phi = np.ones_like(q0)
    for f in range(6):
        a, s = divmod(f, 2)
        d2 = poly.b[a] * (0.5 if s == 1 else -0.5)
        d1 = np.where(d2 > 0.0, qmax - q0, qmin - q0)
        phi = np.minimum(phi, venkat_phi(d1, d2, eps2))
    return LimiterState(phi)


def eval_limited(poly: LinearPoly, phi: LimiterState, x_ref) -> tuple[np.ndarray, np.ndarray]:
    """Limited value and physical-coordinate gradient (3, 5) at a reference point."""
    x = np.asarray(x_ref, dtype=float)
    val = poly.q0 + phi.phi0 * (x @ poly.b)
    grad = phi.phi0[None, :] * poly.b / np.asarray(poly.scales, dtype=float)[:, None]
    return val, grad


def reconstruct_cell(q0, neighbors, h_own, h_nb, k_venkat=DEFAULT_K_VENKAT, force_linear=False):
    """Convenience: slopes, limiter and the six face-midpoint values (6, 5)."""
    poly = ls_linear(q0, neighbors, neighbor_offsets(h_own, h_nb))
    poly.scales = np.asarray(h_own, dtype=float)
    phi = LimiterState(np.ones_like(poly.q0)) if force_linear else venkat_limit(poly, neighbors, k_venkat)
    faces = np.empty((6, poly.q0.shape[-1]))
    for f in range(6):
        a, s = divmod(f, 2)
        x = np.zeros(3)
        x[a] = 0.5 if s == 1 else -0.5
        faces[f] = eval_limited(poly, phi, x)[0]
    return poly, phi, faces
