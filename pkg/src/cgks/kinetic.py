"""Maxwellian moment algebra and primitive/conservative conversion.

The equilibrium is
    g = rho (lam/pi)^((N+3)/2) exp(-lam (|u - U|^2 + xi^2)),  lam = rho / (2 p),
with N = (5 - 3 gamma)/(gamma - 1) internal degrees of freedom carried as a real
number.  Moments are taken against psi = (1, u, v, w, (u^2+v^2+w^2+xi^2)/2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cgks import _core
from cgks.errors import DomainError, NumericalError, PositivityError

AXES = {"x": 0, "y": 1, "z": 2, 0: 0, 1: 1, 2: 2}


def internal_dof(gamma: float) -> float:
    return (5.0 - 3.0 * gamma) / (gamma - 1.0)


@dataclass(frozen=True)
class Primitive:
    rho: float
    vel: tuple[float, float, float]
    lam: float
    gamma: float = 1.4

    @property
    def K_int(self) -> float:
        return internal_dof(self.gamma)

    @property
    def p(self) -> float:
        return 0.5 * self.rho / self.lam

    @classmethod
    def from_pressure(cls, rho, vel, p, gamma=1.4) -> "Primitive":
        if not (rho > 0 and p > 0):
            raise PositivityError(f"non-positive state rho={rho}, p={p}")
        return cls(float(rho), tuple(float(v) for v in vel), 0.5 * rho / p, gamma)


@dataclass(frozen=True)
class MomentTable:
    full: np.ndarray
    pos: np.ndarray
    neg: np.ndarray
    xi: np.ndarray


@dataclass(frozen=True)
class MicroSlope:
    coef: np.ndarray


def prim_to_cons(p: Primitive) -> np.ndarray:
    rho = p.rho
    if not (rho > 0 and p.lam > 0):
        raise PositivityError(f"non-positive state rho={rho}, lam={p.lam}")
    U, V, W = p.vel
    E = p.p / (p.gamma - 1.0) + 0.5 * rho * (U * U + V * V + W * W)
    return np.array([rho, rho * U, rho * V, rho * W, E])


def cons_to_prim(q, gamma: float = 1.4, cell=None) -> Primitive:
    q = np.asarray(q, dtype=float)
    rho, U, V, W, lam, p = _core.cons_to_prim_point(q, gamma)
    if not (rho > 0 and p > 0):
        raise PositivityError(f"non-positive state rho={rho}, p={p}", cell=cell)
    return Primitive(float(rho), (float(U), float(V), float(W)), float(lam), gamma)


def cons_to_prim_field(Q: np.ndarray, gamma: float) -> dict[str, np.ndarray]:
    """Vectorized primitives for a field with the conserved index last."""
    rho = Q[..., 0]
    vel = Q[..., 1:4] / rho[..., None]
    p = (gamma - 1.0) * (Q[..., 4] - 0.5 * rho * np.sum(vel * vel, axis=-1))
    return {"rho": rho, "vel": vel, "p": p}


def prim_to_cons_field(rho, vel, p, gamma: float) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    vel = np.asarray(vel, dtype=float)
    out = np.empty(rho.shape + (5,))
    out[..., 0] = rho
    out[..., 1:4] = rho[..., None] * vel
    out[..., 4] = np.asarray(p) / (gamma - 1.0) + 0.5 * rho * np.sum(vel * vel, axis=-1)
    return out


def moments(p: Primitive, axis="x", max_order: int = 6) -> MomentTable:
    """Velocity moments along one axis plus internal-energy moments."""
    if max_order > 6 or max_order < 0:
        raise DomainError("max_order must lie in 0..6")
    if not p.lam > 0:
        raise DomainError(f"lam must be positive, got {p.lam}")
    U = p.vel[AXES[axis]]
    w = np.empty(24)
    _core.moments_1d(float(U), float(p.lam), w, 0, 7, 14)
    _core.xi_moments(float(p.lam), float(p.K_int), w, 21)
    n = max_order + 1
    return MomentTable(full=w[:n].copy(), pos=w[7:7 + n].copy(), neg=w[14:14 + n].copy(), xi=w[21:24].copy())


# Packed layout for the compiled moment helpers: Mu, Mv, Mw, VW, Mx, a, out.
_MU, _MV, _MW, _VW, _MX, _A, _OUT = 0, 7, 14, 21, 57, 60, 65


def _packed(p: Primitive, a=None) -> np.ndarray:
    w = np.zeros(70)
    for ax, off in ((0, _MU), (1, _MV), (2, _MW)):
        w[off:off + 7] = moments(p, ax).full
    _core.transverse_table(w, _MV, _MW, _VW)
    w[_MX:_MX + 3] = moments(p, 0).xi
    if a is not None:
        w[_A:_A + 5] = np.asarray(a, dtype=float)
    return w


def _check_orders(i, j, k, extra):
    if min(i, j, k) < 0 or i + extra > 4 or j + extra > 3 or k + extra > 3:
        raise DomainError("moment order outside the tabulated range")


def psi_moment(p: Primitive, i: int = 0, j: int = 0, k: int = 0) -> np.ndarray:
    """<u^i v^j w^k psi> per unit density (i <= 4, j, k <= 3)."""
    _check_orders(i, j, k, 0)
    w = _packed(p)
    _core.pm(w, _MU, _VW, _MX, i, j, k, 0, 1.0, _OUT)
    return w[_OUT:_OUT + 5].copy()


def slope_moment(p: Primitive, a, i: int = 0, j: int = 0, k: int = 0) -> np.ndarray:
    """<u^i v^j w^k a psi> per unit density for a micro-slope coefficient vector
    (i <= 2, j, k <= 1)."""
    _check_orders(i, j, k, 2)
    w = _packed(p, a)
    _core.amom(w, _MU, _VW, _MX, i, j, k, _A, 1.0, _OUT)
    return w[_OUT:_OUT + 5].copy()


def moment_matrix(p: Primitive) -> np.ndarray:
    """M[i, j] = (1/rho) <psi_i psi_j g>."""
    M = np.empty((5, 5))
    for j in range(5):
        e = np.zeros(5)
        e[j] = 1.0
        M[:, j] = slope_moment(p, e)
    return M


def micro_slope_solve(p: Primitive, dQ) -> MicroSlope:
    """Coefficients a with (1/rho) <a psi g> = dQ / rho, by a dense moment-matrix solve."""
    dQ = np.asarray(dQ, dtype=float)
    M = moment_matrix(p)
    try:
        coef = np.linalg.solve(M, dQ / p.rho)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular moment matrix: {exc}") from exc
    if not np.all(np.isfinite(coef)):
        raise NumericalError("non-finite micro-slope")
    return MicroSlope(coef)


def micro_slope_closed(p: Primitive, dQ) -> MicroSlope:
    """Same as :func:`micro_slope_solve` via the closed-form inverse used in kernels."""
    w = np.zeros(10)
    w[:5] = np.asarray(dQ, dtype=float) / p.rho
    U, V, W = (float(v) for v in p.vel)
    _core.micro_slope(w, 0, U, V, W, float(p.lam), float(p.K_int), 5)
    return MicroSlope(w[5:].copy())


def compat_solve(p: Primitive, slopes) -> MicroSlope:
    """Time slope A solving <(a_x u + a_y v + a_z w + A) psi g> = 0."""
    ax, ay, az = (np.asarray(getattr(s, "coef", s), dtype=float) for s in slopes)
    rhs = -(slope_moment(p, ax, 1, 0, 0) + slope_moment(p, ay, 0, 1, 0) + slope_moment(p, az, 0, 0, 1))
    return micro_slope_solve(p, p.rho * rhs)
