"""Time-accurate gas-kinetic interface solver (per Gauss point API).

The mesh-level kernels call :func:`cgks._core.interface_point` directly; this
module wraps it with frame rotation and input validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cgks import _core
from cgks.errors import DomainError, PositivityError


@dataclass
class InterfaceInput:
    """Reconstructed data on both sides of one Gauss point.

    ``dleft``/``dright`` hold derivatives along the global axes, shape (3, 5).
    ``frame`` rows are (n, t1, t2); the first row is the face normal.
    """

    left: np.ndarray
    dleft: np.ndarray
    right: np.ndarray
    dright: np.ndarray
    frame: np.ndarray = field(default_factory=lambda: np.eye(3))
    dt: float = 1e-3
    tau: float = 1e-4
    tau0: float | None = None
    gamma: float = 1.4
    pr: float = 1.0


@dataclass
class InterfaceEvolution:
    F_n: np.ndarray
    F_t_n: np.ndarray
    Q_n: np.ndarray
    Q_t_n: np.ndarray
    Q_l: np.ndarray
    Q_r: np.ndarray
    Q_l_t: np.ndarray
    Q_r_t: np.ndarray

    def side_states_at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        return self.Q_l + t * self.Q_l_t, self.Q_r + t * self.Q_r_t


def _rotate_state(q, R):
    out = np.array(q, dtype=float, copy=True)
    out[1:4] = R @ out[1:4]
    return out


def _rotate_grad(dq, R):
    # dq[d, m]: derivative along global axis d of component m.
    g = R @ np.asarray(dq, dtype=float)  # directional derivatives along frame axes
    g[:, 1:4] = g[:, 1:4] @ R.T
    return g


def evaluate_interface(inp: InterfaceInput, mode: str = "full") -> InterfaceEvolution:
    if mode not in ("full", "euler_only"):
        raise ValueError(f"unknown mode {mode!r}")
    if not inp.dt > 0:
        raise DomainError("dt must be positive")
    if mode == "full" and not inp.tau > 0:
        raise DomainError("tau must be positive")
    R = np.asarray(inp.frame, dtype=float)
    if not np.allclose(R @ R.T, np.eye(3), atol=1e-14 * 10):
        raise DomainError("frame is not orthonormal")
    tau0 = inp.tau0 if inp.tau0 is not None else inp.tau
    ql = _rotate_state(inp.left, R)
    qr = _rotate_state(inp.right, R)
    dl = _rotate_grad(inp.dleft, R)
    dr = _rotate_grad(inp.dright, R)
    out = np.zeros((8, 5))
    status = _core.interface_point(
        ql, dl, qr, dr, float(inp.dt), float(inp.gamma), float(inp.pr),
        _core.TAU_EXPLICIT, float(inp.tau), float(tau0), 0.0, 1.0, _core.MU_CONSTANT,
        mode == "euler_only", _core.scratch(), out,
    )
    if status == 1:
        raise PositivityError("non-positive side state at interface", stage="interface")
    if status == 2:
        raise PositivityError("non-positive interface equilibrium", stage="interface")
    RT = R.T
    rows = [_rotate_state(out[r], RT) for r in range(8)]
    return InterfaceEvolution(
        F_n=rows[_core.ROW_F], F_t_n=rows[_core.ROW_FT],
        Q_n=rows[_core.ROW_Q], Q_t_n=rows[_core.ROW_QT],
        Q_l=rows[_core.ROW_SL], Q_l_t=rows[_core.ROW_SLT],
        Q_r=rows[_core.ROW_SR], Q_r_t=rows[_core.ROW_SRT],
    )


def relaxation_weight(dt: float, tau0: float) -> float:
    """Weight of the equilibrium trajectory in the side-state relaxation."""
    if tau0 < 0:
        raise DomainError("tau0 must be non-negative")
    if tau0 == 0 or math.isinf(dt):
        return 1.0
    return 1.0 - math.exp(-dt / tau0)


def relax_side_states(dt: float, tau0: float, Qe, Q0l, Q0r) -> tuple[np.ndarray, np.ndarray]:
    w = relaxation_weight(dt, tau0)
    Qe = np.asarray(Qe, dtype=float)
    return w * Qe + (1 - w) * np.asarray(Q0l, dtype=float), w * Qe + (1 - w) * np.asarray(Q0r, dtype=float)


def collision_time(p_l: float, p_r: float, dt: float, mu: float | None = None, p_iface: float | None = None) -> float:
    """Inviscid form when ``mu`` is None, viscous form otherwise."""
    if not (p_l > 0 and p_r > 0 and dt > 0):
        raise DomainError("pressures and dt must be positive")
    if mu is None:
        return _core.collision_time_point(p_l, p_r, 1.0, 0.0, dt, _core.TAU_INVISCID)
    p0 = p_iface if p_iface is not None else 0.5 * (p_l + p_r)
    return _core.collision_time_point(p_l, p_r, p0, mu, dt, _core.TAU_VISCOUS)


def euler_flux(q, gamma: float = 1.4, normal=(1.0, 0.0, 0.0)) -> np.ndarray:
    """Exact inviscid flux of a state through a unit normal."""
    q = np.asarray(q, dtype=float)
    n = np.asarray(normal, dtype=float)
    rho = q[0]
    vel = q[1:4] / rho
    p = (gamma - 1.0) * (q[4] - 0.5 * rho * vel @ vel)
    un = vel @ n
    return np.concatenate([[rho * un], q[1:4] * un + p * n, [(q[4] + p) * un]])
