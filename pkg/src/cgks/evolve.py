"""Time marching: residual assembly, S1O2 / S2O4 updates, interface-value
evolution of the CGKS-5th gradient data, and time-step control.

Fields are flat arrays over cells (C order of the (i, j, k) lattice):
``Q`` (nc, 5) cell averages and, for CGKS-5th, ``Lines`` (nc, 3, 4, 5) line
derivatives (axis, line k, component).  The cell-averaged gradient along an
axis is the mean of the four lines along it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from cgks import _core, _kernels
from cgks.errors import ConfigError, PositivityError
from cgks.mesh import EDGE_DIRS, StructuredMesh, face_gauss_ref
from cgks.recon5 import build_recon_tables


@dataclass
class Residual:
    L: np.ndarray
    Lt: np.ndarray


@dataclass
class StepReport:
    dt: float
    cfl_binding: str
    positivity_ok: bool = True


@dataclass
class SchemeParams:
    scheme: str = "cgks5"
    gamma: float = 1.4
    pr: float = 1.0
    tau_mode: str = "inviscid"  # inviscid | viscous
    mu0: float = 0.0
    tref: float = 1.0
    mu_law: str = "constant"  # constant | sutherland
    cfl: float | None = None
    k_venkat: float = 0.3
    force_linear: bool = False
    chi_c: float = 0.01
    recon_weights: tuple = (1.0, 1.0, 1.0)
    euler_only: bool = False
    eps_tau: float = _core.EPS_TAU
    c_tau: float = _core.C_TAU

    def __post_init__(self):
        if self.scheme not in ("gks2", "cgks5"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.tau_mode not in ("inviscid", "viscous"):
            raise ConfigError(f"unknown collision-time model {self.tau_mode!r}")
        if self.mu_law not in ("constant", "sutherland"):
            raise ConfigError(f"unknown viscosity law {self.mu_law!r}")
        if self.cfl is None:
            self.cfl = 0.5 if self.scheme == "gks2" else 0.3

    @property
    def tau_code(self) -> int:
        return _core.TAU_VISCOUS if self.tau_mode == "viscous" else _core.TAU_INVISCID

    @property
    def mu_code(self) -> int:
        return _core.MU_SUTHERLAND if self.mu_law == "sutherland" else _core.MU_CONSTANT

    def viscosity(self, T):
        if self.tau_mode != "viscous":
            return np.zeros_like(np.asarray(T, dtype=float))
        if self.mu_law == "sutherland":
            th = np.asarray(T, dtype=float) / self.tref
            return self.mu0 * 1.4042 * th ** 1.5 / (th + 0.4042)
        return np.full_like(np.asarray(T, dtype=float), self.mu0)


def check_positivity(Q: np.ndarray, mesh: StructuredMesh, gamma: float, stage: str) -> None:
    rho = Q[:, 0]
    p = (gamma - 1.0) * (Q[:, 4] - 0.5 * np.sum(Q[:, 1:4] ** 2, axis=1) / rho)
    bad = ~((rho > 0) & (p > 0))
    if bad.any():
        c = int(np.flatnonzero(bad)[0])
        raise PositivityError(
            f"non-positive density or pressure (rho={rho[c]:.6g}, p={p[c]:.6g})",
            cell=mesh.unravel(c), stage=stage,
        )


def compute_dt(Q: np.ndarray, mesh: StructuredMesh, cfl: float, nu=None, gamma: float = 1.4) -> StepReport:
    """Convective and viscous CFL limits, reduced in a fixed order.

    ``nu`` is the kinematic viscosity per cell (array or scalar) or None.
    """
    Q = np.asarray(Q, dtype=float).reshape(-1, 5)
    check_positivity(Q, mesh, gamma, "dt")
    rho = Q[:, 0]
    vel = Q[:, 1:4] / rho[:, None]
    p = (gamma - 1.0) * (Q[:, 4] - 0.5 * rho * np.sum(vel * vel, axis=1))
    c = np.sqrt(gamma * p / rho)
    H = mesh.scales.reshape(-1, 3)
    dt_conv = float(np.min(cfl * H / (np.abs(vel) + c[:, None])))
    dt_visc = np.inf
    if nu is not None:
        nu = np.broadcast_to(np.asarray(nu, dtype=float), rho.shape)
        nmax = float(np.max(nu))
        if nmax > 0:
            hmin = np.min(H, axis=1)
            with np.errstate(divide="ignore"):
                dt_visc = float(np.min(np.where(nu > 0, cfl * hmin ** 2 / (3.0 * nu), np.inf)))
    if dt_visc < dt_conv:
        return StepReport(dt=dt_visc, cfl_binding="viscous")
    return StepReport(dt=dt_conv, cfl_binding="convective")


def assemble_residual(Fsum: np.ndarray, Ftsum: np.ndarray, mesh: StructuredMesh) -> Residual:
    """L = -(1/|Omega|) sum_faces sum_k w_k F.n S for tensor-product cells.

    ``Fsum[c, a]`` is the weighted flux per unit area through the plus face of
    cell c along axis a; the minus face is the plus face of the lower neighbor.
    """
    H = mesh.scales.reshape(-1, 3)
    nbr = mesh.neighbor_table
    L = np.zeros((mesh.ncells, 5))
    Lt = np.zeros((mesh.ncells, 5))
    for a in range(3):
        lower = nbr[:, 2 * a]
        L -= (Fsum[:, a] - Fsum[lower, a]) / H[:, a, None]
        Lt -= (Ftsum[:, a] - Ftsum[lower, a]) / H[:, a, None]
    return Residual(L, Lt)


def step_s1o2(Q, L, Lt, dt):
    return Q + dt * L + 0.5 * dt * dt * Lt


def step_s2o4(Q, residual_provider: Callable, dt: float, check: Callable | None = None):
    """Two-stage fourth-order update; ``residual_provider(Q)`` returns (L, Lt)."""
    L1, Lt1 = residual_provider(Q)
    Qs = Q + 0.5 * dt * L1 + 0.125 * dt * dt * Lt1
    if check is not None:
        check(Qs, "stage1")
    L2, Lt2 = residual_provider(Qs)
    Qn = Q + dt * L1 + dt * dt / 6.0 * (Lt1 + 2.0 * Lt2)
    if check is not None:
        check(Qn, "stage2")
    return Qn


def update_cell_dofs(Sp: np.ndarray, Sm: np.ndarray, mesh: StructuredMesh) -> tuple[np.ndarray, np.ndarray]:
    """Gradient and line derivatives from a cell's own interface values.

    ``Sp[c, a, k]`` / ``Sm[c, a, k]`` are values at Gauss point k of the plus /
    minus face of cell c along axis a.  Returns (grad (nc, 3, 5), lines (nc, 3, 4, 5)).
    """
    H = mesh.scales.reshape(-1, 3)
    lines = (Sp - Sm) / H[:, :, None, None]
    w = face_gauss_ref("fifth")[1]
    grad = np.einsum("k,cakm->cam", w, lines)
    return grad, lines


class Solver:
    """Owns the field arrays and drives one scheme on one mesh."""

    def __init__(self, mesh: StructuredMesh, params: SchemeParams, Q: np.ndarray, lines: np.ndarray | None = None):
        if not all(mesh.periodic):
            raise ConfigError("only periodic meshes are supported by the solver")
        self.mesh = mesh
        self.params = params
        nc = mesh.ncells
        self.Q = np.ascontiguousarray(np.asarray(Q, dtype=float).reshape(nc, 5))
        self.H = np.ascontiguousarray(mesh.scales.reshape(nc, 3))
        self.nbr = np.ascontiguousarray(mesh.neighbor_table)
        self.t = 0.0
        self.steps = 0
        self.cgks = params.scheme == "cgks5"
        check_positivity(self.Q, mesh, params.gamma, "init")
        if self.cgks:
            self.tables = build_recon_tables(mesh, params.recon_weights)
            ncls = self.tables.W_face.shape[0]
            self.Wf = np.ascontiguousarray(self.tables.W_face.reshape(ncls, 96, 72))
            self.Wi = np.ascontiguousarray(self.tables.W_int.reshape(ncls, 32, 72))
            self.edirs = np.ascontiguousarray(EDGE_DIRS)
            if lines is None:
                lines = np.zeros((nc, 3, 4, 5))
            self.Lines = np.ascontiguousarray(np.asarray(lines, dtype=float).reshape(nc, 3, 4, 5))
            self.R = np.empty((nc, 6, 4, 4, 5))
            self.weights = np.full(4, 0.25)
            self._S = [np.zeros((nc, 3, 4, 5)) for _ in range(8)]
        else:
            self.Lines = None
            self.R = np.empty((nc, 6, 1, 4, 5))
            self.PHI = np.empty((nc, 5))
            self.weights = np.ones(1)
            self._S = [np.zeros((nc, 3, 1, 5)) for _ in range(4)]
        self.Fsum = np.empty((nc, 3, 5))
        self.Ftsum = np.empty((nc, 3, 5))
        self.status = np.zeros((nc, 3), dtype=np.int64)

    # -- reconstruction and fluxes -------------------------------------------------

    def reconstruct(self, Q, Lines=None):
        p = self.params
        if self.cgks:
            t = self.tables
            _kernels.recon5_faces(Q, Lines, self.nbr, self.H, t.cell_class, self.Wf, t.face_offset,
                                  self.edirs, p.chi_c, p.force_linear, self.R)
        else:
            _kernels.recon2_faces(Q, self.nbr, self.H, p.k_venkat, p.force_linear, self.R, self.PHI)
        return self.R

    def fluxes(self, dt, sides):
        p = self.params
        Sp, Spt, Sm, Smt = sides
        _kernels.face_fluxes(self.R, self.nbr, self.weights, dt, p.gamma, p.pr, p.tau_code,
                             p.mu0, p.tref, p.mu_code, p.euler_only, self.cgks,
                             self.Fsum, self.Ftsum, Sp, Spt, Sm, Smt, self.status, p.eps_tau, p.c_tau)
        if self.status.any():
            c, a = np.argwhere(self.status)[0]
            kind = "side state" if self.status[c, a] == 1 else "interface equilibrium"
            raise PositivityError(f"non-positive reconstructed {kind}", cell=self.mesh.unravel(int(c)),
                                  stage=f"face-{'xyz'[a]}")

    def residual(self, Q, Lines, dt, sides) -> Residual:
        self.reconstruct(Q, Lines)
        self.fluxes(dt, sides)
        return assemble_residual(self.Fsum, self.Ftsum, self.mesh)

    # -- stepping ------------------------------------------------------------------

    def nu_field(self):
        p = self.params
        if p.tau_mode != "viscous" or p.mu0 == 0:
            return None
        rho = self.Q[:, 0]
        pr = (p.gamma - 1) * (self.Q[:, 4] - 0.5 * np.sum(self.Q[:, 1:4] ** 2, axis=1) / rho)
        return p.viscosity(pr / rho) / rho

    def stable_dt(self) -> StepReport:
        return compute_dt(self.Q, self.mesh, self.params.cfl, self.nu_field(), self.params.gamma)

    def _check(self, Q, stage):
        check_positivity(Q, self.mesh, self.params.gamma, stage)

    def step(self, dt: float) -> None:
        if self.cgks:
            self._step_cgks(dt)
        else:
            res = self.residual(self.Q, None, dt, self._S)
            Qn = step_s1o2(self.Q, res.L, res.Lt, dt)
            self._check(Qn, "update")
            self.Q = Qn
        self.t += dt
        self.steps += 1

    def _step_cgks(self, dt):
        Sp, Spt, Sm, Smt, Sp2, Spt2, Sm2, Smt2 = self._S
        H4 = self.H[:, :, None, None]
        r1 = self.residual(self.Q, self.Lines, dt, (Sp, Spt, Sm, Smt))
        Qs = self.Q + 0.5 * dt * r1.L + 0.125 * dt * dt * r1.Lt
        self._check(Qs, "stage1")
        Ls = ((Sp + 0.5 * dt * Spt) - (Sm + 0.5 * dt * Smt)) / H4
        r2 = self.residual(Qs, np.ascontiguousarray(Ls), dt, (Sp2, Spt2, Sm2, Smt2))
        Qn = self.Q + dt * r1.L + dt * dt / 6.0 * (r1.Lt + 2.0 * r2.Lt)
        self._check(Qn, "stage2")
        self.Lines = np.ascontiguousarray(((Sp + dt * Spt2) - (Sm + dt * Smt2)) / H4)
        self.Q = Qn

    # -- diagnostics helpers ---------------------------------------------------------

    def point_integrands(self) -> np.ndarray:
        """Per-cell means of (0.5 rho|U|^2, mu|curl U|^2, mu (div U)^2) at interior Gauss points."""
        p = self.params
        out = np.empty((self.mesh.ncells, 3))
        mu0 = p.mu0 if p.tau_mode == "viscous" else 0.0
        if self.cgks:
            t = self.tables
            _kernels.diag5_cells(self.Q, self.Lines, self.nbr, self.H, t.cell_class, self.Wi, t.face_offset,
                                 self.edirs, p.chi_c, p.force_linear, p.gamma, mu0, p.tref, p.mu_code, out)
        else:
            _kernels.recon2_faces(self.Q, self.nbr, self.H, p.k_venkat, p.force_linear, self.R, self.PHI)
            _kernels.diag2_cells(self.Q, self.nbr, self.H, p.k_venkat, p.force_linear, p.gamma, mu0, p.tref,
                                 p.mu_code, self.R, self.PHI, out)
        return out

    def totals(self) -> np.ndarray:
        vol = self.mesh.volumes.reshape(-1)
        return np.sum(vol[:, None] * self.Q, axis=0)
