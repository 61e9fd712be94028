"""Initial conditions, exact reference solutions and flow diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from cgks.errors import ConfigError, DomainError
from cgks.kinetic import prim_to_cons_field
from cgks.mesh import StructuredMesh, build_mesh, face_gauss_ref, transverse_axes

CASE_IDS = ("tgv_subsonic", "tgv_supersonic", "density_wave", "sod", "jet_profile_dump")

SUTHERLAND_A = 1.4042
SUTHERLAND_B = 0.4042


@dataclass
class CaseConfig:
    case_id: str = "tgv_subsonic"
    Ma: float = 0.1
    Re: float = 1600.0
    gamma: float = 1.4
    Pr: float = 0.7
    L: float = 1.0
    init_quad: int = 2
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.case_id not in CASE_IDS:
            raise ConfigError(f"unknown case {self.case_id!r}")
        if not self.Re > 0 or not self.Ma > 0:
            raise ConfigError("Re and Ma must be positive")
        if not 1.0 < self.gamma <= 5.0 / 3.0:
            raise ConfigError("gamma must lie in (1, 5/3]")


@dataclass
class DiagnosticsRecord:
    t: float
    E_k: float
    eps_S: float
    eps_D: float
    eps_T: float
    mass: float
    mom_x: float
    mom_y: float
    mom_z: float
    energy: float


@dataclass
class InitialField:
    """Cell averages (nx, ny, nz, 5) and line derivatives (nx, ny, nz, 3, 4, 5)."""

    Q: np.ndarray
    lines: np.ndarray
    point_fn: Callable
    rho0: float = 1.0
    U0: float = 1.0
    mu0: float = 0.0
    tref: float = 1.0


# ---------------------------------------------------------------------------
# Point functions returning conserved variables with the component axis last.


def _tgv_velocity(x, y, z, U0, L):
    U = U0 * np.sin(x / L) * np.cos(y / L) * np.cos(z / L)
    V = -U0 * np.cos(x / L) * np.sin(y / L) * np.cos(z / L)
    return np.stack([U, V, np.zeros_like(U)], axis=-1)


def tgv_subsonic_point(Ma, gamma=1.4, L=1.0, U0=1.0, rho0=1.0):
    p0 = rho0 * U0 ** 2 / (gamma * Ma ** 2)

    def fn(x, y, z):
        fac = 1.0 + gamma * Ma ** 2 / 16.0 * (np.cos(2 * x / L) + np.cos(2 * y / L)) * (np.cos(2 * z / L) + 2.0)
        return prim_to_cons_field(rho0 * fac, _tgv_velocity(x, y, z, U0, L), p0 * fac, gamma)

    return fn, p0


def tgv_supersonic_point(Ma=2.0, gamma=1.4, L=1.0, rho0=1.0, p0=1.0):
    U0 = math.sqrt(gamma) * Ma

    def fn(x, y, z):
        fac = 1.0 + (np.cos(2 * x / L) + np.cos(2 * y / L)) * (np.cos(2 * z / L) + 2.0) / 16.0
        return prim_to_cons_field(rho0 * fac, _tgv_velocity(x, y, z, U0, L), p0 * fac, gamma)

    return fn, U0


def density_wave_point(gamma=1.4, t=0.0, amp=0.2):
    def fn(x, y, z):
        rho = 1.0 + amp * np.sin((x - t) + (y - t) + (z - t))
        vel = np.ones(np.shape(rho) + (3,))
        return prim_to_cons_field(rho, vel, np.ones_like(rho), gamma)

    return fn


def sod_point(gamma=1.4, x0=0.5, mirror_at=1.5):
    """Sod states; the region x >= ``mirror_at`` repeats the left state (periodic doubling)."""

    def fn(x, y, z):
        x = np.asarray(x, dtype=float)
        left = (x < x0) | (x >= mirror_at)
        rho = np.where(left, 1.0, 0.125)
        p = np.where(left, 1.0, 0.1)
        vel = np.zeros(rho.shape + (3,))
        return prim_to_cons_field(rho, vel, p, gamma)

    return fn


# ---------------------------------------------------------------------------
# Cell averages and line derivatives from point functions.


def cell_averages(mesh: StructuredMesh, fn: Callable, quad: int = 2) -> np.ndarray:
    """Tensor Gauss-Legendre cell averages with ``quad`` points per axis."""
    g, w = np.polynomial.legendre.leggauss(quad)
    w = w / 2.0
    cx, cy, cz = mesh.centers
    hx, hy, hz = mesh.widths
    out = np.zeros(mesh.dims + (5,))
    for i, gi in enumerate(g):
        x = (cx + 0.5 * hx * gi)[:, None, None]
        for j, gj in enumerate(g):
            y = (cy + 0.5 * hy * gj)[None, :, None]
            for k, gk in enumerate(g):
                z = (cz + 0.5 * hz * gk)[None, None, :]
                X, Y, Z = np.broadcast_arrays(x, y, z)
                out += w[i] * w[j] * w[k] * fn(X, Y, Z)
    return out


def line_derivatives(mesh: StructuredMesh, fn: Callable) -> np.ndarray:
    """Line-averaged derivatives from point values at paired face Gauss points."""
    ref = face_gauss_ref("fifth")[0]
    C = np.stack(np.meshgrid(*mesh.centers, indexing="ij"), axis=-1)
    H = mesh.scales
    out = np.empty(mesh.dims + (3, 4, 5))
    for a in range(3):
        t1, t2 = transverse_axes(a)
        for k, (s1, s2) in enumerate(ref):
            P = C.copy()
            P[..., t1] += s1 * H[..., t1]
            P[..., t2] += s2 * H[..., t2]
            hi = P.copy()
            lo = P.copy()
            hi[..., a] += 0.5 * H[..., a]
            lo[..., a] -= 0.5 * H[..., a]
            out[..., a, k, :] = (fn(*np.moveaxis(hi, -1, 0)) - fn(*np.moveaxis(lo, -1, 0))) / H[..., a, None]
    return out


def _require_periodic(mesh):
    if not all(mesh.periodic):
        raise ConfigError("this case needs a fully periodic mesh")


def init_tgv_subsonic(mesh: StructuredMesh, Ma=0.1, Re=1600.0, gamma=1.4, quad=2, L=1.0) -> InitialField:
    _require_periodic(mesh)
    fn, p0 = tgv_subsonic_point(Ma, gamma, L)
    mu0 = 1.0 * 1.0 * L / Re
    return InitialField(cell_averages(mesh, fn, quad), line_derivatives(mesh, fn), fn, 1.0, 1.0, mu0, p0 / 1.0)


def init_tgv_supersonic(mesh: StructuredMesh, Ma=2.0, Re=1600.0, gamma=1.4, quad=2, L=1.0) -> InitialField:
    _require_periodic(mesh)
    fn, U0 = tgv_supersonic_point(Ma, gamma, L)
    mu0 = 1.0 * U0 * L / Re
    return InitialField(cell_averages(mesh, fn, quad), line_derivatives(mesh, fn), fn, 1.0, U0, mu0, 1.0)


def init_canonical(kind: str, mesh: StructuredMesh, gamma=1.4, quad=None) -> InitialField:
    if kind == "density_wave":
        fn = density_wave_point(gamma)
        q = 4 if quad is None else quad
        return InitialField(cell_averages(mesh, fn, q), line_derivatives(mesh, fn), fn)
    if kind == "sod":
        # Jumps sit on cell faces, so every in-cell derivative is zero.
        fn = sod_point(gamma)
        q = 2 if quad is None else quad
        return InitialField(cell_averages(mesh, fn, q), np.zeros(mesh.dims + (3, 4, 5)), fn)
    raise ConfigError(f"unknown canonical case {kind!r}")


def density_wave_exact_average(mesh: StructuredMesh, t: float, amp=0.2, quad=5) -> np.ndarray:
    """Exact density cell averages of the advected wave."""
    fn = density_wave_point(t=t, amp=amp)
    return cell_averages(mesh, fn, quad)[..., 0]


def sod_mesh(n: int) -> StructuredMesh:
    """Periodic slab of 2n cubic cells on [0, 2]; cells [0, n) cover the physical tube [0, 1]."""
    h = 1.0 / n
    return build_mesh((2 * n, 1, 1), [(0.0, 2.0), (0.0, h), (0.0, h)])


# ---------------------------------------------------------------------------
# Exact Riemann solver for the 1-D Euler equations.


def exact_riemann(left, right, gamma: float, x, t: float, x0: float = 0.5) -> np.ndarray:
    """Sampled exact solution (rho, u, p), shape (len(x), 3)."""
    rl, ul, pl = left
    rr, ur, pr = right
    cl = math.sqrt(gamma * pl / rl)
    cr = math.sqrt(gamma * pr / rr)
    g = gamma

    def fk(p, rk, pk, ck):
        if p > pk:
            A = 2.0 / ((g + 1) * rk)
            B = (g - 1) / (g + 1) * pk
            return (p - pk) * math.sqrt(A / (p + B))
        return 2 * ck / (g - 1) * ((p / pk) ** ((g - 1) / (2 * g)) - 1)

    def f(p):
        return fk(p, rl, pl, cl) + fk(p, rr, pr, cr) + ur - ul

    hi = max(pl, pr)
    while f(hi) < 0:
        hi *= 2
    ps = brentq(f, 1e-14, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    us = 0.5 * (ul + ur) + 0.5 * (fk(ps, rr, pr, cr) - fk(ps, rl, pl, cl))

    def star_rho(p, rk, pk):
        if p > pk:
            r = p / pk
            return rk * (r + (g - 1) / (g + 1)) / ((g - 1) / (g + 1) * r + 1)
        return rk * (p / pk) ** (1 / g)

    rls = star_rho(ps, rl, pl)
    rrs = star_rho(ps, rr, pr)
    out = np.empty((len(np.atleast_1d(x)), 3))
    for i, xi in enumerate(np.atleast_1d(x)):
        s = (xi - x0) / t if t > 0 else (np.inf if xi >= x0 else -np.inf)
        if s < us:
            if ps > pl:
                sl = ul - cl * math.sqrt((g + 1) / (2 * g) * ps / pl + (g - 1) / (2 * g))
                out[i] = (rl, ul, pl) if s < sl else (rls, us, ps)
            else:
                csl = cl * (ps / pl) ** ((g - 1) / (2 * g))
                if s < ul - cl:
                    out[i] = (rl, ul, pl)
                elif s > us - csl:
                    out[i] = (rls, us, ps)
                else:
                    u = 2 / (g + 1) * (cl + (g - 1) / 2 * ul + s)
                    c = 2 / (g + 1) * (cl + (g - 1) / 2 * (ul - s))
                    rho = rl * (c / cl) ** (2 / (g - 1))
                    out[i] = (rho, u, pl * (c / cl) ** (2 * g / (g - 1)))
        else:
            if ps > pr:
                sr = ur + cr * math.sqrt((g + 1) / (2 * g) * ps / pr + (g - 1) / (2 * g))
                out[i] = (rr, ur, pr) if s > sr else (rrs, us, ps)
            else:
                csr = cr * (ps / pr) ** ((g - 1) / (2 * g))
                if s > ur + cr:
                    out[i] = (rr, ur, pr)
                elif s < us + csr:
                    out[i] = (rrs, us, ps)
                else:
                    u = 2 / (g + 1) * (-cr + (g - 1) / 2 * ur + s)
                    c = 2 / (g + 1) * (cr - (g - 1) / 2 * (ur - s))
                    rho = rr * (c / cr) ** (2 / (g - 1))
                    out[i] = (rho, u, pr * (c / cr) ** (2 * g / (g - 1)))
    return out


def sod_exact_average(n: int, t: float, gamma=1.4, sub: int = 64) -> np.ndarray:
    """Exact density cell averages on n uniform cells of [0, 1] (midpoint sub-sampling)."""
    h = 1.0 / n
    xs = (np.arange(n * sub) + 0.5) * (h / sub)
    rho = exact_riemann((1.0, 0.0, 1.0), (0.125, 0.0, 0.1), gamma, xs, t)[:, 0]
    return rho.reshape(n, sub).mean(axis=1)


# ---------------------------------------------------------------------------
# Viscosity and diagnostics.


def sutherland_mu(T, mu0: float):
    T = np.asarray(T, dtype=float)
    return mu0 * SUTHERLAND_A * T ** 1.5 / (T + SUTHERLAND_B)


def diagnostics(t: float, Q: np.ndarray, integrands: np.ndarray, mesh: StructuredMesh,
                rho0: float = 1.0, U0: float = 1.0) -> DiagnosticsRecord:
    """Volume integrals from per-cell quadrature means.

    ``integrands[c]`` holds the cell means of (rho|U|^2/2, mu|curl U|^2, mu (div U)^2).
    Sums run in a fixed order.
    """
    vol = mesh.volumes.reshape(-1)
    Q = Q.reshape(-1, 5)
    total_vol = float(np.sum(vol))
    norm = rho0 * U0 ** 2 * total_vol
    sums = np.sum(vol[:, None] * integrands, axis=0)
    totals = np.sum(vol[:, None] * Q, axis=0)
    eps_S = float(sums[1] / norm)
    eps_D = float(4.0 / 3.0 * sums[2] / norm)
    return DiagnosticsRecord(
        t=float(t), E_k=float(sums[0] / norm), eps_S=eps_S, eps_D=eps_D, eps_T=eps_S + eps_D,
        mass=float(totals[0]), mom_x=float(totals[1]), mom_y=float(totals[2]), mom_z=float(totals[3]),
        energy=float(totals[4]),
    )


def q_criterion(grads: np.ndarray) -> np.ndarray:
    """Q = (|Omega|^2 - |S|^2)/2 from velocity gradients G[..., i, j] = du_i/dx_j."""
    G = np.asarray(grads, dtype=float)
    Gt = np.swapaxes(G, -1, -2)
    S = 0.5 * (G + Gt)
    W = 0.5 * (G - Gt)
    return 0.5 * (np.sum(W * W, axis=(-1, -2)) - np.sum(S * S, axis=(-1, -2)))


def velocity_gradients(Q: np.ndarray, dQ: np.ndarray) -> np.ndarray:
    """du_i/dx_j from conserved values (..., 5) and derivatives (..., 3, 5)."""
    rho = Q[..., 0]
    vel = Q[..., 1:4] / rho[..., None]
    drho = dQ[..., :, 0]
    dm = dQ[..., :, 1:4]
    # dm[..., j, i] = d(rho u_i)/dx_j
    G = (np.swapaxes(dm, -1, -2) - vel[..., :, None] * drho[..., None, :]) / rho[..., None, None]
    return G


# ---------------------------------------------------------------------------
# Jet inflow profile and potential-core length.


def jet_inflow_profile(r, Ma=0.9, gamma=1.4, Pr=0.7, delta_theta=0.03, r0=0.5, Uc=None, T_inf=1.0, Tc=None):
    """Axial velocity and temperature of the tanh jet profile.

    Defaults follow the isothermal setup with D = 1 and c_inf = 1.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be non-negative")
    Uc = Ma * 1.0 if Uc is None else Uc
    Tc = T_inf if Tc is None else Tc
    sigma = Pr ** (1.0 / 3.0)
    u = 0.5 * Uc + 0.5 * Uc * np.tanh((r0 - r) / (2.0 * delta_theta))
    s = u / Uc
    ratio = T_inf / Tc
    T = Tc * (ratio + (1.0 - ratio + 0.5 * (gamma - 1.0) * Ma ** 2 * (1.0 - sigma * s)) * s)
    return u, T


def potential_core_length(x, u_center, u_inflow=None, level=0.95) -> float:
    """Distance from x[0] to the first point where u drops below level * u_inflow.

    Linear interpolation between samples; NaN if the series never drops.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u_center, dtype=float)
    ref = u[0] if u_inflow is None else u_inflow
    target = level * ref
    below = np.flatnonzero(u < target)
    if len(below) == 0:
        return float("nan")
    i = int(below[0])
    if i == 0:
        return 0.0
    x0, x1, u0, u1 = x[i - 1], x[i], u[i - 1], u[i]
    return float(x0 + (target - u0) * (x1 - x0) / (u1 - u0) - x[0])
