"""Compiled per-point kernels: Maxwellian moments, micro-slopes and the
time-accurate interface distribution function.

Everything here works in the face-normal frame (u is the normal velocity) and
on one preallocated scratch array so that the mesh-level kernels can call it in
a tight loop without heap allocation.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

NMOM = 7  # velocity moments of order 0..6

# Collision-time models.
TAU_INVISCID = 0
TAU_VISCOUS = 1
TAU_EXPLICIT = 2

# Viscosity laws.
MU_CONSTANT = 0
MU_SUTHERLAND = 1

EPS_TAU = 0.05
C_TAU = 10.0

# Output rows of interface_point.
ROW_F, ROW_FT, ROW_Q, ROW_QT, ROW_SL, ROW_SLT, ROW_SR, ROW_SRT = range(8)

NVW = 6  # transverse moment orders 0..5

# All per-point helpers address one flat scratch array ``w`` through integer
# offsets; slicing inside compiled loops costs reference-count traffic.


@njit(cache=True, inline="always")
def moments_1d(U, lam, w, full, pos, neg):
    """Full and half moments <u^n> (n = 0..6) of a unit 1-D Maxwellian."""
    inv2l = 0.5 / lam
    w[full] = 1.0
    w[full + 1] = U
    s = math.sqrt(lam) * U
    w[pos] = 0.5 * math.erfc(-s)
    w[neg] = 0.5 * math.erfc(s)
    ex = 0.5 * math.exp(-lam * U * U) / math.sqrt(math.pi * lam)
    w[pos + 1] = U * w[pos] + ex
    w[neg + 1] = U * w[neg] - ex
    for n in range(1, NMOM - 1):
        c = n * inv2l
        w[full + n + 1] = U * w[full + n] + c * w[full + n - 1]
        w[pos + n + 1] = U * w[pos + n] + c * w[pos + n - 1]
        w[neg + n + 1] = U * w[neg + n] + c * w[neg + n - 1]


@njit(cache=True, inline="always")
def moments_full(U, lam, w, full):
    inv2l = 0.5 / lam
    w[full] = 1.0
    w[full + 1] = U
    for n in range(1, NMOM - 1):
        w[full + n + 1] = U * w[full + n] + n * inv2l * w[full + n - 1]


@njit(cache=True, inline="always")
def xi_moments(lam, N, w, xi):
    """<xi^0>, <xi^2>, <xi^4> for N internal degrees of freedom."""
    w[xi] = 1.0
    w[xi + 1] = N / (2.0 * lam)
    w[xi + 2] = N * (N + 2.0) / (4.0 * lam * lam)


@njit(cache=True, inline="always")
def transverse_table(w, mv, mw, vw):
    """w[vw + NVW*j + k] = <v^j> <w^k> for j, k < NVW."""
    for j in range(NVW):
        for k in range(NVW):
            w[vw + NVW * j + k] = w[mv + j] * w[mw + k]


@njit(cache=True, inline="always")
def pm(w, mu, vw, mx, i, j, k, x, coef, o):
    """w[o:o+5] += coef * <u^i v^j w^k xi^(2x) psi>."""
    jk = vw + NVW * j + k
    cx = coef * w[mx + x]
    ui = w[mu + i]
    cu = ui * cx
    b = w[jk] * cx
    w[o] += ui * b
    w[o + 1] += w[mu + i + 1] * b
    w[o + 2] += cu * w[jk + NVW]
    w[o + 3] += cu * w[jk + 1]
    w[o + 4] += 0.5 * (w[mu + i + 2] * b + cu * (w[jk + 2 * NVW] + w[jk + 2]) + ui * w[jk] * coef * w[mx + x + 1])


@njit(cache=True, inline="always")
def amom(w, mu, vw, mx, i, j, k, a, coef, o):
    """w[o:o+5] += coef * <u^i v^j w^k a psi> with a = w[a:a+5] the coefficients of
    (1, u, v, w, (u^2+v^2+w^2+xi^2)/2)."""
    pm(w, mu, vw, mx, i, j, k, 0, coef * w[a], o)
    pm(w, mu, vw, mx, i + 1, j, k, 0, coef * w[a + 1], o)
    pm(w, mu, vw, mx, i, j + 1, k, 0, coef * w[a + 2], o)
    pm(w, mu, vw, mx, i, j, k + 1, 0, coef * w[a + 3], o)
    h = 0.5 * coef * w[a + 4]
    pm(w, mu, vw, mx, i + 2, j, k, 0, h, o)
    pm(w, mu, vw, mx, i, j + 2, k, 0, h, o)
    pm(w, mu, vw, mx, i, j, k + 2, 0, h, o)
    pm(w, mu, vw, mx, i, j, k, 1, h, o)


@njit(cache=True, inline="always")
def micro_slope(w, h, U, V, W, lam, N, a):
    """Solve <a psi> = w[h:h+5] under a unit-density Maxwellian, closed form.

    Equivalent to the 5x5 moment-matrix solve; the public API keeps the matrix
    route and the tests check both against each other.
    """
    K3 = N + 3.0
    q2 = U * U + V * V + W * W
    r1 = w[h + 1] - U * w[h]
    r2 = w[h + 2] - V * w[h]
    r3 = w[h + 3] - W * w[h]
    r4 = 2.0 * w[h + 4] - (q2 + K3 / (2.0 * lam)) * w[h]
    a4 = 4.0 * lam * lam / K3 * (r4 - 2.0 * U * r1 - 2.0 * V * r2 - 2.0 * W * r3)
    w[a + 1] = 2.0 * lam * r1 - U * a4
    w[a + 2] = 2.0 * lam * r2 - V * a4
    w[a + 3] = 2.0 * lam * r3 - W * a4
    w[a + 4] = a4
    w[a] = w[h] - U * w[a + 1] - V * w[a + 2] - W * w[a + 3] - 0.5 * a4 * (q2 + K3 / (2.0 * lam))


@njit(cache=True, inline="always")
def compat(w, mu, vw, mx, ax, U, V, W, lam, N, rhs, A):
    """Time slope A with <(ax u + ay v + az w + A) psi> = 0 (unit density),
    where (ax, ay, az) are stored consecutively at w[ax:ax+15].

    On return w[rhs:rhs+5] holds <A psi> = -<(ax u + ay v + az w) psi>.
    """
    for c in range(5):
        w[rhs + c] = 0.0
    amom(w, mu, vw, mx, 1, 0, 0, ax, -1.0, rhs)
    amom(w, mu, vw, mx, 0, 1, 0, ax + 5, -1.0, rhs)
    amom(w, mu, vw, mx, 0, 0, 1, ax + 10, -1.0, rhs)
    micro_slope(w, rhs, U, V, W, lam, N, A)


@njit(cache=True)
def cons_to_prim_point(q, gamma):
    """Return (rho, U, V, W, lam, p); non-positive rho or p is reported via p <= 0 or rho <= 0."""
    rho = q[0]
    if not rho > 0.0:
        return rho, 0.0, 0.0, 0.0, 0.0, -1.0
    U = q[1] / rho
    V = q[2] / rho
    W = q[3] / rho
    p = (gamma - 1.0) * (q[4] - 0.5 * rho * (U * U + V * V + W * W))
    if not p > 0.0:
        return rho, U, V, W, 0.0, p
    return rho, U, V, W, 0.5 * rho / p, p


@njit(cache=True)
def time_coefs(T, tau, c, o=0):
    """Integrals over [0, T] of the six time weights of the interface solution,
    written to c[o:o+6]."""
    if tau > 0.0:
        e = math.exp(-T / tau)
    else:
        e = 0.0
    c[o] = T - tau * (1.0 - e)
    c[o + 1] = 2.0 * tau * tau - tau * T - tau * (T + 2.0 * tau) * e
    c[o + 2] = 0.5 * T * T - tau * T + tau * tau * (1.0 - e)
    c[o + 3] = tau * (1.0 - e)
    c[o + 4] = -2.0 * tau * tau + tau * (T + 2.0 * tau) * e
    c[o + 5] = -tau * tau * (1.0 - e)


@njit(cache=True)
def viscosity(T, mu0, tref, law):
    if law == MU_SUTHERLAND:
        th = T / tref
        return mu0 * 1.4042 * th ** 1.5 / (th + 0.4042)
    return mu0


@njit(cache=True)
def collision_time_point(pl, pr, p0, mu, dt, mode, eps_tau=EPS_TAU, c_tau=C_TAU):
    jump = c_tau * abs(pl - pr) / (pl + pr) * dt
    if mode == TAU_INVISCID:
        return eps_tau * dt + jump
    return mu / p0 + jump


@njit(cache=True, inline="always")
def _assemble(w, c, g0, ga, gA, l0, la, lA, r0, ra, rA, o):
    for m in range(5):
        w[o + m] = (
            w[c] * w[g0 + m] + w[c + 1] * w[ga + m] + w[c + 2] * w[gA + m]
            + w[c + 3] * (w[l0 + m] + w[r0 + m]) + w[c + 4] * (w[la + m] + w[ra + m])
            + w[c + 5] * (w[lA + m] + w[rA + m])
        )


@njit(cache=True, inline="always")
def _prandtl_fix(w, F, Q, U, V, W, pr):
    q2 = U * U + V * V + W * W
    heat = (
        w[F + 4] - (U * w[F + 1] + V * w[F + 2] + W * w[F + 3]) + 0.5 * q2 * w[F]
        - U * w[Q + 4] + U * (U * w[Q + 1] + V * w[Q + 2] + W * w[Q + 3]) - 0.5 * U * q2 * w[Q]
    )
    w[F + 4] += (1.0 / pr - 1.0) * heat


# Scratch offsets of interface_point.
_MUL, _MULP, _TMP, _MUR, _MURN, _MU0, _MV, _MW = 0, 7, 14, 21, 28, 35, 42, 49
_MXL, _MXR, _MX0 = 56, 59, 62
_VWL, _VWR, _VW0 = 65, 101, 137
_Q0 = 173
_AL, _AR, _AB, _CAL, _CAR, _CAB, _H, _RHL, _RHR, _RH0 = 180, 195, 210, 225, 230, 235, 240, 245, 250, 255
_GF0, _GFA_, _GFAT, _LF0, _LFA_, _LFAT, _RF0, _RFA_, _RFAT = 260, 265, 270, 275, 280, 285, 290, 295, 300
_GQA_, _GQAT, _LQ0, _LQA_, _LQAT, _RQ0, _RQA_, _RQAT = 305, 310, 315, 320, 325, 330, 335, 340
_ACC_START, _ACC_END = 260, 345
_C, _F1, _F2, _S1, _S2 = 350, 356, 361, 366, 371
SCRATCH_SIZE = 384


@njit(cache=True, fastmath={"contract"})
def interface_point(ql, dl, qr, dr, dt, gamma, pr, tau_mode, tau_in, tau0_in,
                    mu0, tref, mu_law, euler_only, w, out, eps_tau=EPS_TAU, c_tau=C_TAU):
    """Kinetic interface solver at one Gauss point, normal frame.

    ql, qr: (5,) side states; dl, dr: (3, 5) derivatives along (n, t1, t2).
    w: scratch of length >= SCRATCH_SIZE.  out: (8, 5), rows ROW_*.
    Returns 0 on success, 1 on a non-positive side state, 2 on a non-positive
    interface equilibrium.
    """
    N = (5.0 - 3.0 * gamma) / (gamma - 1.0)
    rl, Ul, Vl, Wl, laml, pl = cons_to_prim_point(ql, gamma)
    rr, Ur, Vr, Wr, lamr, prr = cons_to_prim_point(qr, gamma)
    if not (rl > 0.0 and pl > 0.0 and rr > 0.0 and prr > 0.0):
        return 1

    # Moment tables per state: normal (full and half), transverse products, xi.
    moments_1d(Ul, laml, w, _MUL, _MULP, _TMP)
    moments_full(Vl, laml, w, _MV)
    moments_full(Wl, laml, w, _MW)
    transverse_table(w, _MV, _MW, _VWL)
    xi_moments(laml, N, w, _MXL)
    moments_1d(Ur, lamr, w, _MUR, _TMP, _MURN)
    moments_full(Vr, lamr, w, _MV)
    moments_full(Wr, lamr, w, _MW)
    transverse_table(w, _MV, _MW, _VWR)
    xi_moments(lamr, N, w, _MXR)

    for m in range(5):
        w[_Q0 + m] = 0.0
    pm(w, _MULP, _VWL, _MXL, 0, 0, 0, 0, rl, _Q0)
    pm(w, _MURN, _VWR, _MXR, 0, 0, 0, 0, rr, _Q0)
    q0 = w[_Q0:_Q0 + 5]
    r0, U0, V0, W0, lam0, p0 = cons_to_prim_point(q0, gamma)
    if not (r0 > 0.0 and p0 > 0.0):
        return 2
    moments_full(U0, lam0, w, _MU0)
    moments_full(V0, lam0, w, _MV)
    moments_full(W0, lam0, w, _MW)
    transverse_table(w, _MV, _MW, _VW0)
    xi_moments(lam0, N, w, _MX0)

    # Collision times.
    if tau_mode == TAU_EXPLICIT:
        tau = tau_in
        tau0 = tau0_in
    else:
        mu = viscosity(1.0 / (2.0 * lam0), mu0, tref, mu_law)
        tau = collision_time_point(pl, prr, p0, mu, dt, tau_mode, eps_tau, c_tau)
        tau0 = collision_time_point(pl, prr, p0, 0.0, dt, TAU_INVISCID, eps_tau, c_tau)
    if euler_only:
        tau = 0.0

    # Micro-slopes of each side along (n, t1, t2) and their time slopes.
    for d in range(3):
        for m in range(5):
            w[_H + m] = dl[d, m] / rl
        micro_slope(w, _H, Ul, Vl, Wl, laml, N, _AL + 5 * d)
        for m in range(5):
            w[_H + m] = dr[d, m] / rr
        micro_slope(w, _H, Ur, Vr, Wr, lamr, N, _AR + 5 * d)
    compat(w, _MUL, _VWL, _MXL, _AL, Ul, Vl, Wl, laml, N, _RHL, _CAL)
    compat(w, _MUR, _VWR, _MXR, _AR, Ur, Vr, Wr, lamr, N, _RHR, _CAR)

    # Equilibrium slopes from the half-moment weighted side slopes.
    for d in range(3):
        for m in range(5):
            w[_H + m] = 0.0
        amom(w, _MULP, _VWL, _MXL, 0, 0, 0, _AL + 5 * d, rl, _H)
        amom(w, _MURN, _VWR, _MXR, 0, 0, 0, _AR + 5 * d, rr, _H)
        for m in range(5):
            w[_H + m] /= r0
        micro_slope(w, _H, U0, V0, W0, lam0, N, _AB + 5 * d)
    compat(w, _MU0, _VW0, _MX0, _AB, U0, V0, W0, lam0, N, _RH0, _CAB)

    # Moment vectors of the flux (extra factor u) and of the state.  Under a
    # full Maxwellian <A psi> and sum_d <u_d a_d psi> are already known from
    # the compatibility solve.
    for m in range(_ACC_START, _ACC_END):
        w[m] = 0.0
    pm(w, _MU0, _VW0, _MX0, 1, 0, 0, 0, r0, _GF0)
    amom(w, _MU0, _VW0, _MX0, 1, 0, 0, _CAB, r0, _GFAT)
    for m in range(5):
        w[_GQAT + m] = r0 * w[_RH0 + m]
    pm(w, _MULP, _VWL, _MXL, 1, 0, 0, 0, rl, _LF0)
    pm(w, _MULP, _VWL, _MXL, 0, 0, 0, 0, rl, _LQ0)
    pm(w, _MURN, _VWR, _MXR, 1, 0, 0, 0, rr, _RF0)
    pm(w, _MURN, _VWR, _MXR, 0, 0, 0, 0, rr, _RQ0)
    if tau > 0.0:
        amom(w, _MULP, _VWL, _MXL, 1, 0, 0, _CAL, rl, _LFAT)
        amom(w, _MULP, _VWL, _MXL, 0, 0, 0, _CAL, rl, _LQAT)
        amom(w, _MURN, _VWR, _MXR, 1, 0, 0, _CAR, rr, _RFAT)
        amom(w, _MURN, _VWR, _MXR, 0, 0, 0, _CAR, rr, _RQAT)
        for m in range(5):
            w[_GQA_ + m] = -r0 * w[_RH0 + m]
        for d in range(3):
            i = 1 if d == 0 else 0
            j = 1 if d == 1 else 0
            k = 1 if d == 2 else 0
            amom(w, _MU0, _VW0, _MX0, i + 1, j, k, _AB + 5 * d, r0, _GFA_)
            amom(w, _MULP, _VWL, _MXL, i + 1, j, k, _AL + 5 * d, rl, _LFA_)
            amom(w, _MULP, _VWL, _MXL, i, j, k, _AL + 5 * d, rl, _LQA_)
            amom(w, _MURN, _VWR, _MXR, i + 1, j, k, _AR + 5 * d, rr, _RFA_)
            amom(w, _MURN, _VWR, _MXR, i, j, k, _AR + 5 * d, rr, _RQA_)

    time_coefs(dt, tau, w, _C)
    _assemble(w, _C, _GF0, _GFA_, _GFAT, _LF0, _LFA_, _LFAT, _RF0, _RFA_, _RFAT, _F1)
    _assemble(w, _C, _Q0, _GQA_, _GQAT, _LQ0, _LQA_, _LQAT, _RQ0, _RQA_, _RQAT, _S1)
    time_coefs(0.5 * dt, tau, w, _C)
    _assemble(w, _C, _GF0, _GFA_, _GFAT, _LF0, _LFA_, _LFAT, _RF0, _RFA_, _RFAT, _F2)
    _assemble(w, _C, _Q0, _GQA_, _GQAT, _LQ0, _LQA_, _LQAT, _RQ0, _RQA_, _RQAT, _S2)
    if pr != 1.0:
        _prandtl_fix(w, _F1, _S1, U0, V0, W0, pr)
        _prandtl_fix(w, _F2, _S2, U0, V0, W0, pr)

    inv = 1.0 / dt
    inv2 = 4.0 / (dt * dt)
    for m in range(5):
        out[ROW_F, m] = (4.0 * w[_F2 + m] - w[_F1 + m]) * inv
        out[ROW_FT, m] = (w[_F1 + m] - 2.0 * w[_F2 + m]) * inv2
        out[ROW_Q, m] = (4.0 * w[_S2 + m] - w[_S1 + m]) * inv
        out[ROW_QT, m] = (w[_S1 + m] - 2.0 * w[_S2 + m]) * inv2

    # Relaxed side states: value at t_n and time slope.
    if tau0 > 0.0:
        wt = 1.0 - math.exp(-dt / tau0)
    else:
        wt = 1.0
    for m in range(5):
        out[ROW_SL, m] = wt * w[_Q0 + m] + (1.0 - wt) * ql[m]
        out[ROW_SLT, m] = wt * r0 * w[_RH0 + m] + (1.0 - wt) * rl * w[_RHL + m]
        out[ROW_SR, m] = wt * w[_Q0 + m] + (1.0 - wt) * qr[m]
        out[ROW_SRT, m] = wt * r0 * w[_RH0 + m] + (1.0 - wt) * rr * w[_RHR + m]
    return 0


def scratch() -> np.ndarray:
    return np.zeros(SCRATCH_SIZE)
