"""Mesh-level compiled kernels.

Every kernel loops over cells with ``prange`` in fixed-size chunks; each chunk
owns its scratch buffers, each cell writes only its own output slots, and all
per-cell sums run in a fixed order, so results are bit-identical for any
thread count.

Face-point array layout shared by the reconstruction and flux kernels:
``R[c, f, k, o, m]`` with face ``f = 2*axis + side`` (side 1 = plus face),
Gauss point ``k``, output ``o`` = (value, d/dn, d/dt1, d/dt2) in physical
units, conserved component ``m``.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from cgks import _core

CHUNK = 64
GAUSS_2 = 0.5 / math.sqrt(3.0)


@njit(cache=True, inline="always")
def _perm(a, m):
    # Conserved-component index in the frame (axis, axis+1, axis+2).
    if m == 0 or m == 4:
        return m
    return 1 + (a + m - 1) % 3


@njit(cache=True)
def _face_ref_point(f, k, delta):
    a = f // 2
    t1 = (a + 1) % 3
    t2 = (a + 2) % 3
    delta[a] = 0.5 if f % 2 == 1 else -0.5
    delta[t1] = -GAUSS_2 if k < 2 else GAUSS_2
    delta[t2] = -GAUSS_2 if k % 2 == 0 else GAUSS_2


@njit(cache=True)
def _gather_data(c, Q, Lines, nbr, H, EDIRS, Dt):
    """Fill the (5, 72) reconstruction data block of cell c (reference units)."""
    for s in range(18):
        n = nbr[c, s]
        for m in range(5):
            Dt[m, s] = Q[n, m] - Q[c, m]
    for fm in range(6):
        n = nbr[c, fm]
        for a in range(3):
            ha = H[c, a]
            for m in range(5):
                Dt[m, 18 + 3 * fm + a] = ha * 0.25 * (
                    Lines[n, a, 0, m] + Lines[n, a, 1, m] + Lines[n, a, 2, m] + Lines[n, a, 3, m]
                )
    for e in range(12):
        n = nbr[c, 6 + e]
        for j in range(2):
            for m in range(5):
                acc = 0.0
                for a in range(3):
                    d = EDIRS[e, j, a]
                    if d != 0.0:
                        acc += d * H[c, a] * 0.25 * (
                            Lines[n, a, 0, m] + Lines[n, a, 1, m] + Lines[n, a, 2, m] + Lines[n, a, 3, m]
                        )
                Dt[m, 36 + 2 * e + j] = acc
    for a in range(3):
        for k in range(4):
            for m in range(5):
                Dt[m, 60 + 4 * a + k] = H[c, a] * Lines[c, a, k, m]


@njit(cache=True)
def _geno_blend(c, Q, Lines, nbr, H, off, chi_c, B, chi, IS, b, tr):
    """Weighted sub-stencil slope B (3, 5) in reference units and chi per component.

    IS (6,), b (6, 3) and tr (3,) are scratch.
    """
    for m in range(5):
        for a in range(3):
            tr[a] = H[c, a] * 0.25 * (Lines[c, a, 0, m] + Lines[c, a, 1, m] + Lines[c, a, 2, m] + Lines[c, a, 3, m])
        lo = np.inf
        hi = 0.0
        for fm in range(6):
            a = fm // 2
            for t in range(3):
                b[fm, t] = tr[t]
            b[fm, a] = (Q[nbr[c, fm], m] - Q[c, m]) / off[fm]
            v = b[fm, 0] ** 2 + b[fm, 1] ** 2 + b[fm, 2] ** 2
            IS[fm] = v
            lo = min(lo, v)
            hi = max(hi, v)
        wsum = 0.0
        for fm in range(6):
            w = (1.0 / 6.0) / (IS[fm] + 1e-15) ** 5
            IS[fm] = w
            wsum += w
        for t in range(3):
            acc = 0.0
            for fm in range(6):
                acc += IS[fm] * b[fm, t]
            B[t, m] = acc / wsum
        zeta = (hi - lo) / (lo + 1e-15 + chi_c * hi)
        chi[m] = math.exp(-zeta ** 4)


@njit(cache=True, fastmath={"reassoc", "contract"})
def _apply_weights(W, Dt, acc):
    """acc[m, r] = sum_d W[r, d] Dt[m, d].

    Reassociation lets the compiler vectorize the dot products; the compiled
    order is fixed, so results stay reproducible.
    """
    for r in range(W.shape[0]):
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        s3 = 0.0
        s4 = 0.0
        for d in range(W.shape[1]):
            w = W[r, d]
            s0 += w * Dt[0, d]
            s1 += w * Dt[1, d]
            s2 += w * Dt[2, d]
            s3 += w * Dt[3, d]
            s4 += w * Dt[4, d]
        acc[0, r] = s0
        acc[1, r] = s1
        acc[2, r] = s2
        acc[3, r] = s3
        acc[4, r] = s4


@njit(cache=True, parallel=True)
def recon5_faces(Q, Lines, nbr, H, cls, Wf, off_tab, EDIRS, chi_c, force_linear, R):
    """Face Gauss-point values and gradients; Wf[cls] is (96, 72) with row
    index ((face * 4 + point) * 4 + output)."""
    nc = Q.shape[0]
    nch = (nc + CHUNK - 1) // CHUNK
    for ch in prange(nch):
        D = np.empty((5, 72))
        B = np.zeros((3, 5))
        chi = np.ones(5)
        delta = np.empty(3)
        acc = np.empty((5, 96))
        IS = np.empty(6)
        bs = np.empty((6, 3))
        tr = np.empty(3)
        for c in range(ch * CHUNK, min(nc, (ch + 1) * CHUNK)):
            _gather_data(c, Q, Lines, nbr, H, EDIRS, D)
            cl = cls[c]
            _apply_weights(Wf[cl], D, acc)
            if not force_linear:
                _geno_blend(c, Q, Lines, nbr, H, off_tab[cl], chi_c, B, chi, IS, bs, tr)
            for f in range(6):
                a = f // 2
                ax0 = a
                ax1 = (a + 1) % 3
                ax2 = (a + 2) % 3
                for k in range(4):
                    _face_ref_point(f, k, delta)
                    r = (f * 4 + k) * 4
                    for m in range(5):
                        q0 = Q[c, m]
                        if force_linear:
                            R[c, f, k, 0, m] = q0 + acc[m, r]
                            R[c, f, k, 1, m] = acc[m, r + 1] / H[c, ax0]
                            R[c, f, k, 2, m] = acc[m, r + 2] / H[c, ax1]
                            R[c, f, k, 3, m] = acc[m, r + 3] / H[c, ax2]
                        else:
                            x = chi[m]
                            lin = q0 + B[0, m] * delta[0] + B[1, m] * delta[1] + B[2, m] * delta[2]
                            R[c, f, k, 0, m] = x * (q0 + acc[m, r]) + (1.0 - x) * lin
                            R[c, f, k, 1, m] = (x * acc[m, r + 1] + (1.0 - x) * B[ax0, m]) / H[c, ax0]
                            R[c, f, k, 2, m] = (x * acc[m, r + 2] + (1.0 - x) * B[ax1, m]) / H[c, ax1]
                            R[c, f, k, 3, m] = (x * acc[m, r + 3] + (1.0 - x) * B[ax2, m]) / H[c, ax2]


@njit(cache=True)
def _venkat(d1, d2, eps2):
    if d2 == 0.0:
        return 1.0
    phi = (d1 * d1 + eps2 + 2.0 * d2 * d1) / (d1 * d1 + 2.0 * d2 * d2 + d1 * d2 + eps2)
    return min(1.0, phi)


@njit(cache=True, parallel=True)
def recon2_faces(Q, nbr, H, k_venkat, force_linear, R, PHI):
    """Limited linear reconstruction at face midpoints; PHI (nc, 5) receives phi0."""
    nc = Q.shape[0]
    nch = (nc + CHUNK - 1) // CHUNK
    for ch in prange(nch):
        b = np.empty((3, 5))
        for c in range(ch * CHUNK, min(nc, (ch + 1) * CHUNK)):
            for a in range(3):
                nm = nbr[c, 2 * a]
                npl = nbr[c, 2 * a + 1]
                dm = -0.5 - 0.5 * H[nm, a] / H[c, a]
                dp = 0.5 + 0.5 * H[npl, a] / H[c, a]
                den = dm * dm + dp * dp
                for m in range(5):
                    b[a, m] = (dm * (Q[nm, m] - Q[c, m]) + dp * (Q[npl, m] - Q[c, m])) / den
            hgeo = (H[c, 0] * H[c, 1] * H[c, 2]) ** (1.0 / 3.0)
            eps2 = (k_venkat * hgeo) ** 3
            for m in range(5):
                phi = 1.0
                if not force_linear:
                    qmax = Q[c, m]
                    qmin = Q[c, m]
                    for s in range(6):
                        v = Q[nbr[c, s], m]
                        qmax = max(qmax, v)
                        qmin = min(qmin, v)
                    for f in range(6):
                        d2 = b[f // 2, m] * (0.5 if f % 2 == 1 else -0.5)
                        if d2 > 0.0:
                            d1 = qmax - Q[c, m]
                        else:
                            d1 = qmin - Q[c, m]
                        phi = min(phi, _venkat(d1, d2, eps2))
                PHI[c, m] = phi
                for f in range(6):
                    a = f // 2
                    R[c, f, 0, 0, m] = Q[c, m] + phi * b[a, m] * (0.5 if f % 2 == 1 else -0.5)
                    for o in range(3):
                        ax = (a + o) % 3
                        R[c, f, 0, 1 + o, m] = phi * b[ax, m] / H[c, ax]


@njit(cache=True, parallel=True)
def face_fluxes(R, nbr, weights, dt, gamma, pr, tau_mode, mu0, tref, mu_law, euler_only,
                with_sides, Fsum, Ftsum, Sp, Spt, Sm, Smt, status, eps_tau=_core.EPS_TAU, c_tau=_core.C_TAU):
    """Interface solver on every face.

    Face (c, a) sits between cell c (left, its plus face) and nbr[c, 2a+1].
    Fsum/Ftsum (nc, 3, 5) receive quadrature-weighted fluxes per unit area in
    the global frame.  With ``with_sides`` the relaxed side states and their
    time slopes go to Sp/Spt[c, a, k] (cell c side) and Sm/Smt[n, a, k].
    """
    nc = R.shape[0]
    K = R.shape[2]
    nch = (nc + CHUNK - 1) // CHUNK
    for ch in prange(nch):
        ws = np.zeros(512)
        ql = np.empty(5)
        qr = np.empty(5)
        dl = np.empty((3, 5))
        dr = np.empty((3, 5))
        out = np.empty((8, 5))
        for c in range(ch * CHUNK, min(nc, (ch + 1) * CHUNK)):
            for a in range(3):
                n = nbr[c, 2 * a + 1]
                for m in range(5):
                    Fsum[c, a, m] = 0.0
                    Ftsum[c, a, m] = 0.0
                st = 0
                for k in range(K):
                    for m in range(5):
                        g = _perm(a, m)
                        ql[m] = R[c, 2 * a + 1, k, 0, g]
                        qr[m] = R[n, 2 * a, k, 0, g]
                        for o in range(3):
                            dl[o, m] = R[c, 2 * a + 1, k, 1 + o, g]
                            dr[o, m] = R[n, 2 * a, k, 1 + o, g]
                    s = _core.interface_point(ql, dl, qr, dr, dt, gamma, pr, tau_mode, 0.0, 0.0,
                                              mu0, tref, mu_law, euler_only, ws, out, eps_tau, c_tau)
                    if s != 0:
                        st = s
                        continue
                    w = weights[k]
                    for m in range(5):
                        g = _perm(a, m)
                        Fsum[c, a, g] += w * out[_core.ROW_F, m]
                        Ftsum[c, a, g] += w * out[_core.ROW_FT, m]
                        if with_sides:
                            Sp[c, a, k, g] = out[_core.ROW_SL, m]
                            Spt[c, a, k, g] = out[_core.ROW_SLT, m]
                            Sm[n, a, k, g] = out[_core.ROW_SR, m]
                            Smt[n, a, k, g] = out[_core.ROW_SRT, m]
                status[c, a] = st


@njit(cache=True)
def _point_diag(q, dq, gamma, mu0, tref, mu_law, G, out):
    """Adds (0.5 rho |U|^2, mu |curl U|^2, mu (div U)^2) at one point; G (3, 3) is scratch."""
    rho = q[0]
    u0 = q[1] / rho
    u1 = q[2] / rho
    u2 = q[3] / rho
    p = (gamma - 1.0) * (q[4] - 0.5 * rho * (u0 * u0 + u1 * u1 + u2 * u2))
    mu = _core.viscosity(p / rho, mu0, tref, mu_law)
    # G[i][j] = d u_i / d x_j
    for j in range(3):
        drho = dq[j, 0]
        G[0, j] = (dq[j, 1] - u0 * drho) / rho
        G[1, j] = (dq[j, 2] - u1 * drho) / rho
        G[2, j] = (dq[j, 3] - u2 * drho) / rho
    wx = G[2, 1] - G[1, 2]
    wy = G[0, 2] - G[2, 0]
    wz = G[1, 0] - G[0, 1]
    div = G[0, 0] + G[1, 1] + G[2, 2]
    out[0] += 0.5 * rho * (u0 * u0 + u1 * u1 + u2 * u2)
    out[1] += mu * (wx * wx + wy * wy + wz * wz)
    out[2] += mu * div * div


@njit(cache=True, parallel=True)
def diag5_cells(Q, Lines, nbr, H, cls, Wi, off_tab, EDIRS, chi_c, force_linear,
                gamma, mu0, tref, mu_law, out):
    """Per-cell means over 2x2x2 interior Gauss points of the diagnostic integrands.

    Wi[cls] is (32, 72) with row index (point * 4 + output).
    """
    nc = Q.shape[0]
    nch = (nc + CHUNK - 1) // CHUNK
    for ch in prange(nch):
        D = np.empty((5, 72))
        B = np.zeros((3, 5))
        chi = np.ones(5)
        q = np.empty(5)
        dq = np.empty((3, 5))
        acc = np.empty(3)
        delta = np.empty(3)
        W = np.empty((5, 32))
        G = np.empty((3, 3))
        IS = np.empty(6)
        bs = np.empty((6, 3))
        tr = np.empty(3)
        for c in range(ch * CHUNK, min(nc, (ch + 1) * CHUNK)):
            _gather_data(c, Q, Lines, nbr, H, EDIRS, D)
            cl = cls[c]
            _apply_weights(Wi[cl], D, W)
            if not force_linear:
                _geno_blend(c, Q, Lines, nbr, H, off_tab[cl], chi_c, B, chi, IS, bs, tr)
            acc[:] = 0.0
            for p in range(8):
                delta[0] = -GAUSS_2 if p < 4 else GAUSS_2
                delta[1] = -GAUSS_2 if (p // 2) % 2 == 0 else GAUSS_2
                delta[2] = -GAUSS_2 if p % 2 == 0 else GAUSS_2
                for m in range(5):
                    v = W[m, 4 * p]
                    g0 = W[m, 4 * p + 1]
                    g1 = W[m, 4 * p + 2]
                    g2 = W[m, 4 * p + 3]
                    if force_linear:
                        q[m] = Q[c, m] + v
                        dq[0, m] = g0 / H[c, 0]
                        dq[1, m] = g1 / H[c, 1]
                        dq[2, m] = g2 / H[c, 2]
                    else:
                        xm = chi[m]
                        lin = Q[c, m] + B[0, m] * delta[0] + B[1, m] * delta[1] + B[2, m] * delta[2]
                        q[m] = xm * (Q[c, m] + v) + (1.0 - xm) * lin
                        dq[0, m] = (xm * g0 + (1.0 - xm) * B[0, m]) / H[c, 0]
                        dq[1, m] = (xm * g1 + (1.0 - xm) * B[1, m]) / H[c, 1]
                        dq[2, m] = (xm * g2 + (1.0 - xm) * B[2, m]) / H[c, 2]
                _point_diag(q, dq, gamma, mu0, tref, mu_law, G, acc)
            for i in range(3):
                out[c, i] = acc[i] / 8.0


@njit(cache=True, parallel=True)
def diag2_cells(Q, nbr, H, k_venkat, force_linear, gamma, mu0, tref, mu_law, R, PHI, out):
    """GKS-2nd diagnostics from limited linear slopes (R, PHI from recon2_faces)."""
    nc = Q.shape[0]
    nch = (nc + CHUNK - 1) // CHUNK
    for ch in prange(nch):
        q = np.empty(5)
        dq = np.empty((3, 5))
        acc = np.empty(3)
        G = np.empty((3, 3))
        for c in range(ch * CHUNK, min(nc, (ch + 1) * CHUNK)):
            acc[:] = 0.0
            for p in range(8):
                dx = (-GAUSS_2 if p < 4 else GAUSS_2, -GAUSS_2 if (p // 2) % 2 == 0 else GAUSS_2,
                      -GAUSS_2 if p % 2 == 0 else GAUSS_2)
                for m in range(5):
                    v = Q[c, m]
                    for a in range(3):
                        # Limited physical slope along a is stored on the plus face of axis a.
                        s = R[c, 2 * a + 1, 0, 1, m]
                        dq[a, m] = s
                        v += s * H[c, a] * dx[a]
                    q[m] = v
                _point_diag(q, dq, gamma, mu0, tref, mu_law, G, acc)
            for i in range(3):
                out[c, i] = acc[i] / 8.0
