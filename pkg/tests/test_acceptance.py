"""End-to-end acceptance criteria 1-11, one PASS/FAIL line each.

Each test records its verdict through :func:`criterion`; the lines are
printed as they finish and again in the terminal summary.
"""

from __future__ import annotations

import contextlib
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from numpy.polynomial import Polynomial
from scipy.linalg import expm
from scipy.spatial.transform import Rotation

from _oracles import MaxwellQuadrature, euler_flux_prim, gauss_legendre_moments
from conftest import ACCEPTANCE_LINES
from cgks.cases import exact_riemann
from cgks.evolve import SchemeParams, Solver, step_s2o4
from cgks.flux import InterfaceInput, euler_flux, evaluate_interface
from cgks.harness.config import load_config
from cgks.harness.io import read_field, strip_timing
from cgks.harness.runner import convergence_study, efficiency_compare, run_case
from cgks.kinetic import Primitive, compat_solve, micro_slope_closed, moments, prim_to_cons
from cgks.mesh import STENCIL_OFFSETS, build_mesh, neighbor_boxes
from cgks.recon2 import reconstruct_cell
from cgks.recon5 import CellDofs, face_point_refs, geno_combine, quartic_cls, substencil_linears

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@contextlib.contextmanager
def criterion(n: int, title: str):
    """Record PASS/FAIL for criterion ``n``; the body may append detail strings."""
    detail: list[str] = []
    t0 = time.perf_counter()
    try:
        yield detail
    except BaseException as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        _emit(n, "FAIL", title, detail + [msg], time.perf_counter() - t0)
        raise
    _emit(n, "PASS", title, detail, time.perf_counter() - t0)


def _emit(n, verdict, title, detail, secs):
    line = f"criterion {n:2d} {verdict}: {title} ({'; '.join(detail)}; {secs:.1f} s)"
    ACCEPTANCE_LINES[n] = line
    print(line, flush=True)


def _rel_err(got, ref):
    got, ref = np.asarray(got), np.asarray(ref)
    return float(np.max(np.abs(got - ref) / np.maximum(1.0, np.abs(ref))))


# ---------------------------------------------------------------------------


def test_c01_moment_oracle():
    with criterion(1, "Maxwellian moments vs brute-force quadrature") as d:
        t0 = time.perf_counter()
        worst = 0.0
        for lam in np.geomspace(0.1, 10.0, 9):
            for U in np.linspace(-3.0, 3.0, 13):
                m = moments(Primitive(1.0, (U, 0.0, 0.0), lam))
                for name, half in (("full", None), ("pos", "pos"), ("neg", "neg")):
                    ref = gauss_legendre_moments(U, lam, order=6, half=half)
                    worst = max(worst, _rel_err(getattr(m, name)[:7], ref))
        secs = time.perf_counter() - t0
        d.append(f"max rel err {worst:.2e}, {secs:.2f} s")
        assert worst <= 1e-10
        assert secs < 10.0


def test_c02_micro_slope_round_trip():
    with criterion(2, "micro-slope round trip and compatibility, 1000 states") as d:
        rng = np.random.default_rng(2024)
        worst_rt = worst_cp = 0.0
        for _ in range(1000):
            p = Primitive.from_pressure(rng.uniform(0.1, 5.0), rng.uniform(-3, 3, 3), rng.uniform(0.1, 5.0),
                                        rng.uniform(1.1, 1.6))
            o = MaxwellQuadrature(p.vel, p.lam, p.K_int)
            dQ = rng.normal(size=(3, 5))
            slopes = [micro_slope_closed(p, dQ[k]).coef for k in range(3)]
            back = p.rho * o.psi_expect(o.slope_field(slopes[0]))
            worst_rt = max(worst_rt, _rel_err(back, dQ[0]))
            A = compat_solve(p, slopes).coef
            f = o.slope_field(slopes[0]) * o.U + o.slope_field(slopes[1]) * o.V + o.slope_field(slopes[2]) * o.W
            resid = p.rho * o.psi_expect(f + o.slope_field(A))
            scale = max(1.0, float(np.abs(p.rho * o.psi_expect(f)).max()))
            worst_cp = max(worst_cp, float(np.abs(resid).max()) / scale)
        d.append(f"round trip {worst_rt:.2e}, compatibility {worst_cp:.2e}")
        assert worst_rt <= 1e-10 and worst_cp <= 1e-10


def test_c03_flux_consistency():
    with criterion(3, "uniform flux = Euler flux; linear shear gives Navier-Stokes stress and heat flux") as d:
        rng = np.random.default_rng(3)
        worst = 0.0
        Z = np.zeros((3, 5))
        for _ in range(50):
            rho, p = rng.uniform(0.2, 3.0, 2)
            vel = rng.uniform(-2, 2, 3)
            R = Rotation.random(random_state=rng).as_matrix()
            q = prim_to_cons(Primitive.from_pressure(rho, vel, p))
            ev = evaluate_interface(InterfaceInput(q, Z, q, Z, frame=R, dt=rng.uniform(1e-4, 1e-1),
                                                   tau=rng.uniform(1e-5, 1e-2)))
            ref = euler_flux(q, 1.4, R[0])
            worst = max(worst, _rel_err(ev.F_n, ref))
        ref_axis = euler_flux_prim(1.2, (0.3, -0.4, 0.5), 0.8, 1.4, axis=0)
        q = prim_to_cons(Primitive.from_pressure(1.2, (0.3, -0.4, 0.5), 0.8))
        worst = max(worst, _rel_err(evaluate_interface(InterfaceInput(q, Z, q, Z, dt=1e-2, tau=1e-3)).F_n, ref_axis))

        tau, rho0, p0, gamma, s, r, V0 = 1e-4, 1.0, 1.0, 1.4, 0.2, 0.3, 0.3
        errs = []
        for pr in (1.0, 0.72):
            q = prim_to_cons(Primitive.from_pressure(rho0, (0.0, V0, 0.0), p0, gamma))
            dq = np.zeros((3, 5))
            dq[0] = [r, 0.0, rho0 * s + V0 * r, 0.0, rho0 * V0 * s + 0.5 * V0 ** 2 * r]
            ev = evaluate_interface(InterfaceInput(q, dq, q, dq, dt=1e-3, tau=tau, tau0=tau, gamma=gamma, pr=pr))
            mu = tau * p0
            shear = -mu * s
            heat = mu * gamma / (gamma - 1.0) / pr * p0 * r / rho0 ** 2
            errs += [abs(ev.F_n[2] / shear - 1.0), abs((ev.F_n[4] - V0 * shear) / heat - 1.0)]
        d.append(f"uniform max rel err {worst:.2e}, shear/heat max rel err {max(errs):.2e}")
        assert worst <= 1e-12
        assert max(errs) <= 1e-3


def test_c04_spatial_order(tmp_path):
    with criterion(4, "density-wave spatial order, linear CGKS-5th >= 4.5 and GKS-2nd in [1.8, 2.2]") as d:
        t0 = time.perf_counter()
        r5 = convergence_study(load_config(CONFIGS / "density_wave_cgks5.ini"), [8, 16, 32], tmp_path)
        r2 = convergence_study(load_config(CONFIGS / "density_wave_gks2.ini"), [8, 16, 32], tmp_path)
        secs = time.perf_counter() - t0
        d.append(f"cgks5 L1 orders {r5.orders_l1[0]:.3f}, {r5.orders_l1[1]:.3f}")
        d.append(f"gks2 L1 orders {r2.orders_l1[0]:.3f}, {r2.orders_l1[1]:.3f}")
        d.append(f"study wall {secs:.0f} s")
        assert r5.orders_l1[-1] >= 4.5
        assert 1.8 <= r2.orders_l1[-1] <= 2.2
        assert secs < 300.0


def _advection_operator(n):
    """Semi-discrete periodic advection (speed 1) with upwind fluxes of a linear reconstruction."""
    h = 2 * math.pi / n
    eye = np.eye(n)
    slope = 0.5 * (np.roll(eye, -1, axis=0) - np.roll(eye, 1, axis=0))
    face = eye + 0.5 * slope  # value at the plus face of each cell
    return -(face - np.roll(face, 1, axis=0)) / h


def test_c05_temporal_order():
    with criterion(5, "S2O4 amplification and temporal refinement order") as d:
        z = Polynomial([0.0, 1.0])
        amp = step_s2o4(Polynomial([1.0]), lambda q: (q, q), z)
        coef = amp.coef
        taylor = [1.0 / math.factorial(k) for k in range(5)]
        d.append(f"amplification coefficients {np.round(coef, 15).tolist()}")
        assert len(coef) == 5
        np.testing.assert_allclose(coef, taylor, rtol=1e-15)

        n = 128
        A = _advection_operator(n)
        x = (np.arange(n) + 0.5) * 2 * math.pi / n
        Q0 = np.exp(np.sin(x))
        T = 1.0
        ref = expm(T * A) @ Q0
        errs = []
        steps = [8, 16, 32, 64]
        for k in steps:
            dt = T / k
            Q = Q0.copy()
            for _ in range(k):
                Q = step_s2o4(Q, lambda q: (A @ q, A @ (A @ q)), dt)
            errs.append(float(np.max(np.abs(Q - ref))))
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
        d.append("temporal orders " + ", ".join(f"{o:.3f}" for o in orders))
        assert orders[-1] >= 3.9


def test_c06_conservation_and_free_stream(tmp_path):
    with criterion(6, "1000-step TGV conservation and stretched-mesh free stream") as d:
        for scheme in ("gks2", "cgks5"):
            cfg = load_config(CONFIGS / "tgv_subsonic_cgks5_24.ini",
                              {"scheme": {"id": scheme}, "mesh": {"dims": "8,8,8"},
                               "time": {"t_end": "100", "max_steps": "1000", "cfl": "0.3"},
                               "recon": {"force_linear": "false"},
                               "output": {"every": "100", "name": f"cons_{scheme}"}})
            rep = run_case(cfg, tmp_path)
            assert rep.status == "ok" and rep.steps == 1000, rep.message
            drift = max(rep.conservation_drift)
            d.append(f"{scheme} drift {drift:.1e}")
            assert drift < 1e-11

        rng = np.random.default_rng(6)
        dims = (6, 5, 4)
        mesh = build_mesh(dims, [np.cumsum(np.r_[0.0, rng.uniform(0.6, 1.4, n)]) for n in dims])
        q = prim_to_cons(Primitive.from_pressure(1.2, (0.3, -0.2, 0.5), 0.9))
        Q0 = np.tile(q, (mesh.ncells, 1))
        for scheme in ("gks2", "cgks5"):
            s = Solver(mesh, SchemeParams(scheme, tau_mode="viscous", mu0=1e-3), Q0)
            dt = s.stable_dt().dt
            for _ in range(100):
                s.step(dt)
            err = float(np.max(np.abs(s.Q - Q0)))
            d.append(f"{scheme} free-stream error {err:.1e}")
            assert err <= 1e-12


def _sod_profile(cfg_name, tmp_path):
    cfg = load_config(CONFIGS / cfg_name, {"output": {"fields": "true"}})
    rep = run_case(cfg, tmp_path)
    assert rep.status == "ok", rep.message
    _, arrays = read_field(rep.field_paths[0])
    n = cfg.build_mesh().dims[0] // 2
    return rep, arrays["rho"][:n, 0, 0]


def test_c07_shock_robustness(tmp_path):
    with criterion(7, "Sod tube at 100 cells, L1 error and post-shock overshoot") as d:
        ok = True
        for name, limit in (("sod_gks2.ini", 0.02), ("sod_cgks5.ini", 0.015)):
            rep, rho = _sod_profile(name, tmp_path)
            n = len(rho)
            h = 1.0 / n
            x = (np.arange(n) + 0.5) * h
            ex = exact_riemann((1.0, 0.0, 1.0), (0.125, 0.0, 0.1), 1.4, x, 0.2)
            us = 0.92745
            rho_post = 0.26557
            window = x > 0.5 + us * 0.2 + 3 * h
            overshoot = max(0.0, float(rho[window].max()) - rho_post) / (rho_post - 0.125)
            d.append(f"{rep.scheme} L1 {rep.errors['L1']:.4f} (< {limit}), overshoot {100 * overshoot:.2f}%")
            ok &= rep.errors["L1"] < limit and overshoot < 0.02
            assert np.all(np.isfinite(ex))
        assert ok


def _geno_cell(nbs, own, mesh, idx, x):
    g = mesh.cell_geom(idx)
    boxes = neighbor_boxes(mesh, idx)
    p4 = quartic_cls(own, nbs, boxes, g.scales)
    off = [boxes[m, m // 2].mean() for m in range(6)]
    subs = substencil_linears(own, [nb.q0 for nb in nbs[:6]], off, g.scales)
    return p4, geno_combine(p4, subs, x, g.scales)


def test_c08_eno_and_limiter_properties():
    with criterion(8, "GENO bounds and chi limits, Venkatakrishnan phi") as d:
        mesh = build_mesh((5, 5, 5), [(0, 1)] * 3)
        idx = (2, 2, 2)
        zero = np.zeros((3, 4, 1))
        own = CellDofs.from_lines(np.array([0.0]), zero)
        nbs = [CellDofs(np.array([1.0 if o[0] > 0 else 0.0]), np.zeros((3, 1)), zero) for o in STENCIL_OFFSETS]
        lo = hi = 0.0
        chi_step = 0.0
        for f in range(6):
            for x in face_point_refs(f):
                _, out = _geno_cell(nbs, own, mesh, idx, x)
                lo, hi = min(lo, out.value[0]), max(hi, out.value[0])
                chi_step = max(chi_step, out.chi[0])
        d.append(f"step face values in [{lo:.2e}, {hi:.2e}], chi {chi_step:.2e}")
        assert lo >= -1e-10 and hi <= 1.0 + 1e-10
        assert chi_step < 0.05

        h = 1 / 16
        smooth = build_mesh((5, 5, 5), [(0, 5 * h)] * 3)
        fn = lambda X: np.sin(2 * X[..., 0]) + 0.5 * X[..., 1] ** 2 * X[..., 2] + X[..., 0] ** 4
        dofs = _smooth_dofs(smooth, idx, fn)
        chi_min = 1.0
        for f in range(6):
            for x in face_point_refs(f):
                _, out = _geno_cell(dofs[1], dofs[0], smooth, idx, x)
                chi_min = min(chi_min, out.chi[0])
        d.append(f"smooth chi {chi_min:.6f}")
        assert chi_min > 0.99

        q0 = np.array([1.0, 0.0, 0.0, 0.0, 2.5])
        _, phi_c, _ = reconstruct_cell(q0, np.tile(q0, (6, 1)), [0.1] * 3, [0.1] * 6)
        qx = np.array([2.0, 0.0, 0.0, 0.0, 2.5])
        nb = np.tile(qx, (6, 1))
        nb[0, 0], nb[1, 0] = 1.0, 1.5
        _, phi_x, _ = reconstruct_cell(qx, nb, [0.1] * 3, [0.1] * 6)
        d.append(f"phi constant {phi_c.phi0.min():.1f}, phi extremum {phi_x.phi0[0]:.3f}")
        assert np.all(phi_c.phi0 == 1.0)
        assert phi_x.phi0[0] < 1.0


def _smooth_dofs(mesh, idx, fn):
    """CellDofs from 6-point Gauss averages of fn for the target cell and its stencil."""
    g, w = np.polynomial.legendre.leggauss(6)
    w = w / 2
    ref = face_point_refs(1)[:, 1:]

    def cell(cidx):
        lo = np.array([mesh.node_coords[a][cidx[a]] for a in range(3)])
        hi = np.array([mesh.node_coords[a][cidx[a] + 1] for a in range(3)])
        c, hh = 0.5 * (lo + hi), hi - lo
        P = np.stack(np.meshgrid(*[c[a] + 0.5 * hh[a] * g for a in range(3)], indexing="ij"), axis=-1)
        W = w[:, None, None] * w[None, :, None] * w[None, None, :]
        q0 = np.array([np.sum(W * fn(P))])
        line = np.zeros((3, 4, 1))
        for a in range(3):
            t1, t2 = (a + 1) % 3, (a + 2) % 3
            for k, (s1, s2) in enumerate(ref):
                pt = c.copy()
                pt[t1] += s1 * hh[t1]
                pt[t2] += s2 * hh[t2]
                up, dn = pt.copy(), pt.copy()
                up[a], dn[a] = hi[a], lo[a]
                line[a, k, 0] = (fn(up) - fn(dn)) / hh[a]
        return CellDofs.from_lines(q0, line)

    return cell(idx), [cell(tuple(np.array(idx) + o)) for o in STENCIL_OFFSETS]


def test_c09_tgv_physics(tmp_path):
    with criterion(9, "subsonic TGV 64^3 linear CGKS-5th to t = 12 within the 2 h budget") as d:
        cfg = load_config(CONFIGS / "tgv_subsonic_cgks5.ini")
        rep = run_case(cfg, tmp_path)
        d.append(f"status {rep.status}, t reached {rep.t_final:.3f}, steps {rep.steps}")
        if rep.status == "over_budget":
            d.append(f"projected wall {rep.projected_wall_s / 3600:.1f} h")
        assert rep.status == "ok", rep.message
        from cgks.harness.io import read_timeseries

        s = read_timeseries(rep.csv_path)
        d.append(f"eps_S(0) {s['eps_S'][0]:.4e}, peak at t = {rep.t_peak_eps_S:.2f}")
        assert np.all(np.diff(s["E_k"]) <= 0)
        assert abs(s["eps_S"][0] / 4.6875e-4 - 1.0) <= 0.03
        assert 8.0 <= rep.t_peak_eps_S <= 10.0
        assert rep.wall_s < 7200


def test_c10_cost_to_resolution(tmp_path):
    with criterion(10, "cgks5@24^3 vs gks2@72^3 subsonic TGV to t = 10, eps_S peak parity") as d:
        rep = efficiency_compare(load_config(CONFIGS / "tgv_subsonic_cgks5_24.ini"),
                                 load_config(CONFIGS / "tgv_subsonic_gks2_72.ini"), tmp_path)
        d.append(f"peaks {rep.a.peak_eps_S:.4e} / {rep.b.peak_eps_S:.4e}, rel diff {rep.peak_eps_S_rel_diff:.3f}")
        d.append(f"wall ratio {rep.wall_ratio:.2f}")
        assert rep.a.completed and rep.b.completed
        assert "wall_ratio" in Path(rep.overlay_csv).read_text().splitlines()[0]
        assert rep.peak_eps_S_rel_diff < 0.10


def _run_cli(cfg, out, workers):
    env = dict(os.environ, NUMBA_NUM_THREADS="4")
    cmd = [sys.executable, "-m", "cgks", "run", str(cfg), "--workers", str(workers), "--output-dir", str(out)]
    subprocess.run(cmd, env=env, check=True, capture_output=True)


def test_c11_determinism(tmp_path):
    with criterion(11, "byte-identical diagnostics across runs and worker counts") as d:
        for scheme in ("gks2", "cgks5"):
            cfg = tmp_path / f"det_{scheme}.ini"
            cfg.write_text(f"[scheme]\nid = {scheme}\n[mesh]\ndims = 12,12,12\n[case]\nid = tgv_subsonic\n"
                           "[time]\nt_end = 0.5\nmax_steps = 20\ncfl = 0.3\n[output]\nevery = 2\n", encoding="utf-8")
            outs = []
            for i, workers in enumerate((1, 1, 4)):
                out = tmp_path / f"{scheme}_{i}"
                _run_cli(cfg, out, workers)
                outs.append(strip_timing(out / f"tgv_subsonic_{scheme}.csv"))
            d.append(f"{scheme} identical {outs[0] == outs[1] == outs[2]}")
            assert outs[0] == outs[1] == outs[2]
