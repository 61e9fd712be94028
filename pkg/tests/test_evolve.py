from __future__ import annotations

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from cgks.errors import PositivityError
from cgks.evolve import (
    SchemeParams,
    Solver,
    assemble_residual,
    compute_dt,
    step_s1o2,
    step_s2o4,
    update_cell_dofs,
)
from cgks.kinetic import Primitive, prim_to_cons
from cgks.mesh import build_mesh, face_gauss_ref, transverse_axes


def _uniform_field(mesh, rho=1.0, vel=(0.0, 0.0, 0.0), p=1.0 / 1.4):
    q = prim_to_cons(Primitive.from_pressure(rho, vel, p))
    return np.tile(q, (mesh.ncells, 1))


def _stretched(rng, dims=(6, 5, 4)):
    return build_mesh(dims, [np.cumsum(np.r_[0.0, rng.uniform(0.6, 1.4, n)]) for n in dims])


def test_dt_viscous_bound():
    mesh = build_mesh((2, 2, 2), [(0, 0.2)] * 3)
    Q = _uniform_field(mesh, p=1e-8)
    rep = compute_dt(Q, mesh, 0.3, nu=0.01)
    assert rep.dt == pytest.approx(0.1, rel=1e-14)
    assert rep.cfl_binding == "viscous"


def test_dt_convective_bound():
    mesh = build_mesh((2, 2, 2), [(0, 1.0)] * 3)
    rep = compute_dt(_uniform_field(mesh), mesh, 0.5)
    assert rep.dt == pytest.approx(0.25, rel=1e-14)
    assert rep.cfl_binding == "convective"
    assert compute_dt(_uniform_field(mesh), mesh, 0.5, nu=0.0).dt == rep.dt


def test_dt_rejects_negative_pressure():
    mesh = build_mesh((2, 2, 2), [(0, 1.0)] * 3)
    Q = _uniform_field(mesh)
    Q[3, 4] = 0.0
    with pytest.raises(PositivityError):
        compute_dt(Q, mesh, 0.5)


def test_residual_telescopes_to_zero():
    rng = np.random.default_rng(1)
    mesh = _stretched(rng)
    F = rng.normal(size=(mesh.ncells, 3, 5))
    Ft = rng.normal(size=(mesh.ncells, 3, 5))
    res = assemble_residual(F, Ft, mesh)
    vol = mesh.volumes.reshape(-1)
    for arr in (res.L, res.Lt):
        brute = sum(vol[c] * arr[c] for c in range(mesh.ncells))
        np.testing.assert_allclose(brute, 0.0, atol=1e-12)


def test_single_face_flux_contribution():
    mesh = build_mesh((3, 1, 1), [(0, 3.0), (0, 1.0), (0, 1.0)])
    F = np.zeros((3, 3, 5))
    F[1, 0, 0] = 1.0  # plus-x face of cell 1
    res = assemble_residual(F, np.zeros_like(F), mesh)
    np.testing.assert_array_equal(res.L[:, 0], [0.0, -1.0, 1.0])


def test_s2o4_amplification_is_fourth_order_taylor():
    z = Polynomial([0.0, 1.0])
    out = step_s2o4(Polynomial([1.0]), lambda q: (q, q), z)
    np.testing.assert_allclose(out.coef, [1, 1, 1 / 2, 1 / 6, 1 / 24], rtol=1e-15)


def test_s1o2_is_second_order_taylor():
    q = Polynomial([1.0])
    out = step_s1o2(q, q, q, Polynomial([0.0, 1.0]))
    np.testing.assert_allclose(out.coef, [1, 1, 1 / 2], rtol=1e-15)
    lam = -0.7
    errs = [abs(step_s1o2(1.0, lam, lam ** 2, dt) - np.exp(lam * dt)) for dt in (0.1, 0.05)]
    assert errs[0] / errs[1] == pytest.approx(8.0, rel=0.05)


def test_steps_are_identity_without_residual():
    Q = np.random.default_rng(0).uniform(1, 2, (7, 5))
    np.testing.assert_array_equal(step_s1o2(Q, 0 * Q, 0 * Q, 0.3), Q)
    np.testing.assert_array_equal(step_s1o2(Q, Q, Q, 0.0), Q)
    np.testing.assert_array_equal(step_s2o4(Q, lambda q: (0 * q, 0 * q), 0.3), Q)


def test_s2o4_reports_stage_failure():
    def check(q, stage):
        if stage == "stage1":
            raise PositivityError("bad", stage=stage)

    with pytest.raises(PositivityError):
        step_s2o4(np.ones(3), lambda q: (q, q), 0.1, check)


def _face_values(mesh, fn):
    """Sp, Sm (nc, 3, 4, ncomp) sampled at face Gauss points of each cell."""
    ref = face_gauss_ref("fifth")[0]
    C = np.stack(np.meshgrid(*mesh.centers, indexing="ij"), axis=-1).reshape(-1, 3)
    H = mesh.scales.reshape(-1, 3)
    Sp = np.empty((mesh.ncells, 3, 4, 1))
    Sm = np.empty_like(Sp)
    for a in range(3):
        t1, t2 = transverse_axes(a)
        for k, (s1, s2) in enumerate(ref):
            P = C.copy()
            P[:, t1] += s1 * H[:, t1]
            P[:, t2] += s2 * H[:, t2]
            hi, lo = P.copy(), P.copy()
            hi[:, a] += 0.5 * H[:, a]
            lo[:, a] -= 0.5 * H[:, a]
            Sp[:, a, k, 0] = fn(hi)
            Sm[:, a, k, 0] = fn(lo)
    return Sp, Sm


def test_cell_dofs_from_linear_interface_values():
    mesh = _stretched(np.random.default_rng(3), (3, 2, 2))
    grad, lines = update_cell_dofs(*_face_values(mesh, lambda X: X[:, 0]), mesh)
    np.testing.assert_allclose(grad[..., 0], np.tile([1.0, 0.0, 0.0], (mesh.ncells, 1)), atol=1e-13)
    np.testing.assert_allclose(lines[:, 0], 1.0, rtol=1e-13)
    grad, lines = update_cell_dofs(*_face_values(mesh, lambda X: 0 * X[:, 0] + 2.0), mesh)
    np.testing.assert_array_equal(grad, 0.0)
    np.testing.assert_array_equal(lines, 0.0)


def test_cell_dofs_from_quadratic_interface_values():
    mesh = _stretched(np.random.default_rng(4), (3, 2, 2))
    grad, _ = update_cell_dofs(*_face_values(mesh, lambda X: X[:, 0] ** 2 + X[:, 0] * X[:, 1]), mesh)
    cx = np.stack(np.meshgrid(*mesh.centers, indexing="ij"), axis=-1).reshape(-1, 3)
    np.testing.assert_allclose(grad[:, 0, 0], 2 * cx[:, 0] + cx[:, 1], rtol=1e-12)
    np.testing.assert_allclose(grad[:, 1, 0], cx[:, 0], rtol=1e-12)
    np.testing.assert_allclose(grad[:, 2, 0], 0.0, atol=1e-12)


@pytest.mark.parametrize("scheme", ["gks2", "cgks5"])
def test_free_stream_preserved_on_stretched_mesh(scheme):
    mesh = _stretched(np.random.default_rng(5), (5, 4, 4))
    Q0 = _uniform_field(mesh, 1.2, (0.3, -0.2, 0.5), 0.9)
    s = Solver(mesh, SchemeParams(scheme=scheme, tau_mode="viscous", mu0=1e-3), Q0)
    dt = s.stable_dt().dt
    steps = 100 if scheme == "gks2" else 30
    for _ in range(steps):
        s.step(dt)
    np.testing.assert_allclose(s.Q, Q0, rtol=0, atol=1e-12)
    if scheme == "cgks5":
        np.testing.assert_allclose(s.Lines, 0.0, atol=1e-12)
