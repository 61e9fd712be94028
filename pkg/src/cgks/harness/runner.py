"""Case runs, convergence studies and cost comparisons."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from cgks import cases
from cgks.errors import ConfigError, NumericalError, PositivityError
from cgks.evolve import Solver
from cgks.mesh import build_mesh
from cgks.harness.config import RunConfig
from cgks.harness.io import TimeSeriesWriter, read_timeseries, write_field

# Published cost ratios (second-order over fifth-order wall time at matched resolution).
REFERENCE_RATIOS = {
    "tgv_subsonic": {"ratio": 8.8, "meshes": "96^3 vs 296^3"},
    "tgv_supersonic": {"ratio": 7.0, "meshes": "116^3 vs 384^3"},
}
SELF_RATIO_FLAG = 1.2


def _json_safe(obj):
    """Replace non-finite floats with None so reports stay strict JSON."""
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


@dataclass
class RunReport:
    name: str
    scheme: str
    case: str
    dims: tuple
    ncells: int
    steps: int = 0
    t_final: float = 0.0
    wall_s: float = 0.0
    ns_per_cell_step: float = float("nan")
    status: str = "ok"
    message: str = ""
    cell: tuple | None = None
    stage: str | None = None
    csv_path: str | None = None
    field_paths: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    peak_eps_S: float = float("nan")
    t_peak_eps_S: float = float("nan")
    conservation_drift: list = field(default_factory=list)
    projected_wall_s: float = float("nan")

    @property
    def completed(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dims"] = list(self.dims)
        return _json_safe(d)

    def write_json(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, default=float) + "\n", encoding="utf-8")
        return path


@dataclass
class ConvergenceReport:
    scheme: str
    levels: list
    h: list
    l1: list
    linf: list
    orders_l1: list
    orders_linf: list
    degenerate: bool = False
    runs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["runs"] = [r.to_dict() if hasattr(r, "to_dict") else r for r in self.runs]
        return _json_safe(d)


@dataclass
class ComparisonReport:
    a: RunReport
    b: RunReport
    wall_ratio: float
    cost_ratio: float
    peak_eps_S_rel_diff: float
    overlay_csv: str
    reference: dict
    self_comparison: bool = False
    flagged: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["a"] = self.a.to_dict()
        d["b"] = self.b.to_dict()
        return _json_safe(d)


# ---------------------------------------------------------------------------


def setup_case(cfg: RunConfig):
    """Mesh, solver and normalization constants for a configured case."""
    mesh = cfg.build_mesh()
    c = cfg.case
    p = cfg.scheme
    if c.case_id == "tgv_subsonic":
        init = cases.init_tgv_subsonic(mesh, c.Ma, c.Re, c.gamma, c.init_quad, c.L)
    elif c.case_id == "tgv_supersonic":
        init = cases.init_tgv_supersonic(mesh, c.Ma, c.Re, c.gamma, c.init_quad, c.L)
    elif c.case_id in ("density_wave", "sod"):
        init = cases.init_canonical(c.case_id, mesh, c.gamma, c.init_quad)
    else:
        raise ConfigError(f"case {c.case_id!r} has no time-dependent run")
    if c.case_id.startswith("tgv"):
        p.mu0, p.tref, p.mu_law = init.mu0, init.tref, "sutherland"
    else:
        p.mu0, p.mu_law = 0.0, "constant"
    solver = Solver(mesh, p, init.Q, init.lines)
    return mesh, solver, init


def _case_errors(cfg: RunConfig, solver: Solver, t: float) -> dict:
    mesh = solver.mesh
    rho = solver.Q[:, 0].reshape(mesh.dims)
    if cfg.case.case_id == "density_wave":
        ex = cases.density_wave_exact_average(mesh, t)
        vol = mesh.volumes
        err = np.abs(rho - ex)
        return {"L1": float(np.sum(vol * err) / np.sum(vol)), "Linf": float(np.max(err))}
    if cfg.case.case_id == "sod":
        n = mesh.dims[0] // 2
        ex = cases.sod_exact_average(n, t, cfg.case.gamma)
        num = rho[:n, 0, 0]
        err = np.abs(num - ex)
        return {"L1": float(np.mean(err)), "Linf": float(np.max(err))}
    return {}


_WARM: set = set()


def _warm_up(params) -> None:
    """Compile the kernels for this scheme once per process so timings exclude JIT work."""
    if params.scheme in _WARM:
        return
    mesh = build_mesh((4, 4, 4), [(0.0, 1.0)] * 3)
    Q = np.tile([1.0, 0.1, 0.0, 0.0, 2.5], (mesh.ncells, 1))
    s = Solver(mesh, replace(params), Q)
    s.step(1e-3)
    s.point_integrands()
    _WARM.add(params.scheme)


def run_case(cfg: RunConfig, out_dir=None) -> RunReport:
    """Advance one configured case to ``t_end`` (or ``max_steps``), writing outputs."""
    out = Path(out_dir) if out_dir is not None else cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    if cfg.case.case_id == "jet_profile_dump":
        return _jet_dump(cfg, out)
    mesh, solver, init = setup_case(cfg)
    _warm_up(cfg.scheme)
    rep = RunReport(cfg.name, cfg.scheme.scheme, cfg.case.case_id, mesh.dims, mesh.ncells)
    csv_path = out / f"{cfg.name}.csv"
    rep.csv_path = str(csv_path)
    totals0 = solver.totals()
    wall = 0.0
    last_dt = 0.0

    def record(writer):
        rec = cases.diagnostics(solver.t, solver.Q, solver.point_integrands(), mesh, init.rho0, init.U0)
        writer.write(rec, last_dt, wall)
        if not rep.peak_eps_S >= rec.eps_S:
            rep.peak_eps_S, rep.t_peak_eps_S = rec.eps_S, rec.t

    with TimeSeriesWriter(csv_path) as writer:
        record(writer)
        try:
            while solver.t < cfg.t_end * (1 - 1e-14) and solver.steps < cfg.max_steps:
                dt = solver.stable_dt().dt
                if not math.isfinite(dt) or dt <= 0:
                    raise NumericalError(f"invalid time step {dt!r}")
                dt = min(dt, cfg.t_end - solver.t)
                t0 = time.perf_counter()
                solver.step(dt)
                wall += time.perf_counter() - t0
                last_dt = dt
                if not np.all(np.isfinite(solver.Q)):
                    raise NumericalError("non-finite state after step")
                done = solver.t >= cfg.t_end * (1 - 1e-14) or solver.steps >= cfg.max_steps
                if solver.steps % cfg.out_every == 0 or done:
                    record(writer)
                if cfg.wall_limit > 0 and solver.t < cfg.t_end:
                    projected = wall * cfg.t_end / solver.t
                    if wall > cfg.wall_limit or (solver.steps >= 5 and projected > cfg.wall_limit):
                        rep.status = "over_budget"
                        rep.projected_wall_s = projected
                        rep.message = (f"projected {projected:.0f} s to reach t={cfg.t_end} "
                                       f"exceeds the {cfg.wall_limit:.0f} s budget")
                        record(writer)
                        break
        except PositivityError as exc:
            rep.status = "positivity"
            rep.message = str(exc)
            rep.cell = exc.cell
            rep.stage = exc.stage
        except NumericalError as exc:
            rep.status = "numerical"
            rep.message = str(exc)
    rep.steps = solver.steps
    rep.t_final = solver.t
    rep.wall_s = wall
    if solver.steps > 0 and wall > 0:
        rep.ns_per_cell_step = wall * 1e9 / (solver.steps * mesh.ncells)
    tot = solver.totals()
    scale = np.maximum(np.abs(totals0), np.abs(totals0[0]))
    rep.conservation_drift = [float(v) for v in np.abs(tot - totals0) / scale]
    if rep.status == "ok":
        rep.errors = _case_errors(cfg, solver, solver.t)
    if cfg.write_fields:
        rep.field_paths.append(str(write_field(solver.Q, mesh, out / f"{cfg.name}.vtk", cfg.case.gamma)))
    rep.write_json(out / f"{cfg.name}.json")
    return rep


def _jet_dump(cfg: RunConfig, out: Path) -> RunReport:
    c = cfg.case
    r = np.linspace(0.0, 1.0, 201)
    u, T = cases.jet_inflow_profile(r, Ma=c.Ma, gamma=c.gamma, Pr=c.Pr)
    path = out / f"{cfg.name}_profile.csv"
    with open(path, "w", encoding="ascii") as fh:
        fh.write("r,u,T\n")
        for row in zip(r, u, T):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    rep = RunReport(cfg.name, cfg.scheme.scheme, c.case_id, (0, 0, 0), 0, csv_path=str(path))
    rep.write_json(out / f"{cfg.name}.json")
    return rep


# ---------------------------------------------------------------------------


def fitted_orders(h, err) -> tuple[list, bool]:
    """log(e_i/e_{i+1}) / log(h_i/h_{i+1}); NaN with a flag where the fit is undefined."""
    orders = []
    degenerate = False
    for i in range(len(h) - 1):
        e0, e1 = err[i], err[i + 1]
        if not (e0 > 0 and e1 > 0 and math.isfinite(e0) and math.isfinite(e1)) or h[i] == h[i + 1]:
            orders.append(float("nan"))
            degenerate = True
        else:
            orders.append(math.log(e0 / e1) / math.log(h[i] / h[i + 1]))
    return orders, degenerate


def convergence_study(cfg: RunConfig, levels, out_dir=None) -> ConvergenceReport:
    levels = [int(n) for n in levels]
    if len(levels) < 3:
        raise ConfigError("a convergence study needs at least three levels")
    if cfg.case.case_id not in ("density_wave", "sod"):
        raise ConfigError("convergence studies need a case with an exact solution")
    runs, h, l1, linf = [], [], [], []
    for n in levels:
        rep = run_case(cfg.with_dims(n), out_dir)
        if not rep.completed:
            raise NumericalError(f"level {n} did not complete: {rep.message}")
        runs.append(rep)
        mesh = cfg.with_dims(n).build_mesh()
        h.append(float(np.max(mesh.widths[0])))
        l1.append(rep.errors["L1"])
        linf.append(rep.errors["Linf"])
    o1, d1 = fitted_orders(h, l1)
    oi, di = fitted_orders(h, linf)
    return ConvergenceReport(cfg.scheme.scheme, levels, h, l1, linf, o1, oi, d1 or di, runs)


def efficiency_compare(cfg_a: RunConfig, cfg_b: RunConfig, out_dir=None) -> ComparisonReport:
    """Run two configs and report cost ratios plus an E_k / eps_S overlay.

    Ratios are b over a, so a fifth-order run as ``a`` against a second-order
    run as ``b`` is comparable with the published ratios.
    """
    out = Path(out_dir) if out_dir is not None else cfg_a.out_dir
    if cfg_a.name == cfg_b.name:
        cfg_b = _renamed(cfg_b, cfg_b.name + "_b")
    ra = run_case(cfg_a, out)
    rb = run_case(cfg_b, out)
    wall_ratio = rb.wall_s / ra.wall_s if ra.wall_s > 0 else float("nan")
    cost_ratio = rb.ns_per_cell_step / ra.ns_per_cell_step
    sa, sb = read_timeseries(ra.csv_path), read_timeseries(rb.csv_path)
    overlay = out / f"compare_{cfg_a.name}_{cfg_b.name}.csv"
    _write_overlay(overlay, sa, sb, cfg_a.name, cfg_b.name, ra.wall_s, rb.wall_s, wall_ratio)
    peak_a, peak_b = ra.peak_eps_S, rb.peak_eps_S
    rel = abs(peak_a - peak_b) / max(abs(peak_a), abs(peak_b)) if max(peak_a, peak_b) > 0 else 0.0
    same = _same_config(cfg_a, cfg_b)
    rep = ComparisonReport(
        ra, rb, wall_ratio, cost_ratio, rel, str(overlay), REFERENCE_RATIOS.get(cfg_a.case.case_id, {}),
        self_comparison=same, flagged=same and max(wall_ratio, 1 / wall_ratio) > SELF_RATIO_FLAG,
    )
    (out / f"compare_{cfg_a.name}_{cfg_b.name}.json").write_text(
        json.dumps(rep.to_dict(), indent=2, default=float) + "\n", encoding="utf-8")
    return rep


def _renamed(cfg: RunConfig, name: str) -> RunConfig:
    from cgks.harness.config import from_dict

    raw = {s: dict(v) for s, v in cfg.raw.items()}
    raw["output"]["name"] = name
    return from_dict(raw, cfg.source)


def _same_config(a: RunConfig, b: RunConfig) -> bool:
    strip = lambda raw: {s: {k: v for k, v in kv.items() if k != "name"} for s, kv in raw.items()}
    return strip(a.raw) == strip(b.raw)


def _write_overlay(path, sa, sb, name_a, name_b, wall_a, wall_b, ratio):
    """Both runs' series on the union of their output times (linear interpolation)."""
    t = np.union1d(sa["t"], sb["t"])
    cols = {"t": t}
    for tag, s in (("a", sa), ("b", sb)):
        for key in ("E_k", "eps_S"):
            cols[f"{key}_{tag}"] = np.interp(t, s["t"], s[key], right=np.nan)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# a={name_a} wall_s={wall_a!r}; b={name_b} wall_s={wall_b!r}; wall_ratio_b_over_a={ratio!r}\n")
        fh.write(",".join(cols) + "\n")
        for i in range(len(t)):
            fh.write(",".join(repr(float(cols[k][i])) for k in cols) + "\n")
