"""Run configuration: sectioned key-value text files with dotted overrides.

Example::

    [scheme]
    id = cgks5

    [mesh]
    dims = 16, 16, 16

    [case]
    id = tgv_subsonic
    Ma = 0.1
    Re = 1600

    [time]
    t_end = 1.0
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cgks.cases import CASE_IDS, CaseConfig
from cgks.errors import ConfigError
from cgks.evolve import SchemeParams
from cgks.mesh import StructuredMesh, build_mesh

SECTIONS = ("scheme", "mesh", "case", "time", "recon", "limiter", "output")

DEFAULTS = {
    "scheme": {"id": "cgks5", "tau_eps": "0.05", "tau_jump": "10.0"},
    "mesh": {"dims": "16,16,16", "periodic": "true,true,true", "stretch": "0.0"},
    "case": {"id": "tgv_subsonic", "gamma": "1.4", "L": "1.0"},
    "time": {"t_end": "1.0", "max_steps": "1000000000", "cfl": ""},
    "recon": {"h1": "1.0", "h2": "1.0", "h3": "1.0", "chi_c": "0.01", "force_linear": "false"},
    "limiter": {"k_venkat": "0.3"},
    "output": {"every": "1", "dir": "out", "fields": "false", "name": "", "wall_limit": "0"},
}

CASE_DEFAULTS = {
    "tgv_subsonic": {"Ma": 0.1, "Re": 1600.0, "Pr": 0.7, "tau_model": "viscous", "init_quad": 2},
    "tgv_supersonic": {"Ma": 2.0, "Re": 1600.0, "Pr": 0.7, "tau_model": "viscous", "init_quad": 2},
    "density_wave": {"Ma": 1.0, "Re": 1.0, "Pr": 1.0, "tau_model": "viscous", "init_quad": 4},
    "sod": {"Ma": 1.0, "Re": 1.0, "Pr": 1.0, "tau_model": "inviscid", "init_quad": 2},
    "jet_profile_dump": {"Ma": 0.9, "Re": 4e5, "Pr": 0.7, "tau_model": "viscous", "init_quad": 2},
}


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.replace(";", ",").split(",") if v.strip()]


@dataclass
class RunConfig:
    raw: dict
    scheme: SchemeParams
    case: CaseConfig
    mesh_spec: dict
    t_end: float
    max_steps: int
    out_every: int
    out_dir: Path
    write_fields: bool
    name: str
    wall_limit: float
    source: str = ""
    extras: dict = field(default_factory=dict)

    def build_mesh(self) -> StructuredMesh:
        return mesh_from_spec(self.case.case_id, self.mesh_spec, self.case.L)

    def with_dims(self, n: int) -> "RunConfig":
        raw = {s: dict(v) for s, v in self.raw.items()}
        raw["mesh"]["dims"] = f"{n},{n},{n}" if self.case.case_id != "sod" else f"{n},1,1"
        raw["output"]["name"] = f"{self.name}_{n}"
        return from_dict(raw, self.source)


def _dims(spec: dict) -> list[int]:
    dims = [int(v) for v in spec["dims"].replace(";", ",").split(",")]
    if len(dims) != 3:
        raise ConfigError("mesh.dims needs three integers")
    if any(d < 1 for d in dims):
        raise ConfigError("mesh.dims must be positive")
    return dims


def mesh_from_spec(case_id: str, spec: dict, L: float = 1.0) -> StructuredMesh:
    from cgks.cases import sod_mesh

    dims = _dims(spec)
    if case_id == "sod":
        return sod_mesh(dims[0])
    if case_id in ("tgv_subsonic", "tgv_supersonic"):
        lo_d, hi_d = [-math.pi * L] * 3, [math.pi * L] * 3
    else:
        lo_d, hi_d = [0.0] * 3, [2.0 * math.pi] * 3
    lo = _floats(spec["lo"]) if "lo" in spec else lo_d
    hi = _floats(spec["hi"]) if "hi" in spec else hi_d
    periodic = [_bool(v) for v in spec["periodic"].split(",")]
    amp = float(spec.get("stretch", "0"))
    if not 0.0 <= amp < 1.0:
        raise ConfigError("mesh.stretch must lie in [0, 1)")
    axes = []
    for a, ax in enumerate("xyz"):
        key = f"{ax}_nodes"
        if key in spec:
            axes.append(np.array(_floats(spec[key])))
        elif amp > 0:
            xi = np.linspace(0.0, 1.0, dims[a] + 1)
            axes.append(lo[a] + (hi[a] - lo[a]) * (xi - amp * np.sin(2 * np.pi * xi) / (2 * np.pi)))
        else:
            axes.append((lo[a], hi[a]))
    from cgks.errors import MeshError

    try:
        return build_mesh(dims, axes, periodic)
    except MeshError as exc:
        raise ConfigError(str(exc)) from exc


def parse_overrides(items) -> dict:
    out: dict = {}
    for item in items or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        k, v = item.split("=", 1)
        sec, key = k.strip().split(".", 1)
        out.setdefault(sec, {})[key] = v.strip()
    return out


def load_config(path, overrides=None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    raw = {s: dict(cp[s]) for s in cp.sections()}
    for sec, kv in (overrides or {}).items():
        raw.setdefault(sec, {}).update(kv)
    return from_dict(raw, str(path))


def from_dict(raw: dict, source: str = "") -> RunConfig:
    unknown = set(raw) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    merged = {s: dict(DEFAULTS[s]) for s in SECTIONS}
    for sec, kv in raw.items():
        merged[sec].update(kv)
    try:
        return _build(merged, source)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc


def _build(cfg: dict, source: str) -> RunConfig:
    scheme_id = cfg["scheme"]["id"].strip()
    if scheme_id not in ("gks2", "cgks5"):
        raise ConfigError(f"scheme.id must be gks2 or cgks5, got {scheme_id!r}")
    c = cfg["case"]
    case_id = c["id"].strip()
    if case_id not in CASE_IDS:
        raise ConfigError(f"unknown case.id {case_id!r}")
    cd = CASE_DEFAULTS[case_id]
    case = CaseConfig(
        case_id=case_id,
        Ma=float(c.get("Ma", cd["Ma"])),
        Re=float(c.get("Re", cd["Re"])),
        gamma=float(c["gamma"]),
        Pr=float(c.get("Pr", cd["Pr"])),
        L=float(c["L"]),
        init_quad=int(c.get("init_quad", cd["init_quad"])),
    )
    tau_model = c.get("tau_model", cd["tau_model"]).strip()
    r = cfg["recon"]
    t = cfg["time"]
    scheme = SchemeParams(
        scheme=scheme_id,
        gamma=case.gamma,
        pr=case.Pr,
        tau_mode=tau_model,
        cfl=float(t["cfl"]) if t["cfl"].strip() else None,
        k_venkat=float(cfg["limiter"]["k_venkat"]),
        force_linear=_bool(r["force_linear"]),
        chi_c=float(r["chi_c"]),
        recon_weights=(float(r["h1"]), float(r["h2"]), float(r["h3"])),
        eps_tau=float(cfg["scheme"]["tau_eps"]),
        c_tau=float(cfg["scheme"]["tau_jump"]),
    )
    if not scheme.cfl > 0:
        raise ConfigError("time.cfl must be positive")
    if not (scheme.eps_tau >= 0 and scheme.c_tau >= 0):
        raise ConfigError("scheme.tau_eps and scheme.tau_jump must be non-negative")
    _dims(cfg["mesh"])
    o = cfg["output"]
    t_end = float(t["t_end"])
    max_steps = int(float(t["max_steps"]))
    every = int(o["every"])
    if t_end < 0 or max_steps < 0 or every < 1:
        raise ConfigError("time.t_end, time.max_steps must be non-negative and output.every >= 1")
    name = o["name"].strip() or f"{case_id}_{scheme_id}"
    return RunConfig(
        raw=cfg, scheme=scheme, case=case, mesh_spec=cfg["mesh"], t_end=t_end, max_steps=max_steps,
        out_every=every, out_dir=Path(o["dir"]), write_fields=_bool(o["fields"]), name=name,
        wall_limit=float(o["wall_limit"]), source=source,
    )
