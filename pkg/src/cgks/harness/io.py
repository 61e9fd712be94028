"""Time-series CSV and legacy-ASCII VTK field output."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from cgks.kinetic import cons_to_prim_field

CSV_COLUMNS = ("t", "E_k", "eps_S", "eps_D", "eps_T", "mass", "mom_x", "mom_y", "mom_z", "energy", "dt", "wall_s")
TIMING_COLUMNS = ("wall_s",)


def fmt(x: float) -> str:
    """Locale-independent shortest round-trip decimal."""
    return repr(float(x))


class TimeSeriesWriter:
    """Appends one complete row per record and flushes immediately."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="", encoding="ascii")
        self._fh.write(",".join(CSV_COLUMNS) + "\n")
        self._fh.flush()

    def write(self, rec, dt: float, wall_s: float) -> None:
        vals = [rec.t, rec.E_k, rec.eps_S, rec.eps_D, rec.eps_T, rec.mass, rec.mom_x, rec.mom_y,
                rec.mom_z, rec.energy, dt, wall_s]
        self._fh.write(",".join(fmt(v) for v in vals) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_timeseries(records, path, dts=None, walls=None) -> Path:
    with TimeSeriesWriter(path) as w:
        for i, rec in enumerate(records):
            w.write(rec, dts[i] if dts is not None else 0.0, walls[i] if walls is not None else 0.0)
    return Path(path)


def read_timeseries(path) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]]) if len(rows) > 1 else np.zeros((0, len(header)))
    return {h: data[:, i] for i, h in enumerate(header)}


def strip_timing(path) -> bytes:
    """CSV bytes with the timing columns removed (for reproducibility checks)."""
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    drop = [i for i, h in enumerate(rows[0]) if h in TIMING_COLUMNS]
    buf = io.StringIO()
    for r in rows:
        buf.write(",".join(v for i, v in enumerate(r) if i not in drop) + "\n")
    return buf.getvalue().encode("ascii")


# ---------------------------------------------------------------------------


def _field_arrays(Q: np.ndarray, gamma: float) -> dict[str, np.ndarray]:
    prim = cons_to_prim_field(Q, gamma)
    return {
        "rho": Q[..., 0], "rhoU": Q[..., 1], "rhoV": Q[..., 2], "rhoW": Q[..., 3], "rhoE": Q[..., 4],
        "U": prim["vel"][..., 0], "V": prim["vel"][..., 1], "W": prim["vel"][..., 2], "p": prim["p"],
    }


def write_field(Q: np.ndarray, mesh, path, gamma: float = 1.4, title: str = "cgks field") -> Path:
    """Cell-centered data as STRUCTURED_POINTS (uniform) or RECTILINEAR_GRID."""
    Q = np.asarray(Q, dtype=float).reshape(mesh.dims + (5,))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    nx, ny, nz = mesh.dims
    lines = ["# vtk DataFile Version 3.0", title, "ASCII"]
    if mesh.is_uniform:
        lines.append("DATASET STRUCTURED_POINTS")
        lines.append(f"DIMENSIONS {nx + 1} {ny + 1} {nz + 1}")
        lines.append("ORIGIN " + " ".join(f"{n[0]:.17g}" for n in mesh.node_coords))
        lines.append("SPACING " + " ".join(f"{w[0]:.17g}" for w in mesh.widths))
    else:
        lines.append("DATASET RECTILINEAR_GRID")
        lines.append(f"DIMENSIONS {nx + 1} {ny + 1} {nz + 1}")
        for ax, n in zip("XYZ", mesh.node_coords):
            lines.append(f"{ax}_COORDINATES {len(n)} double")
            lines.append(" ".join(f"{v:.17g}" for v in n))
    lines.append(f"CELL_DATA {mesh.ncells}")
    for name, arr in _field_arrays(Q, gamma).items():
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        # VTK orders points with x fastest.
        flat = np.transpose(arr, (2, 1, 0)).ravel()
        for i in range(0, len(flat), 6):
            lines.append(" ".join(f"{v:.17g}" for v in flat[i:i + 6]))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def read_field(path) -> tuple[tuple[int, int, int], dict[str, np.ndarray]]:
    """Parse a file written by :func:`write_field`; arrays come back as (nx, ny, nz)."""
    tokens = Path(path).read_text(encoding="ascii").split("\n")
    dims = None
    arrays: dict[str, np.ndarray] = {}
    i = 0
    while i < len(tokens):
        line = tokens[i].strip()
        if line.startswith("DIMENSIONS"):
            dims = tuple(int(v) - 1 for v in line.split()[1:4])
        elif line.startswith("CELL_DATA"):
            ncell = int(line.split()[1])
        elif line.startswith("SCALARS"):
            name = line.split()[1]
            i += 2
            vals: list[float] = []
            while len(vals) < ncell:
                vals.extend(float(v) for v in tokens[i].split())
                i += 1
            arrays[name] = np.array(vals).reshape(dims[2], dims[1], dims[0]).transpose(2, 1, 0)
            continue
        i += 1
    return dims, arrays
