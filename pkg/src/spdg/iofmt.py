"""File formats: diagnostics CSV, flat key=value configs, legacy-VTK
structured-points output, and a raw binary DoF dump.

All text output is locale-independent (repr-style floats, '.' decimal
point); the binary dump is little-endian with a fixed 16-byte header so
files are portable across platforms.
"""

import csv
import io
import struct

import numpy as np

from .basis import cached_basis, lagrange_values
from .grid import StaggeredGrid, PRIMAL, DUAL
from .fieldops import DGField

__all__ = [
    "DIAGNOSTIC_COLUMNS", "write_diagnostics", "read_diagnostics",
    "ConfigError", "parse_config", "load_config",
    "write_vtk", "write_raw", "read_raw", "RAW_MAGIC",
]

DIAGNOSTIC_COLUMNS = (
    "step", "time", "dt",
    "div_omega_linf", "div_u_linf", "div_psi_linf",
    "gmres_visc_iters", "gmres_stream_iters",
)

_INT_COLUMNS = {"step", "gmres_visc_iters", "gmres_stream_iters"}


def write_diagnostics(path, rows):
    """Write step diagnostics to CSV.  `rows` holds objects or dicts with
    the documented column names."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DIAGNOSTIC_COLUMNS)
        for row in rows:
            get = row.get if isinstance(row, dict) else lambda k, r=row: getattr(r, k)
            out = []
            for col in DIAGNOSTIC_COLUMNS:
                v = get(col)
                out.append(int(v) if col in _INT_COLUMNS else repr(float(v)))
            w.writerow(out)


def read_diagnostics(path):
    """Inverse of write_diagnostics; returns a list of dicts with proper
    int/float types."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = tuple(next(r))
        if header != DIAGNOSTIC_COLUMNS:
            raise ValueError(f"unexpected diagnostics header: {header}")
        rows = []
        for rec in r:
            if not rec:
                continue
            d = {}
            for col, raw in zip(DIAGNOSTIC_COLUMNS, rec):
                d[col] = int(raw) if col in _INT_COLUMNS else float(raw)
            rows.append(d)
        return rows


class ConfigError(ValueError):
    """Malformed config file or unknown/# missing keys."""


def parse_config(text, schema):
    """Parse flat `key = value` lines.

    `schema` maps key -> converter; converters may raise ValueError.
    Blank lines and '#' comments are skipped.  Unknown keys are an error —
    typos should fail loudly rather than silently fall back to defaults.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in schema:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = schema[key](val)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    return values


def load_config(path, schema):
    with open(path) as fh:
        return parse_config(fh.read(), schema)


def _cell_means(field: DGField):
    """Per-cell mean of the nodal polynomial (used for VTK cell data)."""
    basis_n = field.data.shape[3]
    n1 = round(basis_n ** (1 / 3))
    if n1 ** 3 != basis_n:
        raise ValueError("field does not hold a tensor-product nodal set")
    basis = cached_basis(n1 - 1)
    phi = lagrange_values(basis.nodes, basis.quad_nodes)
    w1 = basis.quad_weights @ phi          # integrates each 1D basis fn
    w3 = np.kron(w1, np.kron(w1, w1))      # flat, fastest axis first
    return np.tensordot(field.data, w3, axes=([3], [0]))


def write_vtk(path, field: DGField, name="field"):
    """Legacy-VTK structured points file with one CELL_DATA array holding
    per-cell means (scalar or 3-vector)."""
    g = field.grid
    means = _cell_means(field)
    o = g.origin(field.staggering)
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{name} cell means\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {g.counts[0] + 1} {g.counts[1] + 1} {g.counts[2] + 1}\n")
        fh.write(f"ORIGIN {o[0]!r} {o[1]!r} {o[2]!r}\n")
        fh.write(f"SPACING {g.spacings[0]!r} {g.spacings[1]!r} {g.spacings[2]!r}\n")
        fh.write(f"CELL_DATA {g.ncells}\n")
        if field.ncomp == 1:
            fh.write(f"SCALARS {name} double 1\n")
            fh.write("LOOKUP_TABLE default\n")
            flat = means.transpose(2, 1, 0).reshape(-1)  # x fastest
            for v in flat:
                fh.write(f"{float(v)!r}\n")
        else:
            fh.write(f"VECTORS {name} double\n")
            flat = means.transpose(2, 1, 0, 3).reshape(-1, 3)
            for v in flat:
                fh.write(f"{float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")


RAW_MAGIC = b"SPDG"
_RAW_HEADER = struct.Struct("<4sHHHHHBB")  # 16 bytes
_RAW_VERSION = 1
_STAG_CODE = {PRIMAL: 0, DUAL: 1}
_STAG_NAME = {0: PRIMAL, 1: DUAL}


def write_raw(path, field: DGField):
    """Raw little-endian dump: 16-byte header then float64 DoFs in storage
    order (component index slowest when present)."""
    g = field.grid
    n1 = field.data.shape[3]
    degree = round(n1 ** (1 / 3)) - 1
    header = _RAW_HEADER.pack(
        RAW_MAGIC, _RAW_VERSION, degree,
        g.counts[0], g.counts[1], g.counts[2],
        field.ncomp, _STAG_CODE[field.staggering],
    )
    with open(path, "wb") as fh:
        fh.write(header)
        if field.ncomp == 1:
            payload = field.data
        else:
            payload = np.moveaxis(field.data, -1, 0)
        fh.write(np.ascontiguousarray(payload, dtype="<f8").tobytes())


def read_raw(path, grid: StaggeredGrid = None):
    """Read a raw dump back; returns (field, degree).  When `grid` is given
    its cell counts must match the header, and the field is attached to it;
    otherwise a unit-box grid with the recorded counts is used."""
    with open(path, "rb") as fh:
        head = fh.read(_RAW_HEADER.size)
        if len(head) != _RAW_HEADER.size:
            raise ValueError("truncated raw dump header")
        magic, version, degree, nx, ny, nz, ncomp, stag = _RAW_HEADER.unpack(head)
        if magic != RAW_MAGIC:
            raise ValueError("not a raw DoF dump (bad magic)")
        if version != _RAW_VERSION:
            raise ValueError(f"unsupported raw dump version {version}")
        if stag not in _STAG_NAME:
            raise ValueError(f"unknown staggering code {stag}")
        counts = (nx, ny, nz)
        if grid is None:
            grid = StaggeredGrid.cube(0.0, 1.0, nx) if nx == ny == nz else \
                StaggeredGrid(bounds=(0.0, 1.0, 0.0, 1.0, 0.0, 1.0), counts=counts)
        elif grid.counts != counts:
            raise ValueError(f"grid counts {grid.counts} do not match file {counts}")
        ndof = (degree + 1) ** 3
        n_values = nx * ny * nz * ndof * ncomp
        data = np.frombuffer(fh.read(n_values * 8), dtype="<f8")
        if data.size != n_values:
            raise ValueError("truncated raw dump payload")
        if ncomp == 1:
            arr = data.reshape(counts + (ndof,))
        else:
            arr = np.moveaxis(data.reshape((ncomp,) + counts + (ndof,)), 0, -1)
        return DGField(grid, _STAG_NAME[stag], arr.copy()), degree
