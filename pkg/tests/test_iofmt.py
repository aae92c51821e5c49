import numpy as np
import pytest

from spdg.basis import cached_basis
from spdg.cases import sample_nodal
from spdg.fieldops import DGField
from spdg.grid import DUAL, PRIMAL, StaggeredGrid
from spdg.iofmt import (
    DIAGNOSTIC_COLUMNS,
    ConfigError,
    load_config,
    parse_config,
    read_diagnostics,
    read_raw,
    write_diagnostics,
    write_raw,
    write_vtk,
    RAW_MAGIC,
)


def test_diagnostic_columns_are_the_documented_eight():
    assert DIAGNOSTIC_COLUMNS == (
        "step", "time", "dt",
        "div_omega_linf", "div_u_linf", "div_psi_linf",
        "gmres_visc_iters", "gmres_stream_iters",
    )


def test_diagnostics_round_trip(tmp_path):
    rows = [
        dict(step=1, time=0.1, dt=0.1, div_omega_linf=1e-13, div_u_linf=2e-13,
             div_psi_linf=3e-14, gmres_visc_iters=4, gmres_stream_iters=7),
        dict(step=2, time=0.2, dt=0.1, div_omega_linf=1.5e-13, div_u_linf=0.0,
             div_psi_linf=5e-14, gmres_visc_iters=0, gmres_stream_iters=12),
    ]
    path = tmp_path / "diag.csv"
    write_diagnostics(path, rows)
    header = path.read_text().splitlines()[0]
    assert header == ",".join(DIAGNOSTIC_COLUMNS)
    back = read_diagnostics(path)
    assert back == rows
    assert isinstance(back[0]["step"], int)
    assert isinstance(back[0]["time"], float)


def test_diagnostics_writer_is_deterministic(tmp_path):
    rows = [dict(step=1, time=1 / 3, dt=0.1, div_omega_linf=np.pi * 1e-14,
                 div_u_linf=0.0, div_psi_linf=0.0,
                 gmres_visc_iters=1, gmres_stream_iters=2)]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_diagnostics(a, rows)
    write_diagnostics(b, rows)
    assert a.read_bytes() == b.read_bytes()
    # full float precision survives the round trip
    assert read_diagnostics(a)[0]["time"] == 1 / 3


def test_read_diagnostics_rejects_foreign_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("step,time\n1,0.1\n")
    with pytest.raises(ValueError):
        read_diagnostics(p)


# ---------------------------------------------------------------------------
# config files

SCHEMA = {"degree": int, "nu": float, "case": str}


def test_parse_config_basics():
    text = """
# solver setup
degree = 2
nu = 1e-3   # viscosity
case = abc
"""
    vals = parse_config(text, SCHEMA)
    assert vals == {"degree": 2, "nu": 1e-3, "case": "abc"}


def test_parse_config_unknown_key_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("degre = 2", SCHEMA)
    assert "line 1" in str(exc.value)
    assert "degre" in str(exc.value)


def test_parse_config_duplicate_key():
    with pytest.raises(ConfigError) as exc:
        parse_config("degree = 1\ndegree = 2", SCHEMA)
    assert "line 2" in str(exc.value)
    assert "duplicate" in str(exc.value)


def test_parse_config_bad_value():
    with pytest.raises(ConfigError) as exc:
        parse_config("nu = sticky", SCHEMA)
    assert "line 1" in str(exc.value)
    assert "nu" in str(exc.value)


def test_parse_config_missing_equals():
    with pytest.raises(ConfigError) as exc:
        parse_config("degree 2", SCHEMA)
    assert "line 1" in str(exc.value)


def test_load_config(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("degree = 1\ncase = tgv\n")
    assert load_config(p, SCHEMA) == {"degree": 1, "case": "tgv"}


# ---------------------------------------------------------------------------
# VTK and raw dumps

def _scalar_field(degree=1, counts=(3, 2, 2)):
    basis = cached_basis(degree)
    grid = StaggeredGrid(bounds=(0.0, 1.5, 0.0, 1.0, 0.0, 1.0), counts=counts)
    data = sample_nodal(grid, basis, PRIMAL, lambda x, y, z: x + 10 * y)
    return DGField(grid, PRIMAL, data)


def test_vtk_scalar_layout(tmp_path):
    f = _scalar_field()
    path = tmp_path / "f.vtk"
    write_vtk(path, f, name="pressure")
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET STRUCTURED_POINTS"
    assert lines[4] == "DIMENSIONS 4 3 3"          # counts + 1 point dims
    assert lines[5].startswith("ORIGIN 0.0")
    assert lines[6].startswith("SPACING 0.5 0.5 0.5")
    assert lines[7] == "CELL_DATA 12"
    assert lines[8] == "SCALARS pressure double 1"
    assert lines[9] == "LOOKUP_TABLE default"
    vals = np.array([float(v) for v in lines[10:]])
    assert vals.size == 12
    # cell means of x + 10y, x varying fastest in the flat ordering
    means = vals.reshape(2, 2, 3)  # (z, y, x)
    assert abs(means[0, 0, 1] - means[0, 0, 0] - 0.5) < 1e-12
    assert abs(means[0, 1, 0] - means[0, 0, 0] - 5.0) < 1e-12
    # mean of the first cell: x in [0, .5), y in [0, .5) -> .25 + 10*.25
    assert abs(means[0, 0, 0] - (0.25 + 2.5)) < 1e-12


def test_vtk_vector_layout(tmp_path):
    basis = cached_basis(1)
    grid = StaggeredGrid.cube(0.0, 1.0, 2)
    data = sample_nodal(grid, basis, DUAL, lambda x, y, z: (1.0 + 0 * x, y, z))
    f = DGField(grid, DUAL, data)
    path = tmp_path / "v.vtk"
    write_vtk(path, f, name="velocity")
    lines = path.read_text().splitlines()
    start = lines.index("VECTORS velocity double") + 1
    rows = [ln.split() for ln in lines[start:]]
    assert len(rows) == 8
    first = [float(v) for v in rows[0]]
    assert abs(first[0] - 1.0) < 1e-12
    # dual cells: first cell mean of y is 0.25 + 0.5/2 = 0.5
    assert abs(first[1] - 0.5) < 1e-12


def test_raw_round_trip_scalar(tmp_path):
    f = _scalar_field(degree=2)
    path = tmp_path / "f.raw"
    write_raw(path, f)
    head = path.read_bytes()[:16]
    assert head[:4] == RAW_MAGIC
    back, degree = read_raw(path, grid=f.grid)
    assert degree == 2
    assert back.staggering == PRIMAL
    assert back.ncomp == 1
    assert np.array_equal(back.data, f.data)


def test_raw_round_trip_vector(tmp_path):
    basis = cached_basis(1)
    grid = StaggeredGrid.cube(0.0, 1.0, 3)
    rng = np.random.default_rng(0)
    f = DGField(grid, DUAL, rng.standard_normal(grid.counts + (basis.ndof, 3)))
    path = tmp_path / "v.raw"
    write_raw(path, f)
    back, degree = read_raw(path, grid=grid)
    assert degree == 1
    assert back.staggering == DUAL
    assert np.array_equal(back.data, f.data)
    # file size: 16-byte header + float64 payload
    assert path.stat().st_size == 16 + 8 * f.data.size


def test_raw_reader_without_grid_uses_header_counts(tmp_path):
    f = _scalar_field()
    path = tmp_path / "f.raw"
    write_raw(path, f)
    back, _ = read_raw(path)
    assert back.grid.counts == f.grid.counts
    assert np.array_equal(back.data, f.data)


def test_raw_reader_validates(tmp_path):
    f = _scalar_field()
    path = tmp_path / "f.raw"
    write_raw(path, f)
    # wrong grid
    wrong = StaggeredGrid.cube(0.0, 1.0, 5)
    with pytest.raises(ValueError):
        read_raw(path, grid=wrong)
    # bad magic
    blob = bytearray(path.read_bytes())
    blob[:4] = b"NOPE"
    bad = tmp_path / "bad.raw"
    bad.write_bytes(bytes(blob))
    with pytest.raises(ValueError):
        read_raw(bad)
    # truncated payload
    trunc = tmp_path / "trunc.raw"
    trunc.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError):
        read_raw(trunc)
    # truncated header
    tiny = tmp_path / "tiny.raw"
    tiny.write_bytes(path.read_bytes()[:10])
    with pytest.raises(ValueError):
        read_raw(tiny)
