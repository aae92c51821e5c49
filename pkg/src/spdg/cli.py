"""Command-line front end: `spdg validate-divcurl | convergence | run`.

Thread pinning happens before any numpy import: --threads (or the
SPDG_THREADS env var) is translated into the usual BLAS/OpenMP environment
variables, which only take effect if set before numpy loads its backend.
All heavy imports therefore live inside the command handlers.

Exit codes: 0 success, 1 solver failure, 2 configuration/usage error,
3 validation threshold exceeded.
"""

import argparse
import csv
import os
import sys

__all__ = ["main"]

_THREAD_VARS = (
    "OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS",
)

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_CONFIG = 2
EXIT_THRESHOLD = 3


def _pin_threads(argv):
    """Resolve --threads / SPDG_THREADS and export BLAS thread caps.

    Must run before numpy is imported anywhere in this process.
    """
    n = None
    for i, a in enumerate(argv):
        if a == "--threads" and i + 1 < len(argv):
            n = argv[i + 1]
        elif a.startswith("--threads="):
            n = a.split("=", 1)[1]
    if n is None:
        n = os.environ.get("SPDG_THREADS")
    if n is None:
        return None
    try:
        n = int(n)
        if n < 1:
            raise ValueError
    except ValueError:
        raise SystemExit(f"spdg: invalid thread count {n!r}")
    for var in _THREAD_VARS:
        os.environ[var] = str(n)
    return n


def _parse_grid(text):
    """'16' -> (16,16,16); '48x48x4' -> (48,48,4)."""
    parts = text.lower().replace("x", ",").split(",")
    vals = tuple(int(p) for p in parts if p)
    if len(vals) == 1:
        return (vals[0],) * 3
    if len(vals) != 3:
        raise ValueError(f"grid must be one or three counts, got {text!r}")
    return vals


def _parse_floats(text):
    return tuple(float(p) for p in text.split(",") if p.strip())


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_choice(*options):
    def conv(text):
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {options}, got {text!r}")
        return t
    return conv


VALIDATE_SCHEMA = {
    "degree": int,
    "grid": _parse_grid,
    "field": _parse_choice("trig", "random"),
    "seed": int,
    "threshold": float,
}

CONVERGENCE_SCHEMA = {
    "study": _parse_choice("operator", "solver", "delta"),
    "case": str,
    "degree": int,
    "grids": lambda s: tuple(int(p) for p in s.split(",") if p.strip()),
    "scheme": str,
    "nu": float,
    "cfl": float,
    "re_h": float,
    "t_end": float,
}

RUN_SCHEMA = {
    "case": str,
    "degree": int,
    "grid": _parse_grid,
    "nu": float,
    "cfl": float,
    "re_h": float,
    "scheme": str,
    "t_end": float,
    "snapshot_times": _parse_floats,
    "seed": int,
    "av_implicit": _parse_bool,
}


def _build_parser():
    p = argparse.ArgumentParser(
        prog="spdg",
        description="Structure-preserving DG div/grad/curl operators and "
                    "a vortex-stream incompressible Navier-Stokes solver.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("validate-divcurl", "check div(curl(.)) residuals for one setup"),
        ("convergence", "run a convergence study and write a CSV table"),
        ("run", "time-march a flow case, writing diagnostics and snapshots"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True, help="key = value config file")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
        sp.add_argument("--threads", type=int, default=None,
                        help="cap BLAS/OpenMP threads (env: SPDG_THREADS)")
        sp.add_argument("--out", default=".", help="output directory")
    return p


def _default_scheme(degree):
    if degree <= 0:
        return "SP111"
    if degree == 1:
        return "LSDIRK222"
    return "SADIRK343"


# ---------------------------------------------------------------------------
# study runners (shared by the CLI and the test-suite)

def operator_study_row(degree, nh):
    """Interpolate the trigonometric stream field at the corner nodes, take
    its discrete curl, and measure both approximation errors plus the
    div-curl residual on an nh^3 unit cube.

    Errors are evaluated at the quadrature points between the nodes, where
    the stream interpolant shows its true O(N+1) error and the curl its
    O(N)."""
    from .basis import cached_basis
    from .grid import StaggeredGrid, DUAL
    from .opkernels import OperatorSet
    from .fieldops import DGField, curl, divergence_sp
    from .cases import trig_field, sample_nodal, quadrature_error_norms

    basis = cached_basis(degree)
    grid = StaggeredGrid.cube(0.0, 1.0, nh)
    ops = OperatorSet(basis, grid.spacings)
    psi_h = DGField(grid, DUAL,
                    sample_nodal(grid, basis, DUAL,
                                 lambda x, y, z: trig_field(x, y, z)[0]))
    u_h = curl(ops, psi_h)
    psi1 = quadrature_error_norms(grid, basis, psi_h.component(0),
                                  lambda x, y, z: trig_field(x, y, z)[0][0])
    u1 = quadrature_error_norms(grid, basis, u_h.component(0),
                                lambda x, y, z: trig_field(x, y, z)[1][0])
    divres = divergence_sp(ops, u_h).linf()
    return {"u1": u1, "psi1": psi1, "divres": divres, "h": grid.spacings[0]}


def delta_study_row(degree, nh, delta_power_offset):
    """Stream-function recovery error |curl curl psi - omega| for the ABC
    vorticity with delta = h^(N + offset); offset 1 is the accurate rule."""
    from .basis import cached_basis
    from .opkernels import OperatorSet
    from .fieldops import curl
    from .cases import get_case, build_grid
    from .nssolver import project_l2, solve_stream
    from .grid import DUAL

    case = get_case("abc")
    basis = cached_basis(degree)
    grid = build_grid(case, nh)
    ops = OperatorSet(basis, grid.spacings)
    u0 = project_l2(grid, basis, DUAL,
                    lambda x, y, z: case.velocity(x, y, z, 0.0, 0.0), 3)
    omega = curl(ops, u0)
    h = min(grid.spacings)
    delta = h ** (degree + delta_power_offset)
    psi = solve_stream(ops, omega, delta=delta)
    resid = curl(ops, curl(ops, psi))
    resid.data -= omega.data
    return {"err": resid.linf(), "h": h}


def solver_study_row(degree, nh, scheme, nu=0.0, cfl=0.9, re_h=1e20,
                     t_end=0.1, case_name="abc", av_implicit=False):
    """Run a flow case to t_end and return final-time errors for omega_1 and
    the velocity vector, plus the worst involution residual of the run.

    Errors are quadrature-sampled so projections and solver output are
    measured at their true polynomial accuracy (nodal sampling hides one
    order of the projection error)."""
    from .basis import cached_basis
    from .opkernels import OperatorSet
    from .cases import get_case, build_grid, quadrature_error_norms
    from .nssolver import PhysicsConfig, run

    case = get_case(case_name)
    basis = cached_basis(degree)
    grid = build_grid(case, nh)
    ops = OperatorSet(basis, grid.spacings)
    cfg = PhysicsConfig(nu=nu, cfl=cfl, re_h=re_h, t_end=t_end,
                        av_implicit=av_implicit)
    state, diags = run(grid, basis, cfg, scheme=scheme,
                       init_velocity=case.velocity,
                       init_vorticity=case.vorticity, ops=ops)
    t = state.t
    w1 = quadrature_error_norms(grid, basis, state.omega.component(0),
                                lambda x, y, z: case.vorticity(x, y, z, t, nu)[0])
    u_all = quadrature_error_norms(grid, basis, state.u,
                                   lambda x, y, z: case.velocity(x, y, z, t, nu))
    worst = 0.0
    for d in diags:
        worst = max(worst, d.div_omega_linf, d.div_u_linf, d.div_psi_linf)
    return {"omega1": w1, "u": u_all, "h": min(grid.spacings),
            "involution_max": worst, "steps": state.step}


def _write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(r)


def _orders(errs, hs):
    import math
    out = [float("nan")]
    for i in range(1, len(errs)):
        if errs[i] == 0 or errs[i - 1] == 0:
            out.append(float("nan"))
        else:
            out.append(math.log(errs[i - 1] / errs[i]) / math.log(hs[i - 1] / hs[i]))
    return out


def _fmt(x):
    return repr(float(x))


# ---------------------------------------------------------------------------
# subcommands

def cmd_validate_divcurl(cfg, out_dir, seed_override):
    import numpy as np
    from .basis import cached_basis
    from .grid import StaggeredGrid, DUAL
    from .opkernels import OperatorSet
    from .fieldops import DGField, curl, divcurl_residual
    from .cases import trig_field, sample_nodal
    from .nssolver import project_l2

    degree = cfg["degree"]
    counts = cfg.get("grid", (8, 8, 8))
    kind = cfg.get("field", "random")
    seed = seed_override if seed_override is not None else cfg.get("seed", 0)
    threshold = cfg.get("threshold", 1e-11)

    basis = cached_basis(degree)
    if kind == "trig":
        grid = StaggeredGrid.cube(0.0, 1.0, counts[0]) if counts[0] == counts[1] == counts[2] \
            else StaggeredGrid(bounds=(0.0, 1.0) * 3, counts=counts)
        ops = OperatorSet(basis, grid.spacings)
        psi = project_l2(grid, basis, DUAL,
                         lambda x, y, z: trig_field(x, y, z)[0], 3)
    else:
        # unit spacing, as in the randomized stress test
        grid = StaggeredGrid(bounds=(0.0, float(counts[0]), 0.0, float(counts[1]),
                                     0.0, float(counts[2])), counts=counts)
        ops = OperatorSet(basis, grid.spacings)
        rng = np.random.default_rng(seed)
        psi = DGField(grid, DUAL,
                      rng.random(counts + (basis.ndof, 3)))
    u = curl(ops, psi)
    sp, tilde = divcurl_residual(ops, u)
    row = [degree, "x".join(str(c) for c in counts), kind, seed,
           _fmt(sp), _fmt(tilde), _fmt(threshold)]
    header = ["degree", "grid", "field", "seed",
              "div_sp_linf", "div_tilde_linf", "threshold"]
    os.makedirs(out_dir, exist_ok=True)
    _write_table(os.path.join(out_dir, "divcurl.csv"), header, [row])
    print(f"div_sp(curl)    L_inf = {sp:.6e}")
    print(f"div_tilde(curl) L_inf = {tilde:.6e}")
    if sp > threshold:
        print(f"FAIL: structure-preserving residual exceeds {threshold:g}",
              file=sys.stderr)
        return EXIT_THRESHOLD
    print("OK")
    return EXIT_OK


def cmd_convergence(cfg, out_dir, seed_override):
    study = cfg.get("study", "operator")
    degree = cfg["degree"]
    grids = cfg.get("grids")
    if not grids:
        raise ValueError("convergence study needs a non-empty 'grids' list")
    os.makedirs(out_dir, exist_ok=True)

    if study == "operator":
        case_name = cfg.get("case", "trig")
        rows = [operator_study_row(degree, nh) for nh in grids]
        hs = [r["h"] for r in rows]
        u1 = [r["u1"][0] for r in rows]
        u1i = [r["u1"][1] for r in rows]
        p1 = [r["psi1"][0] for r in rows]
        p1i = [r["psi1"][1] for r in rows]
        header = ["N_h", "u1_L1", "u1_L1_order", "u1_Linf", "u1_Linf_order",
                  "psi1_L1", "psi1_L1_order", "psi1_Linf", "psi1_Linf_order",
                  "divcurl_res"]
        table = []
        for i, nh in enumerate(grids):
            table.append([
                nh,
                _fmt(u1[i]), _fmt(_orders(u1, hs)[i]),
                _fmt(u1i[i]), _fmt(_orders(u1i, hs)[i]),
                _fmt(p1[i]), _fmt(_orders(p1, hs)[i]),
                _fmt(p1i[i]), _fmt(_orders(p1i, hs)[i]),
                _fmt(rows[i]["divres"]),
            ])
    elif study == "delta":
        case_name = cfg.get("case", "abc")
        acc = [delta_study_row(degree, nh, 1) for nh in grids]
        lossy = [delta_study_row(degree, nh, 0) for nh in grids]
        hs = [r["h"] for r in acc]
        e1 = [r["err"] for r in acc]
        e0 = [r["err"] for r in lossy]
        header = ["N_h", "eps_delta_hN1", "eps_delta_hN1_order",
                  "eps_delta_hN", "eps_delta_hN_order"]
        table = []
        for i, nh in enumerate(grids):
            table.append([nh, _fmt(e1[i]), _fmt(_orders(e1, hs)[i]),
                          _fmt(e0[i]), _fmt(_orders(e0, hs)[i])])
    else:
        case_name = cfg.get("case", "abc")
        scheme = cfg.get("scheme", _default_scheme(degree))
        from .cases import get_case
        case = get_case(case_name)
        nu = cfg.get("nu", case.nu_default)
        t_end = cfg.get("t_end", case.t_end_default)
        rows = [solver_study_row(degree, nh, scheme, nu=nu,
                                 cfl=cfg.get("cfl", 0.9),
                                 re_h=cfg.get("re_h", 1e20), t_end=t_end,
                                 case_name=case_name)
                for nh in grids]
        hs = [r["h"] for r in rows]
        w1 = [r["omega1"][0] for r in rows]
        w1i = [r["omega1"][1] for r in rows]
        uu = [r["u"][0] for r in rows]
        uui = [r["u"][1] for r in rows]
        header = ["N_h", "omega1_L1", "omega1_L1_order",
                  "omega1_Linf", "omega1_Linf_order",
                  "u_L1", "u_L1_order", "u_Linf", "u_Linf_order"]
        table = []
        for i, nh in enumerate(grids):
            table.append([
                grids[i],
                _fmt(w1[i]), _fmt(_orders(w1, hs)[i]),
                _fmt(w1i[i]), _fmt(_orders(w1i, hs)[i]),
                _fmt(uu[i]), _fmt(_orders(uu, hs)[i]),
                _fmt(uui[i]), _fmt(_orders(uui, hs)[i]),
            ])

    path = os.path.join(out_dir, f"{case_name}_{degree}_conv.csv")
    _write_table(path, header, table)
    print(f"wrote {path}")
    return EXIT_OK


def _write_snapshot(out_dir, tag, state, case_name):
    from .iofmt import write_vtk, write_raw
    for fname, fld in (("omega", state.omega), ("u", state.u),
                       ("psi", state.psi)):
        base = os.path.join(out_dir, f"{case_name}_{tag}_{fname}")
        write_vtk(base + ".vtk", fld, name=fname)
        write_raw(base + ".raw", fld)


def cmd_run(cfg, out_dir, seed_override):
    from .basis import cached_basis
    from .opkernels import OperatorSet
    from .cases import get_case, build_grid
    from .nssolver import PhysicsConfig, init_well_prepared, run
    from .iofmt import write_diagnostics
    from .krylov import GmresError

    case = get_case(cfg["case"])
    degree = cfg["degree"]
    counts = cfg.get("grid", case.grids[0])
    scheme = cfg.get("scheme", _default_scheme(degree))
    nu = cfg.get("nu", case.nu_default)
    t_end = cfg.get("t_end", case.t_end_default)
    phys = PhysicsConfig(nu=nu, cfl=cfg.get("cfl", 0.9),
                         re_h=cfg.get("re_h", 1e20), t_end=t_end,
                         av_implicit=cfg.get("av_implicit", False))
    snap_times = cfg.get("snapshot_times", ())

    basis = cached_basis(degree)
    grid = build_grid(case, counts)
    ops = OperatorSet(basis, grid.spacings)
    os.makedirs(out_dir, exist_ok=True)

    state = init_well_prepared(case.velocity, grid, basis, ops, nu,
                               case_vorticity=case.vorticity)
    _write_snapshot(out_dir, "t0.0", state, case.name)
    snap_count = [0]

    def on_snapshot(st):
        snap_count[0] += 1
        _write_snapshot(out_dir, f"s{snap_count[0]:03d}_t{st.t:.6g}", st, case.name)

    diag_path = os.path.join(out_dir, "diagnostics.csv")
    diags = []
    try:
        state, diags = run(grid, basis, phys, scheme=scheme, state=state,
                           ops=ops, snapshot_times=[s for s in snap_times if s > 0],
                           on_snapshot=on_snapshot)
    except (GmresError, RuntimeError, FloatingPointError) as exc:
        write_diagnostics(diag_path, diags)
        _write_snapshot(out_dir, "failed", state, case.name)
        print(f"spdg: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    write_diagnostics(diag_path, diags)
    if state.step > 0:
        _write_snapshot(out_dir, f"final_t{state.t:.6g}", state, case.name)
    print(f"completed {state.step} steps to t = {state.t:.6g}; "
          f"diagnostics in {diag_path}")
    return EXIT_OK


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    try:
        _pin_threads(argv)
    except SystemExit as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)

    from .iofmt import load_config, ConfigError
    schema = {"validate-divcurl": VALIDATE_SCHEMA,
              "convergence": CONVERGENCE_SCHEMA,
              "run": RUN_SCHEMA}[args.command]
    try:
        cfg = load_config(args.config, schema)
    except OSError as exc:
        print(f"spdg: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"spdg: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    handler = {"validate-divcurl": cmd_validate_divcurl,
               "convergence": cmd_convergence,
               "run": cmd_run}[args.command]
    try:
        return handler(cfg, args.out, args.seed)
    except (ValueError, KeyError) as exc:
        print(f"spdg: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
