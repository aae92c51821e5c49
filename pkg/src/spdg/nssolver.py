"""Vortex-stream incompressible Navier-Stokes solver.

State: vorticity omega and stream function psi on primal cells, velocity u
on dual cells.  One step:

  1. advance omega with an IMEX scheme — explicit curl transport
     curl(u x P(omega)) (plus optional compatible dissipation), implicit
     viscous double-curl solved matrix-free by GMRES;
  2. recover psi from (curl curl + delta I) psi = omega (delta-regularized,
     GMRES, warm-started);
  3. u = curl(psi).

Because every right-hand side is a discrete curl and the Krylov iterates
stay inside the corrected divergence's kernel, the three involutions
div(omega) = div(u) = div(psi) = 0 hold to round-off at every step.
"""

from dataclasses import dataclass

import numpy as np

from .basis import lagrange_values
from .grid import StaggeredGrid, PRIMAL, DUAL
from .opkernels import OperatorSet
from .fieldops import DGField, curl, divergence_sp, project
from .krylov import GmresConfig, gmres
from .imex import tableau, imex_advance

__all__ = [
    "PhysicsConfig", "SolverState", "StepDiagnostics", "project_l2",
    "init_well_prepared", "compute_E", "explicit_rhs", "implicit_solve",
    "solve_stream", "update_velocity", "compute_dt", "run",
]

OMEGA_TOL = 1e-10  # viscous-solve residual tolerance


@dataclass
class PhysicsConfig:
    nu: float = 0.0
    cfl: float = 0.9
    re_h: float = 1e20        # mesh Reynolds number; 1e20 = dissipation off
    t_end: float = 0.1
    av_implicit: bool = False  # fold the h/Re_h dissipation into the viscous solve
    refresh_velocity_per_stage: bool = False

    def __post_init__(self):
        if self.nu < 0 or self.re_h <= 0 or not (0 < self.cfl <= 1):
            raise ValueError("invalid physics configuration")


@dataclass
class SolverState:
    omega: DGField
    psi: DGField
    u: DGField
    t: float = 0.0
    step: int = 0


@dataclass
class StepDiagnostics:
    step: int
    time: float
    dt: float
    div_omega_linf: float
    div_u_linf: float
    div_psi_linf: float
    gmres_visc_iters: int
    gmres_stream_iters: int


def project_l2(grid, basis, staggering, fun, ncomp=3):
    """Cellwise L2 projection of an analytic function onto the DG space.

    Uses the (N+2)-point tensor quadrature, so the projection carries one
    extra order of accuracy over nodal interpolation.
    """
    qx, qw = basis.quad_nodes, basis.quad_weights
    nq = len(qx)
    n1 = basis.n1d
    phi = lagrange_values(basis.nodes, qx)          # (nq, n1)
    o = grid.origin(staggering)
    ax = [o[i] + (np.arange(grid.counts[i])[:, None] + qx[None, :]) * grid.spacings[i]
          for i in range(3)]
    X = ax[0][:, None, None, :, None, None]
    Y = ax[1][None, :, None, None, :, None]
    Z = ax[2][None, None, :, None, None, :]
    vals = fun(X, Y, Z)
    if not isinstance(vals, tuple):
        vals = (vals,)
    # 1D projection matrix: nodal coeffs of the quadrature samples
    m1 = basis.mass_1d()
    P1 = np.linalg.solve(m1, (phi * qw[:, None]).T)  # (n1, nq)
    full = grid.counts + (nq, nq, nq)
    comps = []
    for v in vals:
        v = np.broadcast_to(v, full)
        a = np.einsum("aq,xyzqrs->xyzars", P1, v)
        a = np.einsum("br,xyzars->xyzabs", P1, a)
        a = np.einsum("cs,xyzabs->xyzabc", P1, a)
        comps.append(np.moveaxis(a, (3, 4, 5), (5, 4, 3)).reshape(grid.counts + (basis.ndof,)))
    data = comps[0] if len(comps) == 1 else np.stack(comps, axis=-1)
    return DGField(grid, staggering, data)


def _flatten(f: DGField):
    return f.data.reshape(-1)


def _like(f: DGField, flat):
    return DGField(f.grid, f.staggering, flat.reshape(f.data.shape))


def compute_E(ops, state: SolverState) -> DGField:
    """Transport field E = u x P(omega) at the dual nodes."""
    w_dual = project(ops, state.omega)
    return DGField(state.u.grid, DUAL, np.cross(state.u.data, w_dual.data))


def _curl_of_E(ops, u: DGField, omega: DGField) -> DGField:
    w_dual = project(ops, omega)
    E = DGField(u.grid, DUAL, np.cross(u.data, w_dual.data))
    return curl(ops, E)


def explicit_rhs(ops, omega: DGField, u: DGField, cfg: PhysicsConfig) -> DGField:
    """curl(E), minus the compatible dissipation term when Re_h is finite."""
    out = _curl_of_E(ops, u, omega)
    if np.isfinite(cfg.re_h) and cfg.re_h < 1e19 and not cfg.av_implicit:
        h = max(ops.spacings)
        cc = curl(ops, curl(ops, omega))
        out.data -= (h / cfg.re_h) * cc.data
    return out


def _effective_nu(ops, cfg: PhysicsConfig):
    nu = cfg.nu
    if cfg.av_implicit and np.isfinite(cfg.re_h) and cfg.re_h < 1e19:
        nu = nu + max(ops.spacings) / cfg.re_h
    return nu


def implicit_solve(ops, rhs: DGField, aii_dt: float, nu: float,
                   x0=None, iters_out=None) -> DGField:
    """Solve (I + nu*aii_dt * curl curl) w = rhs matrix-free."""
    if nu * aii_dt == 0.0:
        return rhs.copy()

    def op(flat):
        w = _like(rhs, flat)
        return flat + nu * aii_dt * _flatten(curl(ops, curl(ops, w)))

    cfg = GmresConfig(tolerance=OMEGA_TOL)
    x0v = _flatten(rhs) if x0 is None else _flatten(x0)
    sol, iters, _ = gmres(op, _flatten(rhs), x0=x0v, cfg=cfg)
    if iters_out is not None:
        iters_out.append(iters)
    return _like(rhs, sol)


def solve_stream(ops, omega: DGField, delta=None, tol=None, x0=None,
                 iters_out=None) -> DGField:
    """delta-regularized stream recovery: (curl curl + delta I) psi = omega."""
    hmin = min(ops.spacings)
    N = ops.degree
    if delta is None:
        delta = hmin ** (N + 1)
    if tol is None:
        tol = hmin ** (N + 2)

    def op(flat):
        w = _like(omega, flat)
        return _flatten(curl(ops, curl(ops, w))) + delta * flat

    cfg = GmresConfig(tolerance=tol)
    x0v = None if x0 is None else _flatten(x0)
    sol, iters, _ = gmres(op, _flatten(omega), x0=x0v, cfg=cfg)
    if iters_out is not None:
        iters_out.append(iters)
    return _like(omega, sol)


def update_velocity(ops, psi: DGField) -> DGField:
    return curl(ops, psi)


def compute_dt(state: SolverState, cfg: PhysicsConfig, grid: StaggeredGrid):
    """Convective CFL time step; viscosity never enters."""
    remaining = cfg.t_end - state.t
    speed = 0.0
    for c in range(3):
        speed += float(np.abs(state.u.data[..., c]).max()) / grid.spacings[c]
    if speed == 0.0:
        return remaining
    return min(cfg.cfl / speed, remaining)


def init_well_prepared(case_velocity, grid, basis, ops, nu=0.0,
                       case_vorticity=None) -> SolverState:
    """Well-prepared initial state: velocity projected onto the dual grid,
    vorticity either the discrete curl of that velocity (guaranteed
    divergence-free, but one order less accurate) or, when the analytic
    vorticity is supplied, its direct projection.  The benchmark flows all
    have components independent of their own coordinate, so the projected
    vorticity is discretely divergence-free to round-off as well, while
    keeping the full projection accuracy.  A consistent stream function is
    recovered once."""
    u = project_l2(grid, basis, DUAL, lambda x, y, z: case_velocity(x, y, z, 0.0, nu), 3)
    if case_vorticity is None:
        omega = curl(ops, u)
    else:
        omega = project_l2(grid, basis, PRIMAL,
                           lambda x, y, z: case_vorticity(x, y, z, 0.0, nu), 3)
    psi = solve_stream(ops, omega)
    return SolverState(omega=omega, psi=psi, u=u, t=0.0, step=0)


def _involutions(ops, state: SolverState):
    return (divergence_sp(ops, state.omega).linf(),
            divergence_sp(ops, state.u).linf(),
            divergence_sp(ops, state.psi).linf())


def run(grid, basis, cfg: PhysicsConfig, scheme="SP111", init_velocity=None,
        init_vorticity=None, state=None, ops=None, on_step=None,
        snapshot_times=(), on_snapshot=None, max_steps=100000):
    """Time-march to t_end; returns (final state, [StepDiagnostics...]).

    Either `state` or `init_velocity` must be given.  on_step(diag, state)
    fires after every completed step; on_snapshot(state) at requested times
    (and at t=0 if 0 is listed).
    """
    if ops is None:
        ops = OperatorSet(basis, grid.spacings)
    if state is None:
        if init_velocity is None:
            raise ValueError("need an initial state or an analytic velocity")
        state = init_well_prepared(init_velocity, grid, basis, ops, cfg.nu,
                                   case_vorticity=init_vorticity)
    tab = tableau(scheme)
    nu_eff = _effective_nu(ops, cfg)
    diagnostics = []
    pending_snaps = sorted(t for t in snapshot_times)
    eps_t = 1e-12 * max(1.0, abs(cfg.t_end))

    def emit_snapshots():
        while pending_snaps and pending_snaps[0] <= state.t + eps_t:
            pending_snaps.pop(0)
            if on_snapshot is not None:
                on_snapshot(state)

    emit_snapshots()
    while state.t < cfg.t_end - eps_t and state.step < max_steps:
        dt = compute_dt(state, cfg, grid)
        if pending_snaps:
            dt = min(dt, pending_snaps[0] - state.t)
        if dt <= 0:
            break
        visc_iters = []
        stream_iters = []
        u_frozen = state.u

        def H(w_ex, w_im, aii_dt):
            w_ex_f = _like(state.omega, w_ex)
            if cfg.refresh_velocity_per_stage:
                psi_s = solve_stream(ops, w_ex_f, x0=state.psi, iters_out=stream_iters)
                u_stage = update_velocity(ops, psi_s)
            else:
                u_stage = u_frozen
            rhs = explicit_rhs(ops, w_ex_f, u_stage, cfg)
            if nu_eff > 0:
                w_im_f = _like(state.omega, w_im)
                rhs.data -= nu_eff * curl(ops, curl(ops, w_im_f)).data
                if aii_dt > 0:
                    k = implicit_solve(ops, rhs, aii_dt, nu_eff,
                                       iters_out=visc_iters)
                    return _flatten(k)
            return _flatten(rhs)

        new_flat = imex_advance(_flatten(state.omega), dt, H, tab)
        state.omega = _like(state.omega, new_flat)
        state.psi = solve_stream(ops, state.omega, x0=state.psi,
                                 iters_out=stream_iters)
        state.u = update_velocity(ops, state.psi)
        state.t += dt
        state.step += 1
        dw, du, dp = _involutions(ops, state)
        diag = StepDiagnostics(step=state.step, time=state.t, dt=dt,
                               div_omega_linf=dw, div_u_linf=du,
                               div_psi_linf=dp,
                               gmres_visc_iters=sum(visc_iters),
                               gmres_stream_iters=sum(stream_iters))
        diagnostics.append(diag)
        if on_step is not None:
            on_step(diag, state)
        emit_snapshots()
    return state, diagnostics
