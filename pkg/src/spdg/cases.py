"""Benchmark fields, error norms, and convergence-study orchestration.

Every analytic case provides closures u(x,y,z,t) (and omega, psi where they
exist in closed form) plus its domain and sensible defaults.  2D problems
run as thin 3D slabs.
"""

from dataclasses import dataclass, field

import numpy as np

from .grid import StaggeredGrid

__all__ = [
    "CaseSpec", "trig_field", "abc_exact", "tgv_exact", "shear_layer_init",
    "shear_layer_velocity", "get_case", "build_grid", "error_norms",
    "quadrature_error_norms", "convergence_study",
]

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# analytic fields

def trig_field(x, y, z):
    """Periodic trigonometric stream function on [0,1]^3 and its curl.

    Returns (psi, u) with u = curl(psi), both as component tuples.  The pair
    is used for operator convergence studies: psi is projected, u recovered
    by the discrete curl.
    """
    c = TWO_PI
    sx, cx = np.sin(c * x), np.cos(c * x)
    sy, cy = np.sin(c * y), np.cos(c * y)
    sz, cz = np.sin(c * z), np.cos(c * z)
    psi = (-sx * cy * cz, 2.0 * cx * sy * cz, cx * cy * cz)
    u = (c * cx * sy * (2.0 * sz - cz),
         c * sx * cy * (sz + cz),
         -3.0 * c * sx * sy * cz)
    return psi, u


def abc_exact(x, y, z, t=0.0, nu=0.0):
    """Arnold-Beltrami-Childress flow on [-pi,pi]^3: (u, omega).

    Beltrami field with unit eigenvalue, so omega = u and the exact
    Navier-Stokes evolution is a pure exponential decay e^{-nu t}.
    """
    decay = np.exp(-nu * t)
    u = ((np.sin(z) + np.cos(y)) * decay,
         (np.sin(x) + np.cos(z)) * decay,
         (np.sin(y) + np.cos(x)) * decay)
    return u, u


def tgv_exact(x, y, z, t=0.0, nu=0.0):
    """2D Taylor-Green vortex as a slab flow: (u, omega), decay e^{-2 nu t}."""
    decay = np.exp(-2.0 * nu * t)
    zero = np.zeros_like(np.asarray(x, dtype=float) + np.asarray(y, dtype=float))
    u = (np.sin(x) * np.cos(y) * decay,
         -np.cos(x) * np.sin(y) * decay,
         zero)
    omega = (zero, zero, 2.0 * np.sin(x) * np.sin(y) * decay)
    return u, omega


def _sech(a):
    """1/cosh with an overflow guard for large arguments."""
    a = np.asarray(a, dtype=float)
    out = np.zeros_like(a)
    small = np.abs(a) <= 350.0
    out[small] = 1.0 / np.cosh(a[small])
    return out


SHEAR_THETA = 0.05
SHEAR_BETA = np.pi / 15.0


def shear_layer_velocity(x, y, z):
    """Double shear layer velocity on [0,2pi]^2 (slab in z)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    prof = np.where(y <= np.pi,
                    np.tanh((y - np.pi / 2.0) / SHEAR_BETA),
                    np.tanh((3.0 * np.pi / 2.0 - y) / SHEAR_BETA))
    zero = np.zeros(np.broadcast_shapes(x.shape, y.shape))
    return (prof + zero, SHEAR_THETA * np.sin(x) + zero, zero)


def shear_layer_init(x, y, z):
    """Initial vorticity of the double shear layer (z-component only)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lower = y <= np.pi
    sech2_lo = _sech((y - np.pi / 2.0) / SHEAR_BETA) ** 2
    sech2_hi = _sech((3.0 * np.pi / 2.0 - y) / SHEAR_BETA) ** 2
    dprof = np.where(lower, sech2_lo, -sech2_hi) / SHEAR_BETA
    w3 = SHEAR_THETA * np.cos(x) - dprof
    zero = np.zeros_like(w3)
    return (zero, zero, w3)


# ---------------------------------------------------------------------------
# case registry

@dataclass
class CaseSpec:
    name: str
    bounds: tuple
    velocity: callable          # (x,y,z,t,nu) -> 3 components
    vorticity: callable         # (x,y,z,t,nu) -> 3 components
    nu_default: float = 0.0
    t_end_default: float = 0.1
    grids: tuple = (8, 16)
    time_dependent: bool = True
    two_dimensional: bool = False   # run as a thin slab of cubic cells


def _abc_u(x, y, z, t, nu):
    return abc_exact(x, y, z, t, nu)[0]


def _abc_w(x, y, z, t, nu):
    return abc_exact(x, y, z, t, nu)[1]


def _tgv_u(x, y, z, t, nu):
    return tgv_exact(x, y, z, t, nu)[0]


def _tgv_w(x, y, z, t, nu):
    return tgv_exact(x, y, z, t, nu)[1]


CASES = {
    "abc": CaseSpec(
        name="abc",
        bounds=(-np.pi, np.pi) * 3,
        velocity=_abc_u,
        vorticity=_abc_w,
        nu_default=0.0,
        t_end_default=0.1,
        grids=(8, 16, 24, 32),
    ),
    "tgv": CaseSpec(
        name="tgv",
        bounds=(0.0, TWO_PI, 0.0, TWO_PI, 0.0, 1.0),
        velocity=_tgv_u,
        vorticity=_tgv_w,
        nu_default=1e-5,
        t_end_default=0.2,
        grids=(48,),
        two_dimensional=True,
    ),
    "shear": CaseSpec(
        name="shear",
        bounds=(0.0, TWO_PI, 0.0, TWO_PI, 0.0, 1.0),
        velocity=lambda x, y, z, t, nu: shear_layer_velocity(x, y, z),
        vorticity=lambda x, y, z, t, nu: shear_layer_init(x, y, z),
        nu_default=1e-2,
        t_end_default=8.0,
        grids=(80,),
        time_dependent=False,
        two_dimensional=True,
    ),
}


def get_case(name: str) -> CaseSpec:
    try:
        return CASES[name]
    except KeyError:
        raise ValueError(f"unknown case {name!r}; available: {sorted(CASES)}") from None


def build_grid(case: CaseSpec, counts) -> StaggeredGrid:
    """Grid for a case.  A single count n means n^3 cells (or an n x n x 4
    slab for the planar cases); planar cases get a z-extent that keeps the
    cells cubic, since their fields do not depend on z."""
    if np.isscalar(counts):
        counts = (int(counts),) * 3
        if case.two_dimensional:
            counts = (counts[0], counts[1], 4)
    counts = tuple(int(c) for c in counts)
    b = case.bounds
    if case.two_dimensional:
        dx = (b[1] - b[0]) / counts[0]
        b = b[:4] + (0.0, counts[2] * dx)
    return StaggeredGrid(bounds=b, counts=counts)


# ---------------------------------------------------------------------------
# error norms and studies

def nodal_coordinates(grid, basis, staggering):
    """Broadcastable (X, Y, Z) arrays covering every node of the grid."""
    ax = [grid.axis_coords(staggering, basis, i) for i in range(3)]
    n1 = basis.n1d
    cx = ax[0][:, None, None, :, None, None]
    cy = ax[1][None, :, None, None, :, None]
    cz = ax[2][None, None, :, None, None, :]
    return cx, cy, cz


def sample_nodal(grid, basis, staggering, fun):
    """Sample fun(x,y,z) at all nodes -> (Nx,Ny,Nz,ndof) array.

    fun may return a scalar array or a tuple of 3 component arrays; the
    flat DoF axis follows the l1-fastest convention.
    """
    cx, cy, cz = nodal_coordinates(grid, basis, staggering)
    n1 = basis.n1d
    full = grid.counts + (n1, n1, n1)

    def _flatten(a):
        a = np.broadcast_to(a, full)
        return np.moveaxis(a, (3, 4, 5), (5, 4, 3)).reshape(grid.counts + (basis.ndof,))

    out = fun(cx, cy, cz)
    if isinstance(out, tuple):
        return np.stack([_flatten(c) for c in out], axis=-1)
    return _flatten(out)


def error_norms(ops, field, exact_nodal):
    """(L1, Linf) of field.data - exact_nodal.

    L1 is the quadrature-weighted integral of |error|: nodal weights times
    cell volume, summed over everything; Linf is the max over raw DoFs.
    """
    basis = ops.basis
    diff = field.data - exact_nodal
    wts = basis.weights
    w3 = np.kron(wts, np.kron(wts, wts))
    vol = field.grid.cell_volume
    if diff.ndim == 5:
        l1 = float(np.einsum("xyzlc,l->", np.abs(diff), w3) * vol)
    else:
        l1 = float(np.einsum("xyzl,l->", np.abs(diff), w3) * vol)
    return l1, float(np.abs(diff).max())


def quadrature_error_norms(grid, basis, field, exact_fun):
    """(L1, Linf) of a DG field against an analytic function, measured at
    the (N+2)-point tensor quadrature inside every cell.

    Evaluating between the nodes shows interpolation/projection errors at
    their true order (at the nodes themselves an interpolant is exact and a
    projection superconverges).  Used by the operator convergence study;
    the solver studies compare nodal values via error_norms.
    """
    from .basis import lagrange_values
    qx, qw = basis.quad_nodes, basis.quad_weights
    n1, nq = basis.n1d, len(qx)
    phi = lagrange_values(basis.nodes, qx)          # (nq, n1)
    data = field.data
    vec = data.ndim == 5
    counts = grid.counts
    if vec:
        d = data.reshape(counts + (n1, n1, n1, 3))  # dof axes: (l3, l2, l1)
        vals = np.einsum("pa,qb,rc,xyzcbad->xyzpqrd", phi, phi, phi, d)
    else:
        d = data.reshape(counts + (n1, n1, n1))
        vals = np.einsum("pa,qb,rc,xyzcba->xyzpqr", phi, phi, phi, d)
    o = grid.origin(field.staggering)
    ax = [o[i] + (np.arange(counts[i])[:, None] + qx[None, :]) * grid.spacings[i]
          for i in range(3)]
    X = ax[0][:, None, None, :, None, None]
    Y = ax[1][None, :, None, None, :, None]
    Z = ax[2][None, None, :, None, None, :]
    exact = exact_fun(X, Y, Z)
    if isinstance(exact, tuple):
        exact = np.stack([np.broadcast_to(c, counts + (nq, nq, nq)) for c in exact],
                         axis=-1)
    else:
        exact = np.broadcast_to(exact, counts + (nq, nq, nq))
    diff = np.abs(vals - exact)
    vol = grid.cell_volume
    if vec:
        l1 = float(np.einsum("xyzpqrd,p,q,r->", diff, qw, qw, qw) * vol)
    else:
        l1 = float(np.einsum("xyzpqr,p,q,r->", diff, qw, qw, qw) * vol)
    return l1, float(diff.max())


def observed_order(e_coarse, e_fine, h_coarse, h_fine):
    if e_coarse <= 0 or e_fine <= 0:
        return float("nan")
    return float(np.log(e_coarse / e_fine) / np.log(h_coarse / h_fine))


def convergence_study(runner, grids, degree):
    """Run `runner(nh)` on each grid and tabulate errors and orders.

    runner returns a dict: {field_name: (err_l1, err_linf), ...,
    optionally "_div": residual}.  Output: list of row dicts with keys
    nh, h, field, err_l1, order_l1, err_linf, order_linf, div_res.
    """
    if len(grids) < 1:
        raise ValueError("need at least one grid")
    rows = []
    prev = {}
    for nh in grids:
        res = runner(nh)
        div = res.pop("_div", float("nan"))
        h = 1.0 / nh
        for name, (e1, einf) in sorted(res.items()):
            o1 = oinf = float("nan")
            if name in prev:
                p1, pinf, ph = prev[name]
                o1 = observed_order(p1, e1, ph, h)
                oinf = observed_order(pinf, einf, ph, h)
            rows.append(dict(nh=nh, h=h, field=name, err_l1=e1, order_l1=o1,
                             err_linf=einf, order_linf=oinf, div_res=div))
            prev[name] = (e1, einf, h)
    return rows
