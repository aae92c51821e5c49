"""Structure-preserving DG div/grad/curl operators on corner-staggered
periodic Cartesian grids, plus a vortex-stream incompressible Navier-Stokes
solver built on them."""

from .basis import NodalBasis, cached_basis, gauss_legendre
from .grid import StaggeredGrid, PRIMAL, DUAL, CORNERS
from .opkernels import OperatorSet, kron3, levi_civita
from .fieldops import (
    DGField, divergence_tilde, divergence_sp, gradient, curl, project,
    divcurl_residual, l2_pairing,
)
from .krylov import GmresConfig, GmresError, NumericalBreakdown, \
    ConvergenceFailure, gmres
from .imex import ButcherPair, SCHEMES, tableau, imex_advance
from .cases import (
    CaseSpec, CASES, get_case, build_grid, trig_field, abc_exact, tgv_exact,
    shear_layer_init, shear_layer_velocity, sample_nodal, error_norms,
    observed_order, convergence_study,
)
from .nssolver import (
    PhysicsConfig, SolverState, StepDiagnostics, project_l2,
    init_well_prepared, solve_stream, implicit_solve, compute_dt, run,
)

__version__ = "0.1.0"

__all__ = [
    "NodalBasis", "cached_basis", "gauss_legendre",
    "StaggeredGrid", "PRIMAL", "DUAL", "CORNERS",
    "OperatorSet", "kron3", "levi_civita",
    "DGField", "divergence_tilde", "divergence_sp", "gradient", "curl",
    "project", "divcurl_residual", "l2_pairing",
    "GmresConfig", "GmresError", "NumericalBreakdown", "ConvergenceFailure",
    "gmres",
    "ButcherPair", "SCHEMES", "tableau", "imex_advance",
    "CaseSpec", "CASES", "get_case", "build_grid", "trig_field", "abc_exact",
    "tgv_exact", "shear_layer_init", "shear_layer_velocity", "sample_nodal",
    "error_norms", "observed_order", "convergence_study",
    "PhysicsConfig", "SolverState", "StepDiagnostics", "project_l2",
    "init_well_prepared", "solve_stream", "implicit_solve", "compute_dt",
    "run",
    "__version__",
]
