"""Nodal tensor-product DG basis on the unit reference cube.

The 1D basis is the Lagrange family through Gauss-Legendre points on [0,1].
Degrees of freedom are point values at those nodes; the 3D basis and all
operator integrals are tensor products of 1D pieces.  A single fixed
(N+2)-point Gauss rule is used for every integral so that all degree-2N+3
integrands appearing in the operator construction are exact.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = ["gauss_legendre", "lagrange_values", "lagrange_derivatives", "NodalBasis"]


def gauss_legendre(n):
    """n-point Gauss-Legendre rule on [0,1].

    Nodes are found by Newton iteration on the Legendre recurrence
    (deterministic, tolerance 1e-15); weights from the standard formula
    w = 2 / ((1-x^2) P_n'(x)^2), then affinely mapped from [-1,1].
    """
    if n < 1:
        raise ValueError(f"need at least one quadrature point, got n={n}")
    k = np.arange(n)
    x = np.cos(np.pi * (k + 0.75) / (n + 0.5))  # Chebyshev-like initial guess
    for _ in range(100):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for j in range(2, n + 1):
            p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
        if n == 1:
            pn, dpn = p1, p0  # P1 = x, P1' = 1
        else:
            pn = p1
            dpn = n * (x * p1 - p0) / (x * x - 1.0)
        dx = pn / dpn
        x -= dx
        if np.abs(dx).max() < 1e-15:
            break
    # recompute derivative at the converged nodes for the weights
    p0 = np.ones_like(x)
    p1 = x.copy()
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    dpn = np.ones_like(x) if n == 1 else n * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dpn * dpn)
    order = np.argsort(x)
    x, w = x[order], w[order]
    return (x + 1.0) / 2.0, w / 2.0


def lagrange_values(nodes, xi):
    """Values phi_l(xi) of the Lagrange cardinal functions through `nodes`.

    xi may be scalar or 1D array; result shape (*xi.shape, len(nodes)).
    Evaluation anywhere on the real line is legal (the shifted bases used by
    the staggered operators sample outside [0,1]).
    """
    nodes = np.asarray(nodes)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    n = len(nodes)
    out = np.ones(xi.shape + (n,))
    for ell in range(n):
        for v in range(n):
            if v != ell:
                out[..., ell] *= (xi - nodes[v]) / (nodes[ell] - nodes[v])
    return out


def lagrange_derivatives(nodes, xi):
    """d/dxi of each Lagrange cardinal function at xi (product-rule form)."""
    nodes = np.asarray(nodes)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    n = len(nodes)
    out = np.zeros(xi.shape + (n,))
    for ell in range(n):
        denom = np.prod([nodes[ell] - nodes[v] for v in range(n) if v != ell]) if n > 1 else 1.0
        for k in range(n):
            if k == ell:
                continue
            term = np.ones_like(xi)
            for v in range(n):
                if v != ell and v != k:
                    term = term * (xi - nodes[v])
            out[..., ell] += term / denom
    return out


@dataclass(frozen=True)
class NodalBasis:
    """Degree-N nodal basis: Gauss-Legendre nodes plus the fixed quadrature.

    nodes/weights: the N+1 interpolation points (also a quadrature rule);
    quad_nodes/quad_weights: the separate (N+2)-point rule used for all
    integrals.  Flat tensor index is l1-fastest:
    flat = l1 + (N+1)*l2 + (N+1)**2*l3.
    """

    degree: int
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    quad_nodes: np.ndarray = field(init=False, repr=False)
    quad_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        x, w = gauss_legendre(self.degree + 1)
        qx, qw = gauss_legendre(self.degree + 2)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "quad_nodes", qx)
        object.__setattr__(self, "quad_weights", qw)

    @property
    def n1d(self):
        return self.degree + 1

    @property
    def ndof(self):
        """DoF count per cell, (N+1)^3."""
        return (self.degree + 1) ** 3

    def eval_basis(self, xi):
        """(values, derivatives) of the N+1 cardinal functions at scalar xi."""
        v = lagrange_values(self.nodes, xi)[0]
        d = lagrange_derivatives(self.nodes, xi)[0]
        return v, d

    def flat_index(self, l1, l2, l3):
        n = self.n1d
        return l1 + n * l2 + n * n * l3

    def tensor_index(self, flat):
        n = self.n1d
        return flat % n, (flat // n) % n, flat // (n * n)

    def mass_1d(self):
        """1D mass matrix on [0,1] via the fixed quadrature."""
        phi = lagrange_values(self.nodes, self.quad_nodes)
        return (phi * self.quad_weights[:, None]).T @ phi

    def mass_3d(self):
        """Reference-cube mass matrix (Kronecker cube of the 1D factor)."""
        m1 = self.mass_1d()
        return np.kron(m1, np.kron(m1, m1))


@lru_cache(maxsize=32)
def cached_basis(degree: int) -> NodalBasis:
    return NodalBasis(degree)
