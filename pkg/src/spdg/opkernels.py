"""Per-corner local operator matrices for the staggered DG discretization.

Every global operator (divergence, gradient, curl, projection) is assembled
from small dense matrices that couple one target cell to one of its 8
corner neighbors.  All of them factor into 1D pieces, built here by direct
quadrature of the sub-cell weak forms on the two half-overlaps:

    O[s] : overlap mass    integral of phi_k(xi) phi_l(xi - s/2) over the
           half-cell shared with the s-side neighbor,
    V[s] : same with the test function differentiated,
    F[s] : the interior-face term  s * phi_k((1+s)/2) phi_l(1/2),
    W[s] = F[s] - V[s] : the complete weak-derivative factor.

A divergence matrix D^{m,beta} then places W in tensor slot beta and O in
the others (times |C|/dx_beta); the gradient is G^{m,beta} = -(D^{-m,beta})^T;
the L2 projection A^m is the mass-solved all-O product.

The structure-preserving divergence needs one extra ingredient: a corner
correction K^{m,mu} such that (div - K) annihilates every discrete curl
exactly while still acting as a consistent divergence.  K is obtained once
per (degree, spacing ratio) as the minimum-norm solution of a small linear
system expressing (a) exact cancellation of all div(curl) stencil blocks and
(b) exact annihilation of polynomial fields up to degree N; see
`sp_correction`.  The solve is deterministic, local, and scale-covariant
(K scales like 1/h), so results are cached on spacing ratios.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .basis import NodalBasis, lagrange_values, lagrange_derivatives
from .grid import CORNERS

__all__ = ["levi_civita", "OperatorSet", "kron3", "dump_matrices"]

# eps[g, m, t] for 0-based indices
_EPS = np.zeros((3, 3, 3))
for _g, _m, _t in itertools.permutations(range(3)):
    _EPS[_g, _m, _t] = 0.5 * (_g - _m) * (_m - _t) * (_t - _g)


def levi_civita(gamma, mu, tau):
    """Levi-Civita symbol for 1-based indices in 1..3."""
    for a in (gamma, mu, tau):
        if a not in (1, 2, 3):
            raise ValueError(f"levi_civita arguments must be in 1..3, got {a}")
    return int(round((gamma - mu) * (mu - tau) * (tau - gamma) / 2))


def kron3(f3, f2, f1):
    """Kronecker product ordered so the first tensor slot varies fastest."""
    return np.kron(f3, np.kron(f2, f1))


def _half_overlap_factors(basis: NodalBasis):
    """1D O/V/F/W matrices for both neighbor sides s = -1, +1.

    The s-side half of the target cell is parameterized as
    xi = (s+1)/4 + chi/2 with chi the quadrature variable on [0,1]; the
    neighbor's basis is evaluated at xi - s/2.
    """
    qx, qw = basis.quad_nodes, basis.quad_weights
    O, V, F, W = {}, {}, {}, {}
    for s in (-1, 1):
        xi = (s + 1) / 4.0 + qx / 2.0
        phi_t = lagrange_values(basis.nodes, xi)            # test, target frame
        dphi_t = lagrange_derivatives(basis.nodes, xi)
        phi_n = lagrange_values(basis.nodes, xi - s / 2.0)  # trial, neighbor frame
        wq = qw / 2.0
        O[s] = (phi_t * wq[:, None]).T @ phi_n
        V[s] = (dphi_t * wq[:, None]).T @ phi_n
        face_t = lagrange_values(basis.nodes, np.array([(1 + s) / 2.0]))[0]
        face_n = lagrange_values(basis.nodes, np.array([0.5]))[0]
        F[s] = s * np.outer(face_t, face_n)
        W[s] = F[s] - V[s]
    return O, V, F, W


class OperatorSet:
    """All local matrices for one (basis degree, grid spacing) pair.

    D, G: dict[(m, beta)] -> (N+1)^3 square matrix with physical
    |C|/dx_beta factors; A: dict[m] -> projection matrix.  Dhat/Ghat are the
    mass-inverted forms (1/|C|) M^-1 D used in global applications.
    Immutable after construction.
    """

    def __init__(self, basis: NodalBasis, spacings):
        self.basis = basis
        self.spacings = tuple(float(d) for d in spacings)
        if any(d <= 0 for d in self.spacings):
            raise ValueError("spacings must be positive")
        self.volume = self.spacings[0] * self.spacings[1] * self.spacings[2]
        self.ndof = basis.ndof

        O, V, F, W = _half_overlap_factors(basis)
        self._factors = (O, V, F, W)
        m1 = basis.mass_1d()
        self.M = kron3(m1, m1, m1) * self.volume
        self.Minv = np.linalg.inv(self.M)
        minv1 = np.linalg.inv(m1)

        self.D = {}
        self.A = {}
        ohat = {s: minv1 @ O[s] for s in (-1, 1)}
        # Hatted 1D factors for sum-factorized application: the volume factor
        # in D cancels against M^-1, so Dhat[m, beta] equals
        # (1/dx_beta) * kron3 with wh[m_beta] in slot beta and oh[m_i] in the
        # other two.  Ghat uses the transposed factors of the mirrored corner
        # with a sign flip.  Applying these axis by axis keeps the number of
        # rounding contributions per output entry at O(N) instead of O(N^3),
        # which is what keeps div(curl) at the round-off floor on fine grids.
        self.oh = ohat
        self.wh = {s: minv1 @ W[s] for s in (-1, 1)}
        self.ohT = {s: minv1 @ O[s].T for s in (-1, 1)}
        self.whT = {s: minv1 @ W[s].T for s in (-1, 1)}
        for m in CORNERS:
            for beta in range(3):
                fac = [W[m[i]] if i == beta else O[m[i]] for i in range(3)]
                self.D[m, beta] = (self.volume / self.spacings[beta]) * kron3(fac[2], fac[1], fac[0])
            self.A[m] = kron3(ohat[m[2]], ohat[m[1]], ohat[m[0]])
        self.G = {}
        for m in CORNERS:
            neg = tuple(-x for x in m)
            for beta in range(3):
                self.G[m, beta] = -self.D[neg, beta].T

        self.Dhat = {k: self.Minv @ v for k, v in self.D.items()}
        self.Ghat = {k: self.Minv @ v for k, v in self.G.items()}
        self._sp_correction = None

    @property
    def degree(self):
        return self.basis.degree

    def sp_correction(self):
        """Corner correction matrices K[(m, mu)] for the SP divergence."""
        if self._sp_correction is None:
            self._sp_correction = _build_sp_correction(self)
        return self._sp_correction


# cache of solved corrections keyed by (degree, spacing ratios); the stored
# solution is for min(spacings) == 1 and rescales exactly like 1/h
_CORRECTION_CACHE = {}


def _build_sp_correction(ops: OperatorSet):
    N = ops.degree
    h0 = min(ops.spacings)
    ratios = tuple(round(d / h0, 12) for d in ops.spacings)
    key = (N, ratios)
    if key not in _CORRECTION_CACHE:
        ref = OperatorSet(ops.basis, ratios) if ops.spacings != ratios else ops
        _CORRECTION_CACHE[key] = _solve_sp_correction(ref)
    return {k: v / h0 for k, v in _CORRECTION_CACHE[key].items()}


def _solve_sp_correction(ops: OperatorSet):
    """Minimum-norm K satisfying the curl-annihilation + consistency system.

    Unknown: 24 matrices K^{m,mu} (8 corners x 3 components).  Constraints,
    assembled columnwise with one shared coefficient matrix for all output
    DoFs:

    * for every composite stencil offset s in {-1,0,1}^3 and input component
      nu, the two-hop blocks of K o curl must equal those of div o curl, so
      (div - K)(curl(u)) = 0 for every field u;
    * K applied to any polynomial vector field of total degree <= N is zero,
      which keeps div - K a consistent divergence of the same order as div.

    Solved by projecting onto the constraint set through the (rank-deficient)
    normal equations, with two refinement passes to reach round-off.  At
    N = 0 the constraints force K = 0 identically.
    """
    nd = ops.ndof
    N = ops.degree
    cidx = {m: i for i, m in enumerate(CORNERS)}
    svals = list(itertools.product((-1, 0, 1), repeat=3))
    sidx = {s: i for i, s in enumerate(svals)}
    nrows = 24 * nd

    A = np.zeros((nrows, 27 * 3 * nd))
    B = np.zeros((27 * 3 * nd, nd))
    for s in svals:
        for nu in range(3):
            col0 = (sidx[s] * 3 + nu) * nd
            rhs = np.zeros((nd, nd))
            for m in CORNERS:
                mp = tuple(2 * s[i] - m[i] for i in range(3))
                if mp not in cidx:
                    continue
                for mu in range(3):
                    coef = None
                    for g in range(3):
                        e = _EPS[g, nu, mu]
                        if e:
                            t = e * ops.Ghat[mp, g]
                            coef = t if coef is None else coef + t
                    if coef is None:
                        continue
                    row0 = (cidx[m] * 3 + mu) * nd
                    A[row0:row0 + nd, col0:col0 + nd] += coef
                    rhs += ops.Dhat[m, mu] @ coef
            B[col0:col0 + nd, :] = rhs.T

    # polynomial annihilation columns: nodal samples of x^a y^b z^c on the
    # 8 corner cells around a primal target at the origin
    nodes = ops.basis.nodes
    dx = ops.spacings
    h = min(dx)
    monos = [(a, b, c)
             for a in range(N + 1) for b in range(N + 1) for c in range(N + 1)
             if a + b + c <= N]
    pcols = []
    for mu in range(3):
        for (a, b, c) in monos:
            col = np.zeros(nrows)
            for m in CORNERS:
                xs = [((m[i] - 1) // 2 + 0.5 + nodes) * dx[i] for i in range(3)]
                vals = (xs[0][:, None, None] ** a
                        * xs[1][None, :, None] ** b
                        * xs[2][None, None, :] ** c)
                flat = np.moveaxis(np.broadcast_to(vals, (len(nodes),) * 3),
                                   (0, 1, 2), (2, 1, 0)).reshape(-1)
                row0 = (cidx[m] * 3 + mu) * nd
                col[row0:row0 + nd] = flat
            pcols.append(col / h ** (a + b + c))
    M = np.hstack([A, np.array(pcols).T])
    rhs = np.vstack([B, np.zeros((len(pcols), nd))])

    MMt = M @ M.T
    lam, Q = np.linalg.eigh(MMt)
    inv = np.where(lam > lam[-1] * 1e-13, 1.0 / np.where(lam > 0, lam, 1.0), 0.0)

    def apply_pinv(R):
        return (Q * inv) @ (Q.T @ (M @ R))

    # Iterative refinement: push the constraint residual to the round-off
    # floor of the eigendecomposition-based pseudo-inverse.  The achieved
    # residual is amplified by 1/h^2 wherever div(curl) is evaluated, so the
    # system has to be satisfied essentially to double round-off.
    Mt = M.T

    def residual(Ucur):
        return rhs - Mt @ Ucur

    U = apply_pinv(rhs)
    best, best_resid = U, float(np.abs(residual(U)).max())
    for _ in range(8):
        U = U + apply_pinv(residual(U))
        r = float(np.abs(residual(U)).max())
        if r < best_resid:
            best, best_resid = U, r
        else:
            break
    U, resid = best, best_resid
    scale = max(np.abs(B).max(), 1.0)
    if resid > 1e-10 * scale:
        raise RuntimeError(
            f"SP correction solve did not reach round-off: residual {resid:.3e}")

    K = {}
    for m in CORNERS:
        for mu in range(3):
            row0 = (cidx[m] * 3 + mu) * nd
            K[m, mu] = U[row0:row0 + nd, :].T.copy()
    return K


def dump_matrices(ops: OperatorSet, path):
    """Plain-text dump of all local matrices for cross-implementation diffs."""
    with open(path, "w") as f:
        f.write(f"degree {ops.degree} spacings {ops.spacings}\n")
        for name, table in (("D", ops.D), ("G", ops.G)):
            for (m, beta) in sorted(table):
                f.write(f"{name} m={m} beta={beta + 1}\n")
                np.savetxt(f, table[m, beta], fmt="%+.17e")
        for m in sorted(ops.A):
            f.write(f"A m={m}\n")
            np.savetxt(f, ops.A[m], fmt="%+.17e")
