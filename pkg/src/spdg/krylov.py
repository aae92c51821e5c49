"""Matrix-free restarted GMRES.

Works on flat numpy vectors; the linear operator is any callable v -> A(v).
Modified Gram-Schmidt with a conditional reorthogonalization pass, Givens
rotations for the least-squares update, absolute residual-norm stopping.
An iterate-difference stopping mode is available for experiments that need
the step-increment criterion instead.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["GmresConfig", "GmresError", "NumericalBreakdown", "ConvergenceFailure", "gmres"]


@dataclass
class GmresConfig:
    tolerance: float
    restart: int = 30
    max_iterations: int = 1000
    stop_on: str = "residual"  # or "increment"

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.restart < 1:
            raise ValueError("restart must be >= 1")
        if self.stop_on not in ("residual", "increment"):
            raise ValueError(f"unknown stopping mode {self.stop_on!r}")


class GmresError(Exception):
    pass


class NumericalBreakdown(GmresError):
    """Non-finite values appeared during the iteration."""


class ConvergenceFailure(GmresError):
    """Iteration budget exhausted; carries the best iterate found."""

    def __init__(self, message, best, residual, iterations):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


def gmres(apply, rhs, x0=None, cfg: GmresConfig = None, residual_log=None):
    """Solve apply(x) = rhs; returns (x, iterations, final_residual).

    x0 equal to the exact solution returns immediately with 0 iterations.
    residual_log, if given, is called with the residual norm once per
    inner iteration.
    """
    if cfg is None:
        raise ValueError("GmresConfig required")
    rhs = np.asarray(rhs, dtype=float)
    if not np.all(np.isfinite(rhs)):
        raise NumericalBreakdown("non-finite right-hand side")
    n = rhs.size
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)

    total_iters = 0
    r = rhs - apply(x)
    rho = float(np.linalg.norm(r))
    if not np.isfinite(rho):
        raise NumericalBreakdown("non-finite initial residual")
    if rho <= cfg.tolerance:
        return x, 0, rho

    m = cfg.restart
    while total_iters < cfg.max_iterations:
        # Arnoldi process with Givens-rotated Hessenberg least squares
        V = np.zeros((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        V[0] = r / rho
        g[0] = rho
        k = 0
        x_prev = x.copy()
        converged = False
        while k < m and total_iters < cfg.max_iterations:
            # copy: the operator may hand back its input (or a view of it),
            # and the in-place orthogonalization below must not touch V
            w = np.array(apply(V[k]), dtype=float)
            if not np.all(np.isfinite(w)):
                raise NumericalBreakdown("non-finite operator output")
            norm_before = float(np.linalg.norm(w))
            for j in range(k + 1):
                H[j, k] = V[j] @ w
                w -= H[j, k] * V[j]
            # reorthogonalize when cancellation ate the vector
            if float(np.linalg.norm(w)) < 1e-10 * max(norm_before, 1.0):
                for j in range(k + 1):
                    h2 = V[j] @ w
                    H[j, k] += h2
                    w -= h2 * V[j]
            H[k + 1, k] = float(np.linalg.norm(w))
            if H[k + 1, k] > 0:
                V[k + 1] = w / H[k + 1, k]
            # apply accumulated rotations, then the new one
            for j in range(k):
                t = cs[j] * H[j, k] + sn[j] * H[j + 1, k]
                H[j + 1, k] = -sn[j] * H[j, k] + cs[j] * H[j + 1, k]
                H[j, k] = t
            denom = np.hypot(H[k, k], H[k + 1, k])
            if denom == 0.0:
                raise NumericalBreakdown("Hessenberg breakdown")
            cs[k], sn[k] = H[k, k] / denom, H[k + 1, k] / denom
            H[k, k] = denom
            H[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            rho = abs(g[k + 1])
            total_iters += 1
            k += 1
            if residual_log is not None:
                residual_log(rho)
            if cfg.stop_on == "residual":
                if rho <= cfg.tolerance:
                    converged = True
                    break
            else:
                y = np.linalg.solve(H[:k, :k], g[:k])
                x_now = x + V[:k].T @ y
                if float(np.linalg.norm(x_now - x_prev)) <= cfg.tolerance:
                    converged = True
                    break
                x_prev = x_now
        if k > 0:
            y = np.linalg.solve(H[:k, :k], g[:k])
            x = x + V[:k].T @ y
        if not np.all(np.isfinite(x)):
            raise NumericalBreakdown("non-finite iterate")
        r = rhs - apply(x)
        rho_true = float(np.linalg.norm(r))
        if converged or rho_true <= cfg.tolerance:
            return x, total_iters, rho_true
        rho = rho_true

    raise ConvergenceFailure(
        f"GMRES did not converge in {cfg.max_iterations} iterations "
        f"(residual {rho:.3e}, tolerance {cfg.tolerance:.3e})",
        best=x, residual=rho, iterations=total_iters)
