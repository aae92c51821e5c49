import numpy as np
import pytest

from spdg.krylov import ConvergenceFailure, GmresConfig, NumericalBreakdown, gmres


def test_config_validation():
    with pytest.raises(ValueError):
        GmresConfig(tolerance=0.0)
    with pytest.raises(ValueError):
        GmresConfig(tolerance=1e-8, restart=0)
    with pytest.raises(ValueError):
        GmresConfig(tolerance=1e-8, stop_on="energy")
    cfg = GmresConfig(tolerance=1e-8)
    assert cfg.restart == 30
    assert cfg.max_iterations == 1000


def test_requires_config():
    with pytest.raises(ValueError):
        gmres(lambda x: x, np.ones(3))


def test_identity_converges_immediately():
    rhs = np.array([1.0, -2.0, 3.0])
    x, iters, res = gmres(lambda v: v, rhs, cfg=GmresConfig(tolerance=1e-12))
    assert np.allclose(x, rhs, atol=1e-12)
    assert iters <= 1
    assert res <= 1e-12


def test_scaled_identity():
    rhs = np.array([2.0, 4.0, -6.0])
    x, iters, res = gmres(lambda v: 2.0 * v, rhs, cfg=GmresConfig(tolerance=1e-12))
    assert np.allclose(x, rhs / 2.0, atol=1e-12)
    assert iters <= 1


def test_exact_initial_guess_returns_zero_iterations():
    rng = np.random.default_rng(0)
    A = np.eye(10) + 0.1 * rng.standard_normal((10, 10))
    xstar = rng.standard_normal(10)
    rhs = A @ xstar
    x, iters, res = gmres(lambda v: A @ v, rhs, x0=xstar,
                          cfg=GmresConfig(tolerance=1e-10))
    assert iters == 0
    assert np.allclose(x, xstar)


def test_dense_system_against_direct_solve():
    """50x50 well-conditioned dense system; the absolute residual stopping
    criterion must hold on the returned iterate."""
    rng = np.random.default_rng(1234)
    A = np.eye(50) * 4.0 + rng.standard_normal((50, 50)) * 0.3
    xstar = rng.standard_normal(50)
    rhs = A @ xstar
    tol = 1e-8
    x, iters, res = gmres(lambda v: A @ v, rhs, cfg=GmresConfig(tolerance=tol))
    assert np.linalg.norm(rhs - A @ x) <= tol
    assert np.abs(x - np.linalg.solve(A, rhs)).max() < 1e-8
    assert 0 < iters <= 50


def test_spd_system_with_restart():
    rng = np.random.default_rng(7)
    B = rng.standard_normal((40, 40))
    A = B @ B.T + 40.0 * np.eye(40)
    rhs = rng.standard_normal(40)
    cfg = GmresConfig(tolerance=1e-9, restart=5, max_iterations=500)
    x, iters, res = gmres(lambda v: A @ v, rhs, cfg=cfg)
    assert np.linalg.norm(rhs - A @ x) <= 1e-9
    assert iters > 5  # actually exercised a restart cycle


def test_matrix_free_operator():
    # tridiagonal Laplacian-like operator defined only through its action
    n = 30

    def apply(v):
        out = 2.0 * v
        out[:-1] -= v[1:]
        out[1:] -= v[:-1]
        return out + 0.5 * v

    rng = np.random.default_rng(2)
    rhs = rng.standard_normal(n)
    x, iters, res = gmres(apply, rhs, cfg=GmresConfig(tolerance=1e-10))
    assert np.linalg.norm(rhs - apply(x)) <= 1e-10


def test_residual_log_is_monotone_within_cycle():
    rng = np.random.default_rng(3)
    A = np.eye(20) * 3.0 + 0.2 * rng.standard_normal((20, 20))
    rhs = rng.standard_normal(20)
    log = []
    gmres(lambda v: A @ v, rhs, cfg=GmresConfig(tolerance=1e-10),
          residual_log=log.append)
    assert len(log) >= 1
    assert all(b <= a * (1 + 1e-12) for a, b in zip(log, log[1:]))


def test_convergence_failure_carries_best_iterate():
    rng = np.random.default_rng(4)
    A = np.eye(25) + 0.5 * rng.standard_normal((25, 25))
    rhs = rng.standard_normal(25)
    cfg = GmresConfig(tolerance=1e-14, restart=4, max_iterations=6)
    with pytest.raises(ConvergenceFailure) as exc:
        gmres(lambda v: A @ v, rhs, cfg=cfg)
    err = exc.value
    assert err.iterations == 6
    assert err.best.shape == rhs.shape
    # the carried residual describes the carried iterate
    assert abs(np.linalg.norm(rhs - A @ err.best) - err.residual) < 1e-8
    # and it improved on the zero initial guess
    assert err.residual < np.linalg.norm(rhs)


def test_non_finite_operator_raises_breakdown():
    rhs = np.ones(4)

    def bad(v):
        out = v.copy()
        out[0] = np.nan
        return out

    with pytest.raises(NumericalBreakdown):
        gmres(bad, rhs, cfg=GmresConfig(tolerance=1e-10))


def test_zero_rhs_returns_zero():
    x, iters, res = gmres(lambda v: 2 * v, np.zeros(5),
                          cfg=GmresConfig(tolerance=1e-12))
    assert np.all(x == 0.0)
    assert iters == 0


def test_increment_stopping_mode():
    rng = np.random.default_rng(5)
    A = np.eye(15) * 2.0 + 0.1 * rng.standard_normal((15, 15))
    rhs = rng.standard_normal(15)
    cfg = GmresConfig(tolerance=1e-10, stop_on="increment")
    x, iters, res = gmres(lambda v: A @ v, rhs, cfg=cfg)
    assert np.abs(x - np.linalg.solve(A, rhs)).max() < 1e-8
