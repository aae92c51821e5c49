import itertools

import numpy as np
import pytest

from spdg.basis import cached_basis
from spdg.grid import CORNERS
from spdg.opkernels import OperatorSet, dump_matrices, kron3, levi_civita


def test_levi_civita_table():
    assert levi_civita(1, 2, 3) == 1
    assert levi_civita(2, 3, 1) == 1
    assert levi_civita(3, 1, 2) == 1
    assert levi_civita(3, 2, 1) == -1
    assert levi_civita(1, 3, 2) == -1
    assert levi_civita(2, 1, 3) == -1
    for a, b in itertools.product(range(1, 4), repeat=2):
        assert levi_civita(a, a, b) == 0
        assert levi_civita(a, b, b) == 0
    with pytest.raises(ValueError):
        levi_civita(0, 1, 2)


def test_kron3_first_slot_varies_fastest():
    rng = np.random.default_rng(3)
    A, B, C = (rng.standard_normal((2, 2)) for _ in range(3))
    K = kron3(C, B, A)
    assert K.shape == (8, 8)
    for i1, i2, i3 in itertools.product(range(2), repeat=3):
        for j1, j2, j3 in itertools.product(range(2), repeat=3):
            row = i1 + 2 * i2 + 4 * i3
            col = j1 + 2 * j2 + 4 * j3
            want = A[i1, j1] * B[i2, j2] * C[i3, j3]
            assert abs(K[row, col] - want) < 1e-14


def test_hatted_factors_reproduce_polynomials_1d():
    """The two 1D corner factors hold the whole operator accuracy: applied
    to a global polynomial sampled on the two neighbor intervals [-1/2,1/2]
    and [1/2,3/2], `oh` must return its values and `wh` its derivative at
    the nodes of the unit target cell."""
    rng = np.random.default_rng(5)
    for N in range(5):
        basis = cached_basis(N)
        ops = OperatorSet(basis, (1.0, 1.0, 1.0))
        p = np.polynomial.Polynomial(rng.standard_normal(N + 1))
        left = p(basis.nodes - 0.5)
        right = p(basis.nodes + 0.5)
        interp = ops.oh[-1] @ left + ops.oh[1] @ right
        deriv = ops.wh[-1] @ left + ops.wh[1] @ right
        assert np.abs(interp - p(basis.nodes)).max() < 1e-13
        assert np.abs(deriv - p.deriv()(basis.nodes)).max() < 1e-12


def test_lowest_order_factors_are_face_averages():
    # single constant DoF: interpolation weight 1/2 per side, derivative +-1
    ops = OperatorSet(cached_basis(0), (1.0, 1.0, 1.0))
    for s in (-1, 1):
        assert np.allclose(ops.oh[s], [[0.5]])
        assert np.allclose(ops.wh[s], [[float(s)]])
        assert np.allclose(ops.ohT[s], [[0.5]])
        assert np.allclose(ops.whT[s], [[float(s)]])


def test_mass_matrix_carries_cell_volume():
    basis = cached_basis(1)
    ops = OperatorSet(basis, (0.5, 0.25, 0.125))
    assert abs(ops.volume - 0.5 * 0.25 * 0.125) < 1e-16
    assert np.allclose(ops.M, basis.mass_3d() * ops.volume)
    assert np.allclose(ops.Minv @ ops.M, np.eye(ops.ndof), atol=1e-12)


def test_divergence_blocks_kill_constants_and_projection_preserves_them():
    basis = cached_basis(2)
    ops = OperatorSet(basis, (0.3, 0.3, 0.3))
    one = np.ones(ops.ndof)
    for beta in range(3):
        total = sum(ops.Dhat[m, beta] @ one for m in CORNERS)
        assert np.abs(total).max() < 1e-12
    total = sum(ops.A[m] @ one for m in CORNERS)
    assert np.abs(total - one).max() < 1e-12


def test_gradient_blocks_are_negative_transposed_divergence():
    basis = cached_basis(1)
    ops = OperatorSet(basis, (1.0, 1.0, 1.0))
    for m in CORNERS:
        neg = tuple(-x for x in m)
        for beta in range(3):
            assert np.array_equal(ops.G[m, beta], -ops.D[neg, beta].T)


def test_operator_scaling_with_spacing():
    """D carries |C|/dx_beta, the mass-inverted form 1/dx_beta, and the
    corner correction 1/min(dx); halving the grid doubles them."""
    basis = cached_basis(1)
    a = OperatorSet(basis, (1.0, 1.0, 1.0))
    b = OperatorSet(basis, (0.5, 0.5, 0.5))
    m = (1, -1, 1)
    assert np.allclose(b.D[m, 0], 0.25 * a.D[m, 0], atol=1e-15)
    assert np.allclose(b.Dhat[m, 0], 2.0 * a.Dhat[m, 0], atol=1e-12)
    assert np.allclose(b.A[m], a.A[m], atol=1e-15)
    Ka, Kb = a.sp_correction(), b.sp_correction()
    assert sorted(Ka) == sorted(Kb)
    for k in Ka:
        assert np.allclose(Kb[k], 2.0 * Ka[k], rtol=0, atol=1e-18)


def test_anisotropic_spacing_scales_each_axis():
    basis = cached_basis(1)
    iso = OperatorSet(basis, (1.0, 1.0, 1.0))
    an = OperatorSet(basis, (2.0, 1.0, 1.0))
    m = (1, 1, 1)
    # volume doubles; dx_0 doubles, dx_1 does not
    assert np.allclose(an.D[m, 0], iso.D[m, 0], atol=1e-15)
    assert np.allclose(an.D[m, 1], 2.0 * iso.D[m, 1], atol=1e-15)
    assert np.allclose(an.Dhat[m, 0], 0.5 * iso.Dhat[m, 0], atol=1e-13)
    assert np.allclose(an.Dhat[m, 1], iso.Dhat[m, 1], atol=1e-13)


def test_correction_is_zero_at_lowest_order():
    K = OperatorSet(cached_basis(0), (0.7, 0.7, 0.7)).sp_correction()
    assert len(K) == 24
    assert max(np.abs(v).max() for v in K.values()) == 0.0


def test_correction_has_one_matrix_per_corner_and_axis():
    ops = OperatorSet(cached_basis(1), (1.0, 1.0, 1.0))
    K = ops.sp_correction()
    assert sorted(K) == sorted((m, mu) for m in CORNERS for mu in range(3))
    for v in K.values():
        assert v.shape == (ops.ndof, ops.ndof)
    # repeated access hands back the same solve
    assert ops.sp_correction() is ops.sp_correction()


def test_spacings_must_be_positive():
    with pytest.raises(ValueError):
        OperatorSet(cached_basis(1), (1.0, -1.0, 1.0))


def test_dump_matrices_layout(tmp_path):
    ops = OperatorSet(cached_basis(0), (1.0, 1.0, 1.0))
    path = tmp_path / "mats.txt"
    dump_matrices(ops, path)
    text = path.read_text()
    assert text.startswith("degree 0 spacings (1.0, 1.0, 1.0)")
    assert text.count("D m=") == 24
    assert text.count("G m=") == 24
    assert text.count("A m=") == 8
    # N=0 entries are readable scalar stencil weights
    first = [ln for ln in text.splitlines() if ln.startswith("D m=")][0]
    assert "beta=1" in first
