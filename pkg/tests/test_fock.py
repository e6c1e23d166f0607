import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tavis_qdm.evolve import evolution, evolution_one
from tavis_qdm.fock import (
    MIN_CUTOFF,
    FockRealization,
    TruncationError,
    annihilation,
    expm_hermitian,
    interior_compare,
    masked_compare,
    masked_indices,
    profile_identity_residual,
    realize,
    sector_index_sets,
)
from tavis_qdm.model import atomic_excitations, build_A, build_spin_block
from tavis_qdm.opalg import QuantumMatrix


def test_realize_identity():
    R = realize(QuantumMatrix.identity(2), 10)
    assert R.matrix.shape == (22, 22)
    assert np.array_equal(R.matrix, np.eye(22))


def test_realize_A1_upper_block_is_a():
    R = realize(build_A(1), 10)
    blk = R.block(0, 1)
    for n in range(10):
        assert blk[n, n + 1] == pytest.approx(np.sqrt(n + 1))
    assert np.allclose(blk, annihilation(10))
    assert np.allclose(R.block(1, 0), annihilation(10).T)


def test_component_major_indexing():
    R = realize(build_A(1), 5)
    assert R.index(1, 3) == 9
    assert R.levels == 6


def test_truncation_loss_recorded():
    assert realize(build_A(1), 6).truncation_loss == pytest.approx(7.0)
    assert realize(QuantumMatrix.identity(1), 6).truncation_loss == 0


def test_cutoff_limits():
    with pytest.raises(TruncationError):
        realize(build_A(1), MIN_CUTOFF - 1)
    with pytest.raises(TruncationError):
        realize(build_A(1), 8, margin=4)


def test_shape_is_validated():
    with pytest.raises(ValueError):
        FockRealization(4, 2, np.zeros((5, 5)))


def test_B1_sector_spectrum():
    cut = 40
    R = realize(build_spin_block(1).B, cut)
    # component k of B_1 carries excitation weight 1 - k
    sectors = sector_index_sets(cut, [1, 0, -1])
    for m in range(1, cut):
        idx = sectors[m]
        w = np.sort(np.linalg.eigvalsh(R.matrix[np.ix_(idx, idx)]))
        q = np.sqrt(2 * (2 * m + 1))
        assert np.allclose(w, [-q, 0, q], atol=1e-10)


def test_expm_scale_zero_is_identity():
    E = expm_hermitian(realize(build_A(2), 10), 0.0)
    assert np.allclose(E.matrix, np.eye(44), atol=1e-14)


def test_expm_rejects_non_hermitian():
    H = realize(QuantumMatrix([[build_A(1)[0, 1]]]), 8)
    with pytest.raises(ValueError):
        expm_hermitian(H, 1.0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_expm_unitary_full_matrix(n):
    E = expm_hermitian(realize(build_A(n), 20), -1.1).matrix
    assert np.abs(E @ E.conj().T - np.eye(len(E))).max() <= 1e-10


def test_expm_A1_matches_closed_form():
    cut, tg = 40, 0.7
    E = expm_hermitian(realize(build_A(1), cut), -tg)
    assert interior_compare(realize(evolution_one(tg), cut), E, 6) <= 1e-10


def test_expm_A3_matches_block_form():
    cut, tg = 40, 0.9
    E = expm_hermitian(realize(build_A(3), cut), -tg)
    assert interior_compare(realize(evolution(3, tg), cut), E, 6) <= 1e-9


def test_interior_compare_examples():
    x = realize(build_A(2), 12)
    assert interior_compare(x, x, 3) == 0
    A1 = build_A(1)
    assert interior_compare(realize(A1 @ A1, 20), realize(A1, 20) @ realize(A1, 20), 2) <= 1e-12
    with pytest.raises(TruncationError):
        interior_compare(x, x, 6)


def test_interior_compare_ignores_border():
    A1 = build_A(1)
    sym, num = realize(A1 @ A1, 10), realize(A1, 10) @ realize(A1, 10)
    # the product of truncated matrices misses N+1 at the top level
    assert np.abs(sym.matrix - num.matrix).max() > 1
    assert interior_compare(sym, num, 1) <= 1e-12


def test_two_atom_oracle_at_1_3():
    cut = 40
    E = expm_hermitian(realize(build_A(2), cut), -1.3)
    assert interior_compare(realize(evolution(2, 1.3), cut), E, 6) <= 1e-9


def test_sector_preservation():
    cut, m = 30, 6
    E = expm_hermitian(realize(build_A(3), cut), -0.8).matrix
    label = np.concatenate([atomic_excitations(3)[i] + np.arange(cut + 1) for i in range(8)])
    levels = np.tile(np.arange(cut + 1), 8)
    inside = (levels >= m) & (levels <= cut - m)
    leak = np.abs(E[np.ix_(inside, inside)] * (label[inside][:, None] != label[inside][None, :]))
    assert leak.max() <= 1e-12


def test_masked_helpers():
    idx = masked_indices(6, [0, 2], margin=1)
    assert list(idx) == [1, 2, 3, 4, 5, 9, 10, 11, 12]
    x = realize(build_A(1), 8)
    y = FockRealization(8, 2, x.matrix.copy())
    y.matrix[0, 0] = 5.0
    assert masked_compare(x, y, [1, 0]) == 0
    assert masked_compare(x, y, [0, 0]) == 5.0
    with pytest.raises(ValueError):
        masked_compare(x, y, [0])


def test_profile_identity_residual():
    I = realize(QuantumMatrix.identity(2), 6)
    assert profile_identity_residual(I, [0, 0]) == 0
    P = FockRealization(6, 2, I.matrix.copy())
    P.matrix[0, 0] = 0.0
    assert profile_identity_residual(P, [1, 0]) == 0
    assert profile_identity_residual(P, [0, 0]) == 1.0


@given(st.floats(-3, 3, allow_nan=False), st.integers(1, 3))
def test_expm_is_unitary_for_any_scale(s, n):
    E = expm_hermitian(realize(build_A(n), 8), s).matrix
    assert np.abs(E.conj().T @ E - np.eye(len(E))).max() <= 1e-10
