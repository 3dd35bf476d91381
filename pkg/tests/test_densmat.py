"""Validation, indexing, partial transposition and rank/PPT tests."""

import numpy as np
import pytest

from gramsep import densmat, states
from gramsep.densmat import (
    InputError, NotHermitian, NotPSD, SizeMismatch, TraceDeviation,
    is_ppt, numeric_rank, partial_transpose, product_index, split_index,
    validate_density,
)


def test_product_index_examples():
    assert product_index(0, 0, 4) == 0
    assert product_index(1, 3, 4) == 7
    assert product_index(1, 0, 4) == 4


def test_product_index_bijective():
    rng = np.random.default_rng(0)
    for _ in range(200):
        m, n = rng.integers(2, 7), rng.integers(2, 9)
        i, j = int(rng.integers(0, m)), int(rng.integers(0, n))
        assert split_index(product_index(i, j, n), n) == (i, j)


def test_product_index_out_of_range():
    with pytest.raises(InputError):
        product_index(0, 4, 4)
    with pytest.raises(InputError):
        product_index(-1, 0, 4)


def test_validate_maximally_mixed():
    rho = validate_density(np.eye(4) / 4, 2, 2)
    assert rho.dim == 4
    assert not rho.unnormalized


def test_validate_werner():
    rho = states.werner(0.2)
    assert rho.dim_a == rho.dim_b == 2


def test_validate_tampered_werner_not_psd():
    mat = states.werner(0.2).mat.copy()
    mat[0, 3] = 2.0
    mat[3, 0] = 2.0
    with pytest.raises(NotPSD):
        validate_density(mat, 2, 2)


def test_validate_not_hermitian():
    mat = np.eye(4, dtype=complex) / 4
    mat[0, 1] = 0.2
    with pytest.raises(NotHermitian):
        validate_density(mat, 2, 2)


def test_validate_trace_and_size():
    with pytest.raises(TraceDeviation):
        validate_density(np.eye(4) / 2, 2, 2)
    with pytest.raises(SizeMismatch):
        validate_density(np.eye(5) / 5, 2, 2)
    # unnormalized flag disables the trace check
    rho = validate_density(np.eye(4) / 2, 2, 2, unnormalized=True)
    assert rho.unnormalized


def test_partial_transpose_diagonal_invariant():
    rho = validate_density(np.diag([0.4, 0.3, 0.2, 0.1]), 2, 2)
    assert np.abs(partial_transpose(rho, "A") - rho.mat).max() == 0.0


def test_partial_transpose_werner_entries_move():
    rho = states.werner(0.3)
    pt = partial_transpose(rho, "A")
    assert abs(pt[0, 3]) < 1e-15 and abs(pt[3, 0]) < 1e-15
    assert abs(pt[1, 2] - 0.15) < 1e-15 and abs(pt[2, 1] - 0.15) < 1e-15


def test_partial_transpose_involution_and_composition():
    rng = np.random.default_rng(1)
    for m, n in [(2, 2), (2, 3), (3, 4)]:
        g = rng.normal(size=(m * n, m * n)) + 1j * rng.normal(size=(m * n, m * n))
        h = g + g.conj().T
        ta = partial_transpose(h, "A", dims=(m, n))
        tb = partial_transpose(h, "B", dims=(m, n))
        assert np.abs(partial_transpose(ta, "A", dims=(m, n)) - h).max() < 1e-15
        assert np.abs(partial_transpose(tb, "B", dims=(m, n)) - h).max() < 1e-15
        # T_A after T_B is the full transpose
        full = partial_transpose(ta, "B", dims=(m, n))
        assert np.abs(full - h.T).max() < 1e-15
        # entry permutation: trace, Hermiticity and Frobenius norm survive
        assert abs(np.trace(ta) - np.trace(h)) < 1e-12
        assert densmat.hermitian_deviation(ta) < 1e-15
        assert abs(np.linalg.norm(ta) - np.linalg.norm(h)) < 1e-12


def test_partial_transpose_explicit_permutation():
    mat = np.arange(16, dtype=complex).reshape(4, 4)
    expected = np.array([
        [0, 1, 8, 9],
        [4, 5, 12, 13],
        [2, 3, 10, 11],
        [6, 7, 14, 15],
    ])
    assert np.abs(partial_transpose(mat, "A", dims=(2, 2)) - expected).max() == 0


def test_numeric_rank_identity_and_werner():
    assert numeric_rank(np.eye(4) / 4).rank == 4
    assert numeric_rank(states.werner(1.0).mat).rank == 1
    assert numeric_rank(states.horodecki97(0.5).mat).rank == 5


def test_numeric_rank_counts_negative_eigenvalues():
    assert numeric_rank(np.diag([1.0, -0.5, 0.0, 0.0])).rank == 2


def test_numeric_rank_unitary_invariance():
    rng = np.random.default_rng(2)
    for _ in range(10):
        h = np.diag(rng.uniform(0.1, 1.0, size=6))
        h[4, 4] = h[5, 5] = 0.0
        u = states.random_unitary(6, rng)
        assert numeric_rank(u @ h @ u.conj().T, rel_tol=1e-9).rank == 4


def test_is_ppt_werner():
    ok, mn = is_ppt(states.werner(0.2))
    assert ok and abs(mn - 0.1) < 1e-12
    ok, mn = is_ppt(states.werner(0.5))
    assert not ok and abs(mn + 0.125) < 1e-12
    ok, mn = is_ppt(validate_density(np.eye(4) / 4, 2, 2))
    assert ok and abs(mn - 0.25) < 1e-12


def test_is_ppt_true_for_random_separable():
    for seed in range(25):
        rho, _ = states.random_separable(2, 3, 4, seed=seed)
        assert is_ppt(rho)[0]


def test_eigensolver_contract():
    """Backward error of the Hermitian eigensolver on random 8x8 inputs."""
    rng = np.random.default_rng(3)
    for _ in range(20):
        g = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        h = (g + g.conj().T) / 2
        evals, evecs = np.linalg.eigh(h)
        assert np.linalg.norm(h @ evecs - evecs * evals) <= 1e-10 * np.linalg.norm(h)


def test_state_json_round_trip():
    rho = states.horodecki97(0.7)
    again = densmat.state_from_json_dict(densmat.state_to_json_dict(rho))
    assert np.abs(again.mat - rho.mat).max() < 1e-15
    assert (again.dim_a, again.dim_b) == (2, 4)


def test_state_json_rejects_non_square():
    payload = {"m": 2, "n": 2, "data": [[[1.0, 0.0]] * 3] * 4}
    with pytest.raises(InputError):
        densmat.state_from_json_dict(payload)
