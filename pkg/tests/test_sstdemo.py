import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csoclosure.errors import DomainError
from csoclosure.shiftcore import (
    decompose,
    matrix_defect,
    operator_norm,
    reversal_conjugation,
    shift_matrix,
    symmetric_unitary_conjugation,
)
from csoclosure.sstdemo import (
    approximant_defect,
    conjugate_adjoint,
    grid_to_csv,
    principal_submatrix,
    read_matrix,
    residual_grid,
    sot_residual,
    sst_approximant,
    witness_conjugation,
    write_matrix,
)


def random_matrix(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def random_symmetric_unitary(rng, n):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, n))) @ Q.T


def test_principal_submatrix():
    T = np.arange(16).reshape(4, 4)
    assert np.array_equal(principal_submatrix(T, 4), T)
    assert np.array_equal(principal_submatrix(T, 1), [[0]])
    for bad in (0, 5):
        with pytest.raises(DomainError):
            principal_submatrix(T, bad)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_corner_norm_never_exceeds_norm(seed, D):
    rng = np.random.default_rng(seed)
    T = random_matrix(rng, D)
    for n in range(1, D + 1):
        A = principal_submatrix(T, n)
        assert operator_norm(A) <= operator_norm(T) + 1e-10
        assert operator_norm(sst_approximant(A)) == pytest.approx(operator_norm(A), abs=1e-10)


def test_zero_corner_gives_zero_operator():
    Tn = sst_approximant(np.zeros((3, 3)))
    assert Tn.shape == (10, 10) and not Tn.any()


def test_conjugate_adjoint_of_shift_block_under_reversal():
    w = [1, 0.5, 1]
    A = shift_matrix(w)
    c = reversal_conjugation(decompose(w))
    # for a palindromic block C A* C is A itself
    assert np.array_equal(conjugate_adjoint(A, c), A)
    assert approximant_defect(A, c) == 0


def test_conjugate_adjoint_identity_conjugation_is_transpose():
    A = np.array([[1, 2j], [3, 4]])
    assert np.array_equal(conjugate_adjoint(A), A.T)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 16))
def test_witness_conjugation_makes_approximant_symmetric(seed, n):
    rng = np.random.default_rng(seed)
    A = random_matrix(rng, n)
    c = symmetric_unitary_conjugation(random_symmetric_unitary(rng, n))
    W = witness_conjugation(n, c)
    S = W.as_matrix()
    assert np.allclose(S, S.T) and np.allclose(S @ S.conj().T, np.eye(2 * n + 4))
    assert approximant_defect(A, c) <= 1e-12 * max(1.0, operator_norm(A))


def test_witness_is_needed():
    # the plain identity conjugation does not witness symmetry of the approximant
    rng = np.random.default_rng(7)
    A = random_matrix(rng, 4)
    Tn = sst_approximant(A)
    assert matrix_defect(Tn, symmetric_unitary_conjugation(np.eye(12))) > 0.1


def test_dimension_checks():
    with pytest.raises(DomainError):
        sst_approximant(np.eye(3), dim=5)
    with pytest.raises(DomainError):
        sst_approximant(np.eye(3), symmetric_unitary_conjugation(np.eye(2)))
    with pytest.raises(DomainError):
        sst_approximant(np.ones((2, 3)))


def test_residual_of_shift_vanishes_past_subdiagonal():
    T = shift_matrix([1, 2, 3, 4, 5])
    for i in range(1, 6):
        assert sot_residual(T, i, i) == T[i, i - 1] ** 2
        for n in range(i + 1, 7):
            assert sot_residual(T, n, i) == 0
    assert sot_residual(T, 6, 3) == 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10), st.booleans())
def test_residuals_decrease_to_zero(seed, D, adjoint):
    T = random_matrix(np.random.default_rng(seed), D)
    grid = residual_grid(T, adjoint=adjoint)
    for i in range(D):
        col = grid[i:, i]
        assert np.all(np.diff(col) <= 1e-15)
        assert col[-1] == 0


def test_adjoint_residual_reads_rows():
    T = np.array([[0, 5], [0, 0]], dtype=complex)
    assert sot_residual(T, 1, 1) == 0
    assert sot_residual(T, 1, 1, adjoint=True) == 25


def test_residual_index_errors():
    T = np.eye(3)
    for n, i in [(2, 3), (4, 1), (1, 0)]:
        with pytest.raises(DomainError):
            sot_residual(T, n, i)


def test_matrix_text_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    M = random_matrix(rng, 5)
    text = write_matrix(M)
    assert text.splitlines()[0] == "5"
    assert np.array_equal(read_matrix(text), M)
    p = tmp_path / "m.txt"
    p.write_text("2\n1,0 0,1\n# comment\n2 3,-1\n")
    assert np.array_equal(read_matrix(p), [[1, 1j], [2, 3 - 1j]])
    p.write_text("2\n1 2\n")
    with pytest.raises(DomainError):
        read_matrix(p)


def test_grid_csv_layout():
    csv = grid_to_csv(residual_grid(np.ones((2, 2))))
    assert csv.splitlines() == ["n,i=1,i=2", "1,1.0,", "2,0.0,0.0"]
