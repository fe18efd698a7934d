import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csoclosure.csofit import (
    defect,
    fit,
    hermitian_for,
    hermitian_from_params,
    objective,
    params_from_hermitian,
    symmetric_unitary,
)
from csoclosure.errors import DomainError
from csoclosure.shiftcore import shift_matrix

J3 = np.fliplr(np.eye(3))

# empirical floor for the (1, 1/2) block over 50 restarts, seed 0
NONPALINDROMIC_FLOOR = 0.5


def palindromic_block(n):
    w = [1 / (1 + min(k, n - 2 - k)) for k in range(n - 1)]
    return shift_matrix(w)


def random_unitary(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def test_defect_examples():
    T = np.array([[1, 2j], [2j, 3]])
    assert defect(T, np.eye(2)) == 0
    assert defect(shift_matrix([1, 1]), J3) == 0
    assert defect(shift_matrix([1, 0.5]), J3) == pytest.approx(0.5, abs=1e-12)


def test_defect_rejects_bad_s():
    with pytest.raises(DomainError):
        defect(np.eye(2), np.array([[0, 1], [-1, 0]]))
    with pytest.raises(DomainError):
        defect(np.eye(2), 2 * np.eye(2))
    with pytest.raises(DomainError):
        defect(np.eye(3), np.eye(2))


def test_parameter_layout_round_trip():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(16)
    H = hermitian_from_params(x, 4)
    assert np.allclose(H, H.conj().T)
    assert np.allclose(params_from_hermitian(H), x)


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_parametrisation_gives_symmetric_unitaries(seed, n):
    rng = np.random.default_rng(seed)
    S = symmetric_unitary(hermitian_from_params(rng.uniform(-np.pi, np.pi, n * n), n))
    assert np.linalg.norm(S - S.T, 2) <= 1e-12
    assert np.linalg.norm(S @ S.conj().T - np.eye(n), 2) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_hermitian_for_inverts_the_parametrisation(seed, n):
    rng = np.random.default_rng(seed)
    S = symmetric_unitary(hermitian_from_params(rng.uniform(-2, 2, n * n), n))
    assert np.allclose(symmetric_unitary(hermitian_for(S)), S, atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_gradient_matches_central_differences(n):
    rng = np.random.default_rng(n)
    T = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    x = rng.uniform(-2, 2, n * n)
    _, g = objective(x, T)
    h = 1e-6
    fd = np.array([
        (objective(x + h * e, T)[0] - objective(x - h * e, T)[0]) / (2 * h) for e in np.eye(n * n)
    ])
    assert np.max(np.abs(fd - g)) <= 1e-5 * max(1.0, np.max(np.abs(g)))


@pytest.mark.parametrize("n", range(3, 9))
def test_warm_start_solves_palindromic_blocks(n):
    T = palindromic_block(n)
    S0 = symmetric_unitary(hermitian_for(np.fliplr(np.eye(n))))
    assert defect(T, S0) < 1e-12
    res = fit(T, restarts=5)
    assert res.residual < 1e-8 and res.converged
    assert res.restarts_used == 1


def test_one_by_one_is_trivially_symmetric():
    res = fit(np.array([[2 - 1j]]))
    assert res.residual == 0
    assert abs(abs(res.best_S[0, 0]) - 1) < 1e-12


def test_nonpalindromic_block_floor():
    res = fit(shift_matrix([1, 0.5]), restarts=50, seed=0)
    assert res.restarts_used == 51
    assert res.residual == pytest.approx(NONPALINDROMIC_FLOOR, abs=1e-6)
    assert res.residual == pytest.approx(defect(shift_matrix([1, 0.5]), res.best_S), abs=0)


def test_fit_is_deterministic():
    T = shift_matrix([1, 0.5, 0.25])
    a, b = fit(T, restarts=3, seed=11), fit(T, restarts=3, seed=11)
    assert a.residual == b.residual and np.array_equal(a.best_S, b.best_S)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    U = random_unitary(rng, 3)
    for T in (shift_matrix([1, 0.5]).astype(complex), (lambda A: A + A.T)(rng.standard_normal((3, 3)) + 0j)):
        r1 = fit(T, restarts=30, seed=seed).residual
        r2 = fit(U @ T @ U.conj().T, restarts=30, seed=seed).residual
        assert r1 == pytest.approx(r2, abs=1e-6)


def test_fit_rejects_oversized_input():
    with pytest.raises(DomainError):
        fit(np.eye(65))
    with pytest.raises(DomainError):
        fit(np.ones((2, 3)))
