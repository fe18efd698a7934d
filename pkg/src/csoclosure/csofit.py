"""Numerical search for a conjugation making a small matrix complex symmetric.

Conjugations are ``C = S o conj`` with ``S`` a symmetric unitary, reached as
``S = W W^T`` with ``W = exp(iH)`` for a Hermitian ``H``; this turns the
search into an unconstrained problem over ``n^2`` real parameters.  The
optimizer works on the smooth ``||T S - S T^T||_F^2`` with an exact adjoint
gradient; the reported residual is re-evaluated in operator norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError
from .shiftcore import SYMMETRY_TOL, operator_norm

__all__ = [
    "FitResult",
    "hermitian_from_params",
    "params_from_hermitian",
    "symmetric_unitary",
    "hermitian_for",
    "defect",
    "objective",
    "fit",
    "MAX_DIM",
]

MAX_DIM = 64


def _square(T) -> np.ndarray:
    T = np.asarray(T, dtype=complex)
    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] < 1:
        raise DomainError(f"expected a non-empty square matrix, got shape {T.shape}")
    return T


# parameter layout: n diagonal entries, then real parts and imaginary parts
# of the strict upper triangle in row-major order


def hermitian_from_params(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n * n,):
        raise DomainError(f"expected {n * n} parameters, got {x.shape}")
    iu = np.triu_indices(n, 1)
    m = len(iu[0])
    H = np.diag(x[:n]).astype(complex)
    H[iu] = x[n : n + m] + 1j * x[n + m :]
    H[(iu[1], iu[0])] = np.conj(H[iu])
    return H


def params_from_hermitian(H) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    iu = np.triu_indices(H.shape[0], 1)
    return np.concatenate([np.real(np.diag(H)), H[iu].real, H[iu].imag])


def _exp_i(H):
    lam, V = np.linalg.eigh(H)
    W = (V * np.exp(1j * lam)) @ V.conj().T
    return W, lam, V


def symmetric_unitary(H) -> np.ndarray:
    """``W W^T`` for ``W = exp(iH)``; symmetrised to remove rounding asymmetry."""
    W, _, _ = _exp_i(np.asarray(H, dtype=complex))
    S = W @ W.T
    return (S + S.T) / 2


def hermitian_for(S) -> np.ndarray:
    """A Hermitian ``H`` with ``symmetric_unitary(H) == S``.

    Real and imaginary parts of a symmetric unitary commute, so one real
    orthogonal ``Q`` diagonalises both: ``S = Q diag(e^{i theta}) Q^T``, and
    ``H = Q diag(theta / 2) Q^T`` works.
    """
    S = _square(S)
    A, B = S.real, S.imag
    # a generic combination separates the joint eigenspaces
    _, Q = np.linalg.eigh(A + np.sqrt(2) * B)
    theta = np.angle(np.diag(Q.T @ S @ Q))
    H = (Q * (theta / 2)) @ Q.T
    if np.linalg.norm(symmetric_unitary(H) - S, 2) > 1e-9:
        raise DomainError("S is not a symmetric unitary")
    return H.astype(complex)


def _check_s(S) -> np.ndarray:
    S = _square(S)
    n = S.shape[0]
    if np.linalg.norm(S - S.T, 2) > SYMMETRY_TOL:
        raise DomainError("S is not symmetric")
    if np.linalg.norm(S @ S.conj().T - np.eye(n), 2) > SYMMETRY_TOL:
        raise DomainError("S is not unitary")
    return S


def defect(T, S) -> float:
    """``||T S - S T^T||`` in operator norm, i.e. ``||T - C T* C||`` for ``C = S o conj``."""
    T = _square(T)
    S = _check_s(S)
    if S.shape != T.shape:
        raise DomainError(f"S has shape {S.shape}, T has {T.shape}")
    return operator_norm(T @ S - S @ T.T)


def _divided_differences(lam):
    # (e^{i a} - e^{i b}) / (a - b) = i e^{i(a+b)/2} sinc((a-b)/2)
    a, b = lam[:, None], lam[None, :]
    return 1j * np.exp(1j * (a + b) / 2) * np.sinc((a - b) / (2 * np.pi))


def objective(x, T):
    """``||T S - S T^T||_F^2`` and its gradient in parameter space."""
    n = T.shape[0]
    H = hermitian_from_params(x, n)
    W, lam, V = _exp_i(H)
    S = W @ W.T
    R = T @ S - S @ T.T
    f = float(np.vdot(R, R).real)
    # back-propagate df = 2 Re <G, d.> through R, S = W W^T and W = exp(iH)
    G_S = T.conj().T @ R - R @ T.conj()
    G_W = (G_S + G_S.T) @ W.conj()
    Gamma = _divided_differences(lam)
    G_H = V @ (np.conj(Gamma) * (V.conj().T @ G_W @ V)) @ V.conj().T
    iu = np.triu_indices(n, 1)
    g_diag = 2 * np.real(np.diag(G_H))
    g_re = 2 * np.real(G_H[iu] + G_H[(iu[1], iu[0])])
    g_im = 2 * np.real(1j * np.conj(G_H[iu]) - 1j * np.conj(G_H[(iu[1], iu[0])]))
    return f, np.concatenate([g_diag, g_re, g_im])


@dataclass
class FitResult:
    best_S: np.ndarray
    residual: float
    restarts_used: int
    converged: bool
    best_restart: int = 0

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "best_restart": self.best_restart,
            "S": [[[float(z.real), float(z.imag)] for z in row] for row in self.best_S],
        }


def _anti_diagonal(n: int) -> np.ndarray:
    return np.fliplr(np.eye(n)).astype(complex)


def fit(
    T,
    restarts: int = 20,
    max_iters: int = 500,
    tol: float = 1e-10,
    seed: Optional[int] = 0,
) -> FitResult:
    """Multi-start minimisation of the defect over symmetric unitaries.

    Run 0 starts from the anti-diagonal identity (the reversal conjugation);
    runs ``1..restarts`` start from random Hermitian parameters.  The search
    stops early once a residual ``<= tol`` is reached.  Ties go to the
    lowest run index.
    """
    T = _square(T)
    n = T.shape[0]
    if n > MAX_DIM:
        raise DomainError(f"dimension {n} exceeds the desk-scale limit {MAX_DIM}")
    if restarts < 0 or max_iters < 0:
        raise DomainError("restarts and max_iters must be nonnegative")
    rng = np.random.default_rng(seed)
    starts = [params_from_hermitian(hermitian_for(_anti_diagonal(n)))]
    best: Optional[FitResult] = None
    run = 0
    while run <= restarts:
        if run >= len(starts):
            starts.append(rng.uniform(-np.pi, np.pi, n * n))
        x0 = starts[run]
        res = minimize(
            objective,
            x0,
            args=(T,),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": max_iters, "ftol": 1e-30, "gtol": 1e-14},
        )
        x = res.x if res.fun <= objective(x0, T)[0] else x0
        S = symmetric_unitary(hermitian_from_params(x, n))
        r = defect(T, S)
        if best is None or r < best.residual:
            best = FitResult(S, r, run + 1, bool(res.success) or r <= tol, run)
        run += 1
        if best.residual <= tol:
            break
    best.restarts_used = run
    return best
