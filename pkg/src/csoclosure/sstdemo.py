"""Strong-* approximation of a matrix by complex symmetric ones.

For a dense ``D x D`` matrix ``T`` and ``n <= D``, the approximant is

    T_n = A_n (+) C A_n* C (+) 0

where ``A_n`` is the upper-left ``n x n`` corner and ``C = S o conj`` a
conjugation on ``C^n``.  ``T_n`` is complex symmetric: the conjugation that
swaps the two ``n``-blocks (each through ``S``) and conjugates the zero block
is built explicitly by :func:`witness_conjugation`, so the symmetry is
checked rather than assumed.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DomainError
from .shiftcore import ConjugationSpec, matrix_defect, symmetric_unitary_conjugation

__all__ = [
    "principal_submatrix",
    "conjugate_adjoint",
    "sst_approximant",
    "witness_conjugation",
    "approximant_defect",
    "sot_residual",
    "residual_grid",
    "read_matrix",
    "write_matrix",
    "grid_to_csv",
]


def _square(T) -> np.ndarray:
    T = np.asarray(T, dtype=complex)
    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] < 1:
        raise DomainError(f"expected a non-empty square matrix, got shape {T.shape}")
    return T


def principal_submatrix(T, n: int) -> np.ndarray:
    T = _square(T)
    if not 1 <= n <= T.shape[0]:
        raise DomainError(f"n must lie in [1, {T.shape[0]}], got {n}")
    return T[:n, :n].copy()


def _conj_matrix(c: Optional[ConjugationSpec], n: int) -> np.ndarray:
    if c is None:
        return np.eye(n)
    if c.dimension != n:
        raise DomainError(f"conjugation has dimension {c.dimension}, block has {n}")
    return c.as_matrix()


def conjugate_adjoint(A, c: Optional[ConjugationSpec] = None) -> np.ndarray:
    """Matrix of ``C A* C`` for ``C = S o conj``, i.e. ``S A^T conj(S)``."""
    A = _square(A)
    S = _conj_matrix(c, A.shape[0])
    return S @ A.T @ np.conj(S)


def sst_approximant(A, c: Optional[ConjugationSpec] = None, dim: Optional[int] = None) -> np.ndarray:
    """``A (+) C A* C (+) 0`` padded to ``dim`` (default ``2n + 4``)."""
    A = _square(A)
    n = A.shape[0]
    dim = 2 * n + 4 if dim is None else dim
    if dim < 2 * n:
        raise DomainError(f"ambient dimension {dim} is smaller than 2n = {2 * n}")
    out = np.zeros((dim, dim), dtype=complex)
    out[:n, :n] = A
    out[n : 2 * n, n : 2 * n] = conjugate_adjoint(A, c)
    return out


def witness_conjugation(n: int, c: Optional[ConjugationSpec] = None, dim: Optional[int] = None) -> ConjugationSpec:
    """``[[0, S, 0], [S, 0, 0], [0, 0, I]]``: swaps the two blocks through ``S``."""
    S = _conj_matrix(c, n)
    dim = 2 * n + 4 if dim is None else dim
    if dim < 2 * n:
        raise DomainError(f"ambient dimension {dim} is smaller than 2n = {2 * n}")
    W = np.zeros((dim, dim), dtype=complex)
    W[:n, n : 2 * n] = S
    W[n : 2 * n, :n] = S
    W[2 * n :, 2 * n :] = np.eye(dim - 2 * n)
    return symmetric_unitary_conjugation(W)


def approximant_defect(A, c: Optional[ConjugationSpec] = None, dim: Optional[int] = None) -> float:
    """Defect of the approximant under its witness conjugation (should be ~0)."""
    A = _square(A)
    Tn = sst_approximant(A, c, dim)
    return matrix_defect(Tn, witness_conjugation(A.shape[0], c, Tn.shape[0]))


def sot_residual(T, n: int, i: int, adjoint: bool = False) -> float:
    """``sum_{j > n} |T_ji|^2``: how far ``T_n e_i`` is from ``T e_i`` (1-based ``i``).

    With ``adjoint=True`` the same tail is taken for ``T*``.
    """
    T = _square(T)
    D = T.shape[0]
    if not 1 <= i <= n <= D:
        raise DomainError(f"need 1 <= i <= n <= {D}, got i={i}, n={n}")
    col = np.conj(T[i - 1, :]) if adjoint else T[:, i - 1]
    tail = col[n:]
    return float(np.sum(np.abs(tail) ** 2))


def residual_grid(T, adjoint: bool = False) -> np.ndarray:
    """Rows ``n = 1..D``, columns ``i = 1..D``; ``nan`` where ``i > n``."""
    T = _square(T)
    D = T.shape[0]
    grid = np.full((D, D), np.nan)
    for n in range(1, D + 1):
        for i in range(1, n + 1):
            grid[n - 1, i - 1] = sot_residual(T, n, i, adjoint)
    return grid


def grid_to_csv(grid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    D = grid.shape[1]
    w.writerow(["n"] + [f"i={i}" for i in range(1, D + 1)])
    for n, row in enumerate(grid, 1):
        w.writerow([n] + ["" if np.isnan(x) else repr(float(x)) for x in row])
    return buf.getvalue()


# text format: first line D, then D rows of whitespace-separated "re,im" tokens


def read_matrix(source) -> np.ndarray:
    text = Path(source).read_text() if not isinstance(source, str) or "\n" not in source else source
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DomainError("empty matrix file")
    try:
        D = int(lines[0])
    except ValueError:
        raise DomainError(f"bad dimension header {lines[0]!r}") from None
    if D < 1 or len(lines) != D + 1:
        raise DomainError(f"expected {D} rows after the header, found {len(lines) - 1}")
    M = np.zeros((D, D), dtype=complex)
    for r, line in enumerate(lines[1:]):
        tokens = line.split()
        if len(tokens) != D:
            raise DomainError(f"row {r + 1} has {len(tokens)} entries, expected {D}")
        for col, tok in enumerate(tokens):
            parts = tok.split(",")
            try:
                re_, im = (float(parts[0]), float(parts[1])) if len(parts) == 2 else (float(tok), 0.0)
            except ValueError:
                raise DomainError(f"bad entry {tok!r} at row {r + 1}") from None
            M[r, col] = complex(re_, im)
    return M


def write_matrix(M) -> str:
    M = _square(M)
    rows = [str(M.shape[0])]
    for row in M:
        rows.append(" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row))
    return "\n".join(rows) + "\n"
