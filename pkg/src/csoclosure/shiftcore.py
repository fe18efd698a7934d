"""Finite truncations of weighted shifts.

A weight list ``w_1..w_L`` stands for the ``(L+1) x (L+1)`` matrix with
``w`` on the first subdiagonal.  Zero weights split it into an orthogonal
direct sum of irreducible blocks; a direct sum is complex symmetric when
each block is palindromic or is matched with another block carrying the
reversed weights (the reversal conjugation then swaps the two).

Structural tests run on exact weight lists.  Dense matrices are only
assembled when a singular value is actually needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError
from .exact import is_exact

__all__ = [
    "FiniteShiftBlock",
    "BlockDecomposition",
    "ConjugationSpec",
    "ObstructionReport",
    "decompose",
    "is_palindromic",
    "is_cso_truncation",
    "reversal_conjugation",
    "symmetric_unitary_conjugation",
    "shift_matrix",
    "operator_norm",
    "cso_defect",
    "matrix_defect",
    "shift_norm",
    "shift_distance",
    "truncate_by_threshold",
    "kernel_obstruction",
]

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class FiniteShiftBlock:
    """One irreducible block; ``weights`` are the subdiagonal entries."""

    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(self.weights))
        for w in self.weights:
            if not w > 0:
                raise DomainError(f"block weights must be strictly positive, got {w}")

    @property
    def size(self) -> int:
        return len(self.weights) + 1

    def reversed(self) -> "FiniteShiftBlock":
        return FiniteShiftBlock(self.weights[::-1])


@dataclass(frozen=True)
class BlockDecomposition:
    blocks: tuple[FiniteShiftBlock, ...]
    zero_positions: tuple[int, ...]  # 1-based indices of the zero weights

    @property
    def sizes(self) -> list[int]:
        return [b.size for b in self.blocks]

    @property
    def dimension(self) -> int:
        return sum(self.sizes)

    def weights(self) -> list:
        """Reassemble the weight list: blocks joined by single zeros."""
        out: list = []
        for k, block in enumerate(self.blocks):
            if k:
                out.append(Fraction(0))
            out.extend(block.weights)
        return out

    def to_dict(self) -> dict:
        from .exact import to_str

        return {
            "blocks": [[to_str(w) for w in b.weights] for b in self.blocks],
            "zero_positions": list(self.zero_positions),
        }


def decompose(weights: Sequence) -> BlockDecomposition:
    """Split a weight list at its zeros.

    A list of length ``L`` with ``Z`` zeros yields ``Z + 1`` blocks whose
    sizes add up to ``L + 1``; empty runs become ``1 x 1`` zero blocks.
    """
    blocks, zeros, run = [], [], []
    for n, w in enumerate(weights, 1):
        if w < 0:
            raise DomainError(f"weight {n} is negative: {w}")
        if w == 0:
            blocks.append(FiniteShiftBlock(run))
            zeros.append(n)
            run = []
        else:
            run.append(w)
    blocks.append(FiniteShiftBlock(run))
    return BlockDecomposition(tuple(blocks), tuple(zeros))


def is_palindromic(block: FiniteShiftBlock | Sequence) -> bool:
    w = block.weights if isinstance(block, FiniteShiftBlock) else tuple(block)
    n = len(w)
    return all(w[j] == w[n - 1 - j] for j in range(n // 2))


def _pairing(d: BlockDecomposition) -> list[Optional[int]]:
    """Partner of each block: itself when palindromic, else a later reversed copy."""
    partner: list[Optional[int]] = [None] * len(d.blocks)
    waiting: dict[tuple, list[int]] = {}
    for k, block in enumerate(d.blocks):
        if is_palindromic(block):
            partner[k] = k
            continue
        rev = block.weights[::-1]
        queue = waiting.get(rev)
        if queue:
            j = queue.pop(0)
            partner[j], partner[k] = k, j
        else:
            waiting.setdefault(block.weights, []).append(k)
    return partner


def is_cso_truncation(d: BlockDecomposition) -> bool:
    """True when every block is palindromic or matched with its reversal."""
    return all(p is not None for p in _pairing(d))


@dataclass(frozen=True)
class ConjugationSpec:
    """A conjugation ``C x = S conj(x)`` on ``C^dim``.

    ``kind == "block_reversal"`` stores an involutive coordinate permutation
    (0-based) and ``block_sizes``; ``kind == "symmetric_unitary"`` stores
    ``matrix``, a symmetric unitary ``S``.
    """

    kind: str
    block_sizes: tuple[int, ...] = ()
    permutation: tuple[int, ...] = ()
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "block_reversal":
            p = self.permutation
            if sorted(p) != list(range(len(p))) or any(p[p[i]] != i for i in range(len(p))):
                raise DomainError("reversal permutation must be an involution")
        elif self.kind == "symmetric_unitary":
            S = np.asarray(self.matrix, dtype=complex)
            if S.ndim != 2 or S.shape[0] != S.shape[1]:
                raise DomainError("S must be square")
            n = S.shape[0]
            if np.linalg.norm(S - S.T, 2) > SYMMETRY_TOL:
                raise DomainError("S is not symmetric")
            if np.linalg.norm(S @ S.conj().T - np.eye(n), 2) > SYMMETRY_TOL:
                raise DomainError("S is not unitary")
            object.__setattr__(self, "matrix", S)
        else:
            raise DomainError(f"unknown conjugation kind {self.kind!r}")

    @property
    def dimension(self) -> int:
        if self.kind == "block_reversal":
            return len(self.permutation)
        return self.matrix.shape[0]

    def as_matrix(self) -> np.ndarray:
        if self.kind == "symmetric_unitary":
            return self.matrix
        n = len(self.permutation)
        S = np.zeros((n, n))
        S[list(self.permutation), list(range(n))] = 1.0
        return S

    def apply(self, x):
        """``C x``; exact (no rounding) for the permutation kind."""
        if self.kind == "block_reversal":
            x = list(x)
            out = [None] * len(x)
            for i, j in enumerate(self.permutation):
                out[j] = x[i].conjugate()
            return out
        return self.matrix @ np.conj(np.asarray(x))


def reversal_conjugation(d: BlockDecomposition) -> ConjugationSpec:
    """Blockwise ``(z_1..z_n) -> (conj z_n..conj z_1)``.

    Blocks matched with a reversed partner are instead mapped onto that
    partner (reversed and conjugated), which is what makes such a pair
    complex symmetric.
    """
    offsets, pos = [], 0
    for size in d.sizes:
        offsets.append(pos)
        pos += size
    perm = list(range(pos))
    for k, j in enumerate(_pairing(d)):
        target = k if j is None else j
        size = d.blocks[k].size
        for r in range(size):
            perm[offsets[k] + r] = offsets[target] + size - 1 - r
    return ConjugationSpec("block_reversal", tuple(d.sizes), tuple(perm))


def symmetric_unitary_conjugation(S) -> ConjugationSpec:
    return ConjugationSpec("symmetric_unitary", matrix=np.asarray(S, dtype=complex))


def shift_matrix(weights: Sequence, dtype=float) -> np.ndarray:
    """Dense ``(L+1) x (L+1)`` lower-subdiagonal matrix of a weight list."""
    w = np.array([float(x) if is_exact(x) else x for x in weights], dtype=dtype)
    return np.diag(w, -1) if len(w) else np.zeros((1, 1), dtype=dtype)


def operator_norm(M) -> float:
    """Largest singular value."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def _reversal_image(weights: Sequence, c: ConjugationSpec) -> Optional[list]:
    """Weights of ``C T* C`` when that operator is again a lower shift."""
    L = len(weights)
    p = c.permutation
    out = [0] * L
    for n, w in enumerate(weights):
        if w == 0:
            continue
        # T e_n = w e_{n+1}  =>  C T* C e_{p(n+1)} = conj(w) e_{p(n)}
        src, dst = p[n + 1], p[n]
        if dst != src + 1:
            return None
        out[src] = w
    return out


def cso_defect(weights: Sequence, c: ConjugationSpec, method: str = "auto"):
    """``||T - C T* C||`` for the shift with the given weights.

    ``method="exact"`` (the default for a reversal conjugation whose image
    is again a lower shift) returns the exact weight supremum of the
    difference; otherwise the largest singular value of the dense difference
    matrix is returned as a float.
    """
    weights = list(weights)
    dim = len(weights) + 1
    if c.dimension != dim:
        raise DomainError(f"conjugation has dimension {c.dimension}, shift has {dim}")
    if method not in ("auto", "exact", "svd"):
        raise DomainError(f"unknown method {method!r}")
    if method != "svd" and c.kind == "block_reversal" and all(is_exact(w) for w in weights):
        image = _reversal_image(weights, c)
        if image is not None:
            return shift_distance(weights, image)
        if method == "exact":
            raise DomainError("C T* C is not a weighted shift; exact path unavailable")
    # C T* C = S T^T S^{-1}, and S is unitary
    return matrix_defect(shift_matrix(weights, dtype=complex), c)


def matrix_defect(T, c: ConjugationSpec) -> float:
    """``||T - C T* C||`` for a dense matrix, as ``||T S - S T^T||``."""
    T = np.asarray(T, dtype=complex)
    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] != c.dimension:
        raise DomainError(f"matrix of shape {T.shape} does not match conjugation dimension {c.dimension}")
    S = c.as_matrix()
    return operator_norm(T @ S - S @ T.T)


def shift_norm(weights: Sequence):
    return max(weights, default=Fraction(0))


def shift_distance(w1: Sequence, w2: Sequence):
    """Norm of the difference of two shifts on the same basis: ``max |w1 - w2|``."""
    if len(w1) != len(w2):
        raise DomainError(f"length mismatch: {len(w1)} vs {len(w2)}")
    return max((abs(a - b) for a, b in zip(w1, w2)), default=Fraction(0))


def truncate_by_threshold(seq, eps, prefix_len: int) -> list:
    """Zero every weight ``<= eps`` among the first ``prefix_len``."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    zero = Fraction(0)
    return [a if a > eps else zero for a in seq.prefix(prefix_len)]


@dataclass(frozen=True)
class ObstructionReport:
    num_zeros: Optional[int]
    kernel_dim: Optional[int]
    cokernel_dim: Optional[int]
    verdict: str


def kernel_obstruction(weights: Sequence, infinitely_many_zeros: bool = False) -> ObstructionReport:
    """Kernel-dimension test for the infinite shift modelled by ``weights``.

    ``weights`` is the whole pattern of zeros: the modelled operator has
    these weights followed by a strictly positive tail.  With ``N`` zeros,
    ``dim ker T = N`` and ``dim ker T* = N + 1``, so no conjugation can
    intertwine ``T`` and ``T*``.
    """
    if infinitely_many_zeros:
        return ObstructionReport(None, None, None, "no obstruction: infinitely many zero weights")
    n = sum(1 for w in weights if w == 0)
    return ObstructionReport(
        n,
        n,
        n + 1,
        f"not complex symmetric: dim ker T = {n} != {n + 1} = dim ker T*",
    )
