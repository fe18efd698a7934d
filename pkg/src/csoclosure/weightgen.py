"""Weight sequences for unilateral weighted shifts, evaluated exactly.

Two generators are built in:

* the Kakutani weights ``1, 1/2, 1, 1/4, 1, 1/2, 1, 1/8, ...``, available both
  through the block recursion and through the 2-adic closed form;
* the perturbed sequence whose weights are pairwise distinct
  (``alpha_{2^m + j} = alpha_{2^m - j} + 3^-(2^m + j)``), returned as
  :class:`~csoclosure.exact.Triadic` values so that huge indices stay cheap.

Sequences are addressed by name: ``kakutani``, ``example``,
``constant:<value>`` and ``file:<path>`` (one exact value per line, 1-based).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional

from .errors import DomainError, ResourceLimitError
from .exact import Triadic, is_exact, parse_exact

__all__ = [
    "WeightSequence",
    "AccumulationReport",
    "DistinctReport",
    "CorollaryRow",
    "kakutani_recursive",
    "kakutani_closed",
    "example_weights",
    "KAKUTANI",
    "EXAMPLE",
    "constant_sequence",
    "sequence_from_file",
    "sequence_from_values",
    "resolve_sequence",
    "check_distinct",
    "corollary_check",
    "accumulation_analysis",
]


@lru_cache(maxsize=None)
def _dyadic(v: int) -> Fraction:
    # shared instances keep long Kakutani prefixes small in memory
    return Fraction(1, 1 << v)


def _check_index(n) -> int:
    if isinstance(n, bool) or not isinstance(n, int):
        raise DomainError(f"weight index must be an integer, got {n!r}")
    if n < 1:
        raise DomainError(f"weight index must be >= 1, got {n}")
    return n


def kakutani_recursive(n: int) -> Fraction:
    """Kakutani weight by descending ``W_{k+1} = W_k ++ [2^-k] ++ W_k``.

    ``W_k`` has length ``2^k - 1`` and its middle entry sits at ``2^(k-1)``;
    indices to the right of the middle are folded back onto the left copy.
    """
    n = _check_index(n)
    while True:
        mid = 1 << (n.bit_length() - 1)
        if n == mid:
            return _dyadic(mid.bit_length() - 1)
        n -= mid


def kakutani_closed(n: int) -> Fraction:
    """``2^-v`` where ``v`` is the 2-adic valuation of ``n``."""
    n = _check_index(n)
    return _dyadic((n & -n).bit_length() - 1)


def example_weights(n: int):
    """The distinct-weight perturbation of the Kakutani sequence.

    ``alpha_1 = 1``, ``alpha_{2^m} = 2^-m`` and, for ``1 <= j < 2^m``,
    ``alpha_{2^m + j} = alpha_{2^m - j} + 3^-(2^m + j)``.  Powers of two take
    precedence over the inductive rule.
    """
    n = _check_index(n)
    chain = []
    while n != 1:
        m = n.bit_length() - 1
        if n == 1 << m:
            break
        chain.append((n, 1))
        n = (2 << m) - n
    base = _dyadic(n.bit_length() - 1)
    if not chain:
        return base
    # the chain visits strictly decreasing indices
    chain.reverse()
    return Triadic._raw(base, tuple(chain))


@dataclass(frozen=True)
class WeightSequence:
    """A lazily evaluated weight sequence ``alpha_1, alpha_2, ...``.

    ``length`` is ``None`` for infinite generators.  ``exact`` is ``False``
    for sequences that return floats; downstream checks then fall back to an
    absolute tolerance.
    """

    index_fn: Callable[[int], object]
    name: str
    known_sup: Optional[Fraction] = None
    length: Optional[int] = None
    exact: bool = True

    def __call__(self, n: int):
        n = _check_index(n)
        if self.length is not None and n > self.length:
            raise DomainError(f"{self.name}: index {n} beyond the {self.length} stored weights")
        return self.index_fn(n)

    def prefix(self, length: int) -> list:
        return [self(n) for n in range(1, length + 1)]


KAKUTANI = WeightSequence(kakutani_closed, "kakutani", known_sup=Fraction(1))
EXAMPLE = WeightSequence(example_weights, "example")


def constant_sequence(value) -> WeightSequence:
    value = parse_exact(value) if isinstance(value, str) else Fraction(value)
    if value < 0:
        raise DomainError("weights must be nonnegative")
    return WeightSequence(lambda n: value, f"constant:{value}", known_sup=value)


def sequence_from_values(values, name: str = "values") -> WeightSequence:
    values = list(values)
    for n, v in enumerate(values, 1):
        if v < 0:
            raise DomainError(f"{name}: weight {n} is negative")
    exact = all(is_exact(v) for v in values)
    return WeightSequence(lambda n: values[n - 1], name, length=len(values), exact=exact)


def sequence_from_file(path) -> WeightSequence:
    path = Path(path)
    values = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(parse_exact(line))
        except ValueError as exc:
            raise DomainError(f"{path}:{lineno}: {exc}") from None
    return sequence_from_values(values, name=f"file:{path}")


def resolve_sequence(spec: str) -> WeightSequence:
    if spec == "kakutani":
        return KAKUTANI
    if spec == "example":
        return EXAMPLE
    if spec.startswith("file:"):
        return sequence_from_file(spec[5:])
    if spec.startswith("constant:"):
        return constant_sequence(spec[9:])
    raise DomainError(f"unknown sequence {spec!r} (kakutani, example, constant:<v>, file:<path>)")


# -- analyses -----------------------------------------------------------------


@dataclass(frozen=True)
class DistinctReport:
    distinct: bool
    witness: Optional[tuple[int, int]] = None

    def __bool__(self) -> bool:
        return self.distinct


def check_distinct(seq: WeightSequence, prefix_len: int) -> DistinctReport:
    """Exact pairwise-distinctness scan of ``alpha_1..alpha_prefix_len``.

    On a collision the lexicographically first colliding pair is returned.
    """
    first: dict = {}
    best = None
    for n in range(1, prefix_len + 1):
        v = seq(n)
        i = first.setdefault(v, n)
        if i != n:
            if best is None or (i, n) < best:
                best = (i, n)
    return DistinctReport(best is None, best)


@dataclass(frozen=True)
class CorollaryRow:
    n: int
    weight_at_power: object  # alpha_{2^n}
    symmetry_defect: object  # A_n


def corollary_check(seq: WeightSequence, max_n: int, max_index: int = 1 << 22) -> list[CorollaryRow]:
    """Both quantities of the perturbed-Kakutani sufficient condition.

    For each ``n`` reports ``alpha_{2^n}`` and
    ``A_n = max |alpha_k - alpha_{2^n - k}|`` over ``1 <= k < 2^n``.
    """
    if max_n < 1:
        raise DomainError("max_n must be >= 1")
    rows: list[CorollaryRow] = []
    for n in range(1, max_n + 1):
        c = 1 << n
        if c > max_index:
            err = ResourceLimitError(
                f"2^{n} exceeds the index cap {max_index}", completed=n - 1
            )
            err.rows = rows
            raise err
        defect = Fraction(0)
        for k in range(1, c // 2 + 1):
            d = abs(seq(k) - seq(c - k))
            if d > defect:
                defect = d
        rows.append(CorollaryRow(n, seq(c), defect))
    return rows


@dataclass
class AccumulationReport:
    cluster_centers: list
    multiplicities_in_prefix: list[int]
    prefix_len: int
    tolerance: float
    accumulating: list[bool] = field(default_factory=list)

    def multiplicity_of(self, value) -> int:
        for c, k in zip(self.cluster_centers, self.multiplicities_in_prefix):
            if c == value:
                return k
        return 0


def _clusters(values, tol: Fraction):
    order = sorted(range(len(values)), key=lambda i: float(values[i]))
    # exact repair pass; near-sorted input keeps this linear
    order.sort(key=lambda i: values[i])
    groups: list[list[int]] = []
    prev = None
    for i in order:
        v = values[i]
        if prev is not None and v - prev <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
        prev = v
    return groups


def accumulation_analysis(seq: WeightSequence, prefix_len: int, tol: float) -> AccumulationReport:
    """Cluster the weight values and flag clusters that keep filling up.

    Single-linkage clustering (adjacent sorted values within ``tol`` join)
    runs over ``alpha_1..alpha_{2L}``; a cluster is reported when it has
    members among the first ``L`` weights and flagged as accumulating when
    its count over ``2L`` weights strictly exceeds its count over ``L``.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if prefix_len < 2:
        raise DomainError("prefix_len must be >= 2")
    horizon = 2 * prefix_len
    if seq.length is not None:
        horizon = min(horizon, seq.length)
        if horizon < prefix_len:
            raise DomainError(f"{seq.name} has only {seq.length} weights")
    values = seq.prefix(horizon)
    exact_tol = Fraction(tol) if seq.exact else tol
    centers, counts, flags = [], [], []
    for group in _clusters(values, exact_tol):
        inside = sum(1 for i in group if i < prefix_len)
        if not inside:
            continue
        members = [values[i] for i in group]
        if all(m == members[0] for m in members):
            center = members[0]
        else:
            center = sum(float(m) for m in members) / len(members)
        centers.append(center)
        counts.append(inside)
        flags.append(len(group) > inside)
    return AccumulationReport(centers, counts, prefix_len, tol, flags)
