"""Norm approximation of approximately Kakutani shifts by complex symmetric ones.

Given weights ``alpha`` and ``eps``, the construction

1. picks ``N`` with ``0 < alpha_N < eps/4`` and runs the index recursion

       m_{-1} = 0,  m_0 = m_1 = N,
       delta_k  = min(alpha_1..alpha_{3 m_{2k}}, eps / 2^k) / 8,
       m_{2k+3} = c(3 m_{2k}, delta_k) - m_{2k-1},
       m_{2k+2} = m_{2k+3} - m_{2k} + m_{2k-1},

   where ``c(n, d)`` is an oracle index with ``0 < alpha_c < d`` and
   ``|alpha_j - alpha_{c-j}| < d`` for ``j <= n``;
2. zeroes the weights at every ``m_k`` (the shift ``T'``), splitting it into
   blocks ``A_k`` carrying ``alpha_{m_{k-1}+1} .. alpha_{m_k - 1}``
   (with ``A_0 = A_1`` covering ``alpha_1 .. alpha_{N-1}``);
3. replaces each even block ``A_{2k}`` by ``A'_{2k+3}``, the reversal of
   ``A_{2k+3}``, giving ``T''``.  Up to reordering ``T''`` is the direct sum
   of the palindromic pairs ``A_{2k+3} (+) A'_{2k+3}``.

Only ``K`` rounds are run.  The certified prefix is ``[1, m_{2K+1}]``; the
slot of ``A_{2K}`` is left unchanged because its partner lies beyond the
horizon, and the certificate names it as the open block.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence as SequenceABC
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .errors import (
    ConsistencyError,
    ContractViolation,
    DomainError,
    SearchExhaustedError,
)
from .exact import parse_exact, to_str
from .weightgen import WeightSequence

logger = logging.getLogger(__name__)

NUMERIC_TOL = 1e-12
DEFAULT_N_CAP = 10**7
CERTIFICATE_FORMAT = "csoclosure-certificate"
CERTIFICATE_VERSION = 1

__all__ = [
    "COracle",
    "IndexPlan",
    "PlanBlock",
    "PrefixShift",
    "ApproxCertificate",
    "kakutani_oracle",
    "scan_oracle",
    "dyadic_oracle",
    "make_oracle",
    "verify_oracle_answer",
    "build_plan",
    "build_t_prime",
    "build_blocks",
    "assemble_t_double_prime",
    "paired_view",
    "certify",
]


def _below(a, b, exact: bool) -> bool:
    """Strict ``a < b``; in float mode with a safety margin of ``NUMERIC_TOL``."""
    return a < b if exact else a < b - NUMERIC_TOL


def _rational(x) -> Fraction:
    if isinstance(x, str):
        x = parse_exact(x)
    x = Fraction(x)
    if x <= 0:
        raise DomainError(f"eps must be positive, got {x}")
    return x


def _render(x) -> str:
    return repr(float(x)) if isinstance(x, float) else to_str(x)


# -- oracles --------------------------------------------------------------------


@dataclass(frozen=True)
class COracle:
    """Index oracle ``(n, eps) -> c`` with ``c > n``.

    Every answer is re-verified by :func:`verify_oracle_answer` before use,
    so a ``user`` oracle cannot smuggle in a bad index.
    """

    query: Callable[[int, object], int]
    provenance: str  # exact_kakutani | scan | dyadic | user
    name: str = ""

    def __call__(self, n: int, eps) -> int:
        return self.query(n, eps)


def kakutani_oracle(n: int, eps) -> int:
    """Smallest ``c = 2^m`` with ``c > n`` and ``2^-m < eps``."""
    eps = _rational(eps)
    # 2^m > 1/eps  <=>  2^m > floor(1/eps)
    m = max(n.bit_length(), int(1 / eps).bit_length())
    return 1 << m


def _symmetric_run(seq, n: int, eps, c: int, exact: bool) -> int:
    """Number of leading ``j`` with ``|alpha_j - alpha_{c-j}| < eps`` (stops at ``n``)."""
    for j in range(1, n + 1):
        if not _below(abs(seq(j) - seq(c - j)), eps, exact):
            return j - 1
    return n


def _trapped(value, eps, exact: bool) -> bool:
    return value > 0 and _below(value, eps, exact)


def _search(seq: WeightSequence, n: int, eps, candidates, what: str) -> int:
    best = None
    best_score = None
    for c in candidates:
        a = seq(c)
        if not _trapped(a, eps, seq.exact):
            if best_score is None or (best_score[0] == 0 and a < best_score[1]):
                best, best_score = {"c": c, "reason": f"alpha_c = {_render(a)} not in (0, eps)"}, (0, a)
            continue
        run = _symmetric_run(seq, n, eps, c, seq.exact)
        if run == n:
            return c
        if best_score is None or best_score[0] == 0 or run > best_score[1]:
            best = {"c": c, "reason": f"|alpha_j - alpha_(c-j)| >= eps first at j = {run + 1}"}
            best_score = (1, run)
    raise SearchExhaustedError(f"{what}: no index found for n={n}, eps={_render(eps)}", best=best)


def scan_oracle(seq: WeightSequence, n: int, eps, search_limit: int) -> int:
    """First ``c`` in ``(n, search_limit]`` meeting both oracle conditions."""
    if search_limit < n:
        raise DomainError("search_limit must be >= n")
    if seq.length is not None:
        search_limit = min(search_limit, seq.length)
    return _search(seq, n, eps, range(n + 1, search_limit + 1), "scan oracle")


def dyadic_oracle(seq: WeightSequence, n: int, eps, max_exponent: int = 48) -> int:
    """First power of two ``c > n`` meeting both oracle conditions.

    Sequences that are small perturbations of the Kakutani weights satisfy
    the conditions at large powers of two, so this search is short for them.
    """
    start = n.bit_length()
    if seq.length is not None:
        max_exponent = min(max_exponent, seq.length.bit_length() - 1)
    return _search(seq, n, eps, (1 << m for m in range(start, max_exponent + 1)), "dyadic oracle")


def make_oracle(kind: str, seq: WeightSequence, search_limit: int = 10**6) -> COracle:
    if kind == "kakutani":
        return COracle(kakutani_oracle, "exact_kakutani", "kakutani")
    if kind == "dyadic":
        return COracle(lambda n, e: dyadic_oracle(seq, n, e), "dyadic", "dyadic")
    if kind == "scan":
        return COracle(
            lambda n, e: scan_oracle(seq, n, e, max(search_limit, n)), "scan", "scan"
        )
    raise DomainError(f"unknown oracle {kind!r} (kakutani, dyadic, scan)")


def verify_oracle_answer(seq: WeightSequence, n: int, eps, c: int) -> None:
    """Re-check an oracle answer; raises :class:`ContractViolation`."""
    if not isinstance(c, int) or c <= n:
        raise ContractViolation(f"oracle answer c={c!r} must be an integer > n={n}")
    a = seq(c)
    if not a > 0:
        raise ContractViolation(f"oracle answer c={c}: alpha_c = {_render(a)} is not > 0")
    if not _below(a, eps, seq.exact):
        raise ContractViolation(f"oracle answer c={c}: alpha_c = {_render(a)} is not < {_render(eps)}")
    run = _symmetric_run(seq, n, eps, c, seq.exact)
    if run < n:
        j = run + 1
        raise ContractViolation(
            f"oracle answer c={c}: |alpha_{j} - alpha_{c - j}| is not < {_render(eps)}"
        )


# -- index plan -----------------------------------------------------------------


@dataclass(frozen=True)
class IndexPlan:
    """Indices ``m_{-1}, m_0, ..., m_{2K+1}`` and tolerances ``delta_0..delta_{K-1}``."""

    eps: Fraction
    N: int
    m: tuple[int, ...]  # m[0] is m_{-1}
    delta: tuple
    oracle_answers: tuple[int, ...]

    @property
    def rounds(self) -> int:
        return len(self.delta)

    def at(self, k: int) -> int:
        """``m_k`` for ``-1 <= k <= 2K+1``."""
        if k < -1 or k + 1 >= len(self.m):
            raise IndexError(f"m_{k} is outside the plan")
        return self.m[k + 1]

    @property
    def horizon(self) -> int:
        return self.m[-1]

    @property
    def zero_indices(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.m[2:])))


def build_plan(
    oracle: COracle,
    seq: WeightSequence,
    eps,
    K: int,
    n_cap: int = DEFAULT_N_CAP,
) -> IndexPlan:
    eps = _rational(eps)
    if K < 1:
        raise DomainError("K must be >= 1")
    exact = seq.exact

    def weight(n):
        a = seq(n)
        if not a > 0:
            raise DomainError(f"{seq.name} is not irreducible: alpha_{n} = {_render(a)}")
        return a

    N = None
    smallest = None
    for n in range(1, n_cap + 1):
        a = weight(n)
        if smallest is None or a < smallest[1]:
            smallest = (n, a)
        if _below(a, eps / 4, exact):
            N = n
            break
    if N is None:
        raise SearchExhaustedError(
            f"no N <= {n_cap} with alpha_N < eps/4",
            best={"n": smallest[0], "alpha": _render(smallest[1])},
        )

    m = {-1: 0, 0: N, 1: N}
    deltas, answers = [], []
    running_min, scanned = None, 0
    for k in range(K):
        top = 3 * m[2 * k]
        for n in range(scanned + 1, top + 1):
            a = weight(n)
            if running_min is None or a < running_min:
                running_min = a
        scanned = max(scanned, top)
        cap = eps / 2**k
        delta = (running_min if running_min < cap else cap) / 8
        c = oracle(top, delta)
        verify_oracle_answer(seq, top, delta, c)
        logger.debug("round %d: 3m_2k=%d delta=%s c=%d", k, top, _render(delta), c)
        m[2 * k + 3] = c - m[2 * k - 1]
        m[2 * k + 2] = m[2 * k + 3] - m[2 * k] + m[2 * k - 1]
        deltas.append(delta)
        answers.append(c)

    plan = IndexPlan(eps, N, tuple(m[k] for k in range(-1, 2 * K + 2)), tuple(deltas), tuple(answers))
    _check_plan(plan)
    return plan


def _check_plan(plan: IndexPlan) -> None:
    K = plan.rounds
    at = plan.at
    for k in range(1, 2 * K + 1):
        if not at(k) < at(k + 1):
            raise ConsistencyError(f"m is not strictly increasing: m_{k}={at(k)} >= m_{k + 1}={at(k + 1)}")
    for k in range(K):
        if at(2 * k + 2) + at(2 * k) != at(2 * k + 3) + at(2 * k - 1):
            raise ConsistencyError(f"index identity fails at k={k}")
        if not 2 * at(2 * k) <= at(2 * k + 2):
            raise ConsistencyError(f"doubling bound fails at k={k}")


# -- blocks and shifts ------------------------------------------------------------


@dataclass(frozen=True)
class PlanBlock:
    """``A_k`` (or ``A'_k`` when ``reversed``): weights at ``first..last``."""

    k: int
    first: int
    last: int
    reversed: bool = False

    @property
    def size(self) -> int:
        return self.last - self.first + 2

    def indices(self) -> range:
        if self.reversed:
            return range(self.last, self.first - 1, -1)
        return range(self.first, self.last + 1)

    def weights(self, seq: WeightSequence) -> list:
        return [seq(i) for i in self.indices()]

    def reverse(self) -> "PlanBlock":
        return PlanBlock(self.k, self.first, self.last, not self.reversed)


def build_blocks(plan: IndexPlan) -> list[PlanBlock]:
    """``[A_0, A_1, ..., A_{2K+1}]`` with ``A_0 = A_1`` (weights ``1..N-1``)."""
    at = plan.at
    blocks = [PlanBlock(0, 1, plan.N - 1), PlanBlock(1, 1, plan.N - 1)]
    for k in range(2, 2 * plan.rounds + 2):
        blocks.append(PlanBlock(k, at(k - 1) + 1, at(k) - 1))
    for k in range(plan.rounds):
        if blocks[2 * k + 3].size != blocks[2 * k].size:
            raise ConsistencyError(f"size(A_{2 * k + 3}) != size(A_{2 * k})")
    return blocks


class PrefixShift(SequenceABC):
    """Weights ``w_1..w_L`` of a shift built by re-indexing ``seq``.

    ``source(n)`` is the index of ``seq`` feeding position ``n``, or
    ``None`` for a zero weight.  Nothing is materialised up front.
    """

    def __init__(self, seq: WeightSequence, length: int, source: Callable[[int], Optional[int]]):
        self.seq = seq
        self.length = length
        self.source = source

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(self.length))]
        if i < 0:
            i += self.length
        if not 0 <= i < self.length:
            raise IndexError(i)
        src = self.source(i + 1)
        return Fraction(0) if src is None else self.seq(src)


def build_t_prime(seq: WeightSequence, plan: IndexPlan) -> PrefixShift:
    """``T'``: the original weights with zeros at every ``m_k``."""
    zeros = set(plan.zero_indices)
    return PrefixShift(seq, plan.horizon, lambda n: None if n in zeros else n)


def _slot_sources(plan: IndexPlan):
    """Replaced slots as ``(first, last, reflect)``: position ``p`` reads ``reflect - p``.

    Slot ``A_{2i}`` (slot ``A_1`` for ``i = 0``) covers ``m_{2i-1}+1 .. m_{2i}-1``
    and receives ``A'_{2i+3}``, i.e. position ``m_{2i-1} + l`` reads
    ``alpha_{m_{2i+3} - l}``.
    """
    at = plan.at
    return [
        (at(2 * i - 1) + 1, at(2 * i) - 1, at(2 * i + 3) + at(2 * i - 1))
        for i in range(plan.rounds)
    ]


def assemble_t_double_prime(seq: WeightSequence, plan: IndexPlan) -> PrefixShift:
    """``T''`` over the prefix ``[1, m_{2K+1}]`` in the original slot order."""
    zeros = set(plan.zero_indices)
    slots = _slot_sources(plan)

    def source(n):
        if n in zeros:
            return None
        for first, last, reflect in slots:
            if first <= n <= last:
                return reflect - n
        return n

    return PrefixShift(seq, plan.horizon, source)


def paired_view(seq: WeightSequence, plan: IndexPlan) -> list:
    """Weights of ``(+)_k (A_{2k+3} (+) A'_{2k+3})`` for ``k < K``, pairs separated by zeros."""
    blocks = build_blocks(plan)
    out: list = []
    for k in range(plan.rounds):
        b = blocks[2 * k + 3]
        if out:
            out.append(Fraction(0))
        out.extend(b.weights(seq))
        out.append(Fraction(0))
        out.extend(b.reverse().weights(seq))
    return out


# -- certificate ----------------------------------------------------------------


@dataclass
class ApproxCertificate:
    sequence: str
    eps: Fraction
    plan: IndexPlan
    oracle: str
    zeroed_weights: list  # (k, m_k, alpha_{m_k}) for k = 1..2K+1
    pair_bounds: list  # (k, ||A'_{2k+3} - A_{2k}||)
    t_prime_distance: object
    t_double_prime_gap: object
    prefix_distance: object
    open_block: tuple[int, int]
    verification: str = "exact"
    failures: list = field(default_factory=list)

    @property
    def verified_prefix(self) -> int:
        return self.plan.horizon

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        p = self.plan
        return {
            "format": CERTIFICATE_FORMAT,
            "version": CERTIFICATE_VERSION,
            "sequence": self.sequence,
            "epsilon": to_str(self.eps),
            "rounds": p.rounds,
            "oracle": self.oracle,
            "verification": self.verification,
            "plan": {
                "N": p.N,
                "m": list(p.m),
                "delta": [_render(d) for d in p.delta],
                "oracle_answers": list(p.oracle_answers),
            },
            "zeroed_weights": [
                {"k": k, "index": i, "weight": _render(w)} for k, i, w in self.zeroed_weights
            ],
            "pair_bounds": [{"k": k, "bound": _render(b)} for k, b in self.pair_bounds],
            "t_prime_distance": _render(self.t_prime_distance),
            "t_double_prime_gap": _render(self.t_double_prime_gap),
            "prefix_distance": _render(self.prefix_distance),
            "verified_prefix": self.verified_prefix,
            "open_block": {"first": self.open_block[0], "last": self.open_block[1]},
            "verdict": "exactly verified" if self.verification == "exact" else "numerically verified",
        }


def _pair_bound(seq, first: int, last: int, reflect: int):
    # || A'_{2k+3} - A_{2k} || = max over the slot of |alpha_p - alpha_{reflect - p}|
    bound = Fraction(0)
    for p in range(first, last + 1):
        d = abs(seq(p) - seq(reflect - p))
        if d > bound:
            bound = d
    return bound


def certify(
    seq: WeightSequence,
    eps,
    K: int,
    oracle: Optional[COracle] = None,
    n_cap: int = DEFAULT_N_CAP,
) -> ApproxCertificate:
    """Run the whole construction and check every bound.

    Raises :class:`~csoclosure.errors.ConsistencyError` listing the violated
    inequalities if any bound fails; never returns an unchecked certificate.
    """
    eps = _rational(eps)
    if oracle is None:
        oracle = make_oracle("dyadic", seq)
    exact = seq.exact
    plan = build_plan(oracle, seq, eps, K, n_cap=n_cap)
    build_blocks(plan)  # size consistency
    at = plan.at
    half = eps / 2
    failures = []

    zeroed = []
    for k in range(1, 2 * K + 2):
        a = seq(at(k))
        zeroed.append((k, at(k), a))
        if not (a > 0 and _below(a, half, exact)):
            failures.append(f"zeroed weight alpha_{at(k)} = {_render(a)} not in (0, eps/2)")

    pairs = []
    for k, (first, last, reflect) in enumerate(_slot_sources(plan)):
        b = _pair_bound(seq, first, last, reflect)
        pairs.append((k, b))
        if not _below(b, half, exact):
            failures.append(f"pair bound k={k}: {_render(b)} not < eps/2")

    t_prime = max((w for _, _, w in zeroed), default=Fraction(0))
    gap = max((b for _, b in pairs), default=Fraction(0))

    # direct re-computation over the prefix; unchanged positions contribute 0
    t2 = assemble_t_double_prime(seq, plan)
    distance = Fraction(0)
    for n in range(1, plan.horizon + 1):
        src = t2.source(n)
        if src == n:
            continue
        d = seq(n) if src is None else abs(seq(n) - seq(src))
        if d > distance:
            distance = d
    if not _below(distance, eps, exact):
        failures.append(f"prefix distance {_render(distance)} not < eps")
    if distance > max(t_prime, gap):
        failures.append("prefix distance exceeds max(||T - T'||, ||T' - T''||)")

    open_block = (at(2 * K - 1) + 1, at(2 * K) - 1)
    cert = ApproxCertificate(
        sequence=seq.name,
        eps=eps,
        plan=plan,
        oracle=oracle.name or oracle.provenance,
        zeroed_weights=zeroed,
        pair_bounds=pairs,
        t_prime_distance=t_prime,
        t_double_prime_gap=gap,
        prefix_distance=distance,
        open_block=open_block,
        verification="exact" if exact else "numerical",
        failures=failures,
    )
    if failures:
        err = ConsistencyError("certification failed: " + "; ".join(failures))
        err.certificate = cert
        raise err
    return cert
