"""Independent audit of serialized approximation certificates.

Nothing here calls into the construction code: every number in the
document is recomputed from the raw weights of the sequence and compared
by value.  Any mismatch or violated inequality is collected, and
:class:`~csoclosure.errors.CertificateError` (CLI exit code 4) is raised
with the full list.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .errors import CertificateError
from .exact import parse_exact

FORMAT = "csoclosure-certificate"
VERSION = 1
FLOAT_TOL = 1e-12


def save_certificate(doc, path) -> None:
    if hasattr(doc, "to_dict"):
        doc = doc.to_dict()
    Path(path).write_text(dumps(doc))


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def load_certificate(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CertificateError(f"{path}: not a JSON document ({exc})") from None


def _value(text):
    try:
        return parse_exact(text)
    except ValueError:
        return float(text)


class _Audit:
    def __init__(self, doc: dict, seq):
        self.doc = doc
        self.seq = seq
        self.exact = seq.exact
        self.failures: list[str] = []
        self._cache: dict[int, object] = {}

    def a(self, n: int):
        v = self._cache.get(n)
        if v is None:
            v = self.seq(n)
            if len(self._cache) < 1 << 16:
                self._cache[n] = v
        return v

    def fail(self, msg: str) -> None:
        self.failures.append(msg)

    def lt(self, x, y) -> bool:
        return x < y if self.exact else x < y - FLOAT_TOL

    def same(self, claimed, actual) -> bool:
        if self.exact and not isinstance(claimed, float):
            return claimed == actual
        return abs(float(claimed) - float(actual)) <= FLOAT_TOL

    def claim(self, label: str, text, actual) -> None:
        try:
            claimed = _value(text)
        except (TypeError, ValueError):
            self.fail(f"{label}: unreadable value {text!r}")
            return
        if not self.same(claimed, actual):
            self.fail(f"{label}: document says {text}, weights give {actual}")


def verify_certificate(doc: dict, seq) -> dict:
    """Re-check ``doc`` against ``seq``; returns a summary or raises ``CertificateError``."""
    au = _Audit(doc, seq)
    try:
        _run(au)
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        au.fail(f"malformed certificate: {exc!r}")
    if au.failures:
        raise CertificateError(
            f"certificate rejected ({len(au.failures)} problem(s)): " + au.failures[0],
            au.failures,
        )
    return {
        "sequence": seq.name,
        "epsilon": doc["epsilon"],
        "verified_prefix": doc["verified_prefix"],
        "checks": "all passed",
    }


def _run(au: _Audit) -> None:
    doc, a = au.doc, au.a
    if doc.get("format") != FORMAT or doc.get("version") != VERSION:
        au.fail("unknown certificate format or version")
    if doc["sequence"] != au.seq.name:
        au.fail(f"certificate is for {doc['sequence']!r}, audited against {au.seq.name!r}")
    eps = Fraction(parse_exact(doc["epsilon"]))
    if eps <= 0:
        au.fail("epsilon must be positive")
        return
    K = doc["rounds"]
    plan = doc["plan"]
    m = list(plan["m"])
    N = plan["N"]
    if K < 1 or len(m) != 2 * K + 3 or len(plan["delta"]) != K or len(plan["oracle_answers"]) != K:
        au.fail("plan length does not match the number of rounds")
        return

    def mk(k):
        return m[k + 1]

    # N: first index whose weight drops below eps/4
    for n in range(1, N):
        if not a(n) > 0:
            au.fail(f"alpha_{n} is not positive")
            return
        if au.lt(a(n), eps / 4):
            au.fail(f"N = {N} is not the first index below eps/4 (alpha_{n} is)")
            return
    if not (a(N) > 0 and au.lt(a(N), eps / 4)):
        au.fail(f"alpha_N = {a(N)} is not in (0, eps/4)")
    if (mk(-1), mk(0), mk(1)) != (0, N, N):
        au.fail("plan must start 0, N, N")

    for k in range(1, 2 * K + 1):
        if not mk(k) < mk(k + 1):
            au.fail(f"m_{k} < m_{k + 1} fails")
    for k in range(K):
        top = 3 * mk(2 * k)
        smallest = min(a(j) for j in range(1, top + 1))
        delta = min(smallest, eps / 2**k) / 8
        au.claim(f"delta_{k}", plan["delta"][k], delta)
        c = plan["oracle_answers"][k]
        if c != mk(2 * k + 3) + mk(2 * k - 1):
            au.fail(f"oracle answer {k} does not equal m_{2 * k + 3} + m_{2 * k - 1}")
        if mk(2 * k + 2) + mk(2 * k) != mk(2 * k + 3) + mk(2 * k - 1):
            au.fail(f"conservation identity fails at k={k}")
        if not 2 * mk(2 * k) <= mk(2 * k + 2):
            au.fail(f"doubling bound fails at k={k}")
        if c <= top:
            au.fail(f"oracle answer {c} is not beyond 3m_{2 * k} = {top}")
            continue
        if not (a(c) > 0 and au.lt(a(c), delta)):
            au.fail(f"alpha_{c} is not in (0, delta_{k})")
        for j in range(1, top + 1):
            if not au.lt(abs(a(j) - a(c - j)), delta):
                au.fail(f"|alpha_{j} - alpha_{c - j}| is not below delta_{k}")
                break

    half = eps / 2
    zeroed = doc["zeroed_weights"]
    if [z["k"] for z in zeroed] != list(range(1, 2 * K + 2)):
        au.fail("zeroed weights must list k = 1..2K+1")
    t_prime = Fraction(0)
    for z in zeroed:
        k, idx = z["k"], z["index"]
        if idx != mk(k):
            au.fail(f"zeroed weight k={k} sits at {idx}, plan says {mk(k)}")
            continue
        w = a(idx)
        au.claim(f"zeroed weight k={k}", z["weight"], w)
        if not (w > 0 and au.lt(w, half)):
            au.fail(f"zeroed weight alpha_{idx} is not in (0, eps/2)")
        t_prime = max(t_prime, w)

    # slot A_{2k} (A_1 for k = 0) receives the reversal of A_{2k+3}
    pairs = doc["pair_bounds"]
    if [p["k"] for p in pairs] != list(range(K)):
        au.fail("pair bounds must list k = 0..K-1")
    gap = Fraction(0)
    replaced = {}
    for p in pairs:
        k = p["k"]
        lo, hi = mk(2 * k - 1) + 1, mk(2 * k) - 1
        rlo, rhi = mk(2 * k + 2) + 1, mk(2 * k + 3) - 1
        if hi - lo != rhi - rlo:
            au.fail(f"A_{2 * k + 3} and the slot it replaces differ in size")
            continue
        bound = Fraction(0)
        for pos in range(lo, hi + 1):
            src = rhi - (pos - lo)
            replaced[pos] = src
            bound = max(bound, abs(a(pos) - a(src)))
        au.claim(f"pair bound k={k}", p["bound"], bound)
        if not au.lt(bound, half):
            au.fail(f"pair bound k={k} is not below eps/2")
        gap = max(gap, bound)
    au.claim("t_prime_distance", doc["t_prime_distance"], t_prime)
    au.claim("t_double_prime_gap", doc["t_double_prime_gap"], gap)

    horizon = mk(2 * K + 1)
    if doc["verified_prefix"] != horizon:
        au.fail(f"verified prefix {doc['verified_prefix']} != m_{2 * K + 1} = {horizon}")
    zeros = set(m[2:])
    distance = Fraction(0)
    for n in sorted(zeros | set(replaced)):
        if n > horizon:
            continue
        d = a(n) if n in zeros else abs(a(n) - a(replaced[n]))
        distance = max(distance, d)
    au.claim("prefix_distance", doc["prefix_distance"], distance)
    if not au.lt(distance, eps):
        au.fail("prefix distance is not below eps")

    ob = doc["open_block"]
    if (ob["first"], ob["last"]) != (mk(2 * K - 1) + 1, mk(2 * K) - 1):
        au.fail("open block does not match the last unpaired slot")
    expected = "exactly verified" if au.exact else "numerically verified"
    if doc["verdict"] != expected:
        au.fail(f"verdict {doc['verdict']!r} should be {expected!r}")
