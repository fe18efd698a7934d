"""Exact rationals with a lazily materialised base-3 tail.

A :class:`Triadic` is the exact rational number

    const + sum(d_i * 3**-i for i, d_i in terms)

where ``const`` and every ``d_i`` are :class:`fractions.Fraction`.  Weight
sequences built from powers of two plus tiny powers of three (exponents in
the millions) stay cheap: the tail is only expanded to the precision needed
to decide a comparison.  Values with an empty tail are returned as plain
``Fraction`` objects by every operation, so code written against
``Fraction`` works unchanged.
"""

from __future__ import annotations

import math
import re
import sys
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Union

__all__ = ["Triadic", "triadic", "to_str", "parse_exact", "as_fraction", "is_exact"]

Exact = Union[Fraction, "Triadic"]

_HASH_MODULUS = sys.hash_info.modulus
# 3**-_FLOAT_CUT is still a normal double (~1e-287)
_FLOAT_CUT = 600
_LOG2_3 = math.log2(3)
_REFINE_CUTS = (64, 256, 1024, 4096, 16384, 65536)


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


def _coef(d):
    # integral coefficients stay ints: int arithmetic is far cheaper
    if type(d) is int:
        return d
    d = _frac(d)
    return d.numerator if d.denominator == 1 else d


def triadic(const, terms: Mapping[int, object] | Iterable[tuple[int, object]] = ()) -> Exact:
    """Build ``const + sum(d * 3**-i)``; collapses to ``Fraction`` when the tail is empty."""
    items = terms.items() if isinstance(terms, Mapping) else terms
    tail = {}
    for i, d in items:
        if i < 1:
            raise ValueError(f"ternary exponent must be positive, got {i}")
        tail[i] = tail.get(i, 0) + _coef(d)
    return _build(_frac(const), tail)


def _build(const: Fraction, tail: dict) -> Exact:
    items = sorted((i, d) for i, d in tail.items() if d)
    if not items:
        return const
    return Triadic._raw(const, tuple(items))


class Triadic:
    """Exact number ``const + sum(d_i * 3**-i)`` with a non-empty tail.

    Use :func:`triadic` to construct; it normalises the tail and returns a
    ``Fraction`` when nothing is left of it.
    """

    __slots__ = ("const", "terms", "_hash", "_sign")

    const: Fraction
    terms: tuple[tuple[int, int | Fraction], ...]

    @classmethod
    def _raw(cls, const: Fraction, terms: tuple[tuple[int, Fraction], ...]) -> "Triadic":
        self = object.__new__(cls)
        self.const = const
        self.terms = terms
        self._hash = None
        self._sign = None
        return self

    # -- structure -----------------------------------------------------
    @property
    def max_exponent(self) -> int:
        return self.terms[-1][0]

    def to_fraction(self) -> Fraction:
        """Materialise the exact value.  Cost grows with the largest exponent."""
        top = self.max_exponent
        num = sum(d * 3 ** (top - i) for i, d in self.terms)
        return self.const + Fraction(num) / 3**top

    # -- sign ------------------------------------------------------------
    def sign(self) -> int:
        if self._sign is None:
            self._sign = _sign(self.const, self.terms)
        return self._sign

    # -- arithmetic ------------------------------------------------------
    def _combine(self, other, scale: int):
        t = type(other)
        if t is Triadic:
            oc, ot = other.const, other.terms
        elif t is Fraction:
            oc, ot = other, ()
        elif t is int:
            oc, ot = Fraction(other), ()
        else:
            return NotImplemented
        tail = dict(self.terms)
        get = tail.get
        if scale > 0:
            for i, d in ot:
                tail[i] = get(i, 0) + d
            const = self.const + oc if oc else self.const
        else:
            for i, d in ot:
                tail[i] = get(i, 0) - d
            const = self.const - oc if oc else self.const
        return _build(const, tail)

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        res = self._combine(other, -1)
        return NotImplemented if res is NotImplemented else -res

    def __neg__(self):
        return Triadic._raw(-self.const, tuple((i, -d) for i, d in self.terms))

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return Fraction(0)
            return Triadic._raw(
                self.const * other, tuple((i, _coef(d * other)) for i, d in self.terms)
            )
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        return NotImplemented

    def __float__(self) -> float:
        return math.fsum(
            [float(self.const)] + [float(d) * 3.0**-i for i, d in self.terms if i <= _FLOAT_CUT]
        )

    def __bool__(self) -> bool:
        return self.sign() != 0

    # -- comparison ------------------------------------------------------
    def _cmp(self, other):
        diff = self - other
        if diff is NotImplemented:
            return None
        return diff.sign() if isinstance(diff, Triadic) else (diff > 0) - (diff < 0)

    def __eq__(self, other):
        if isinstance(other, Triadic) and other.terms == self.terms:
            return self.const == other.const
        if isinstance(other, float):
            return float(self) == other and self.to_fraction() == Fraction(other)
        c = self._cmp(other)
        return NotImplemented if c is None else c == 0

    def __lt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c < 0

    def __le__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c <= 0

    def __gt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c > 0

    def __ge__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c >= 0

    def __hash__(self) -> int:
        # agrees with hash(self.to_fraction()) without materialising it
        if self._hash is None:
            try:
                dinv = pow(self.const.denominator, -1, _HASH_MODULUS)
            except ValueError:
                self._hash = hash(self.to_fraction())
                return self._hash
            field = self.const.numerator % _HASH_MODULUS * dinv
            for i, d in self.terms:
                field += d.numerator * pow(d.denominator * pow(3, i, _HASH_MODULUS), -1, _HASH_MODULUS)
            field %= _HASH_MODULUS
            if self.sign() < 0:
                field = (-field) % _HASH_MODULUS
                h = -field
            else:
                h = field
            self._hash = -2 if h == -1 else h
        return self._hash

    def __repr__(self) -> str:
        return f"Triadic({to_str(self)!r})"

    def __str__(self) -> str:
        return to_str(self)


def _log2(q: Fraction) -> int:
    # floor-ish log2 of |q|, accurate to within one
    return abs(q.numerator).bit_length() - q.denominator.bit_length()


def _sign(const: Fraction, terms) -> int:
    lead, d0 = terms[0]
    rest = max((abs(d) for _, d in terms[1:]), default=0)
    # sum_{i > lead} |d_i| 3**-i <= rest * 3**-lead / 2
    if not const:
        if 2 * abs(d0) > rest:
            return 1 if d0 > 0 else -1
    else:
        # const dominates when the whole tail is far below it
        weight = abs(d0) + rest
        if _log2(const) - 2 > _log2(Fraction(weight)) - lead * _LOG2_3 + 2:
            return 1 if const > 0 else -1
    # work with value * 3**lead so the leading tail term is O(1); a const
    # that survived the dominance test is never tiny next to 3**-lead
    scaled = const * 3**lead if const else const
    rel = [(i - lead, d) for i, d in terms]

    head = [float(scaled)]
    tail_weight = 0.0
    for i, d in rel:
        if i <= _FLOAT_CUT:
            head.append(float(d) * 3.0**-i)
        else:
            tail_weight += abs(float(d))
    approx = math.fsum(head)
    err = 2.0**-49 * (math.fsum(abs(t) for t in head) + abs(approx))
    err += tail_weight * 3.0**-_FLOAT_CUT + 1e-300
    if math.isfinite(approx) and abs(approx) > err:
        return 1 if approx > 0 else -1

    for cut in _REFINE_CUTS + (rel[-1][0],):
        inside = [(i, d) for i, d in rel if i <= cut]
        outside = [abs(d) for i, d in rel if i > cut]
        top = inside[-1][0]
        num = sum(d * 3 ** (top - i) for i, d in inside)
        value = scaled + Fraction(num) / 3**top
        if not outside:
            return (value > 0) - (value < 0)
        bound = sum(outside) / Fraction(3) ** (cut + 1) * Fraction(3, 2)
        if abs(value) > bound:
            return 1 if value > 0 else -1
    raise AssertionError("unreachable")  # pragma: no cover


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, Triadic))


def as_fraction(x) -> Fraction:
    if isinstance(x, Triadic):
        return x.to_fraction()
    return _frac(x)


def _rat_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def to_str(x, notation: str = "auto", digit_limit: int = 4000) -> str:
    """Render an exact value.

    ``notation`` is ``"fraction"`` (always ``p/q``), ``"triadic"`` (the
    compact ``c+3^-i`` form) or ``"auto"`` (``p/q`` unless the denominator
    would exceed ``digit_limit`` decimal digits).
    """
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    if isinstance(x, Fraction):
        return _rat_str(x)
    if not isinstance(x, Triadic):
        raise TypeError(f"cannot render {type(x).__name__} exactly")
    if notation == "fraction" or (
        notation == "auto" and x.max_exponent * 0.48 < digit_limit
    ):
        return _rat_str(x.to_fraction())
    out = [_rat_str(x.const)]
    for i, d in x.terms:
        sign = "-" if d < 0 else "+"
        mag = abs(d)
        coef = "" if mag == 1 else f"{_rat_str(mag)}*"
        out.append(f"{sign}{coef}3^-{i}")
    return "".join(out)


_CONST = re.compile(r"\s*(-?\d+(?:/\d+)?)")
_TERM = re.compile(r"\s*([+-])\s*(?:(\d+(?:/\d+)?)\s*\*\s*)?3\^-(\d+)")


def parse_exact(text: str) -> Exact:
    """Inverse of :func:`to_str`; accepts ``p``, ``p/q`` and ``c+d*3^-i`` forms."""
    m = _CONST.match(text)
    if not m:
        raise ValueError(f"not an exact value: {text!r}")
    const = Fraction(m.group(1))
    pos = m.end()
    tail: dict[int, Fraction] = {}
    while pos < len(text.rstrip()):
        t = _TERM.match(text, pos)
        if not t:
            raise ValueError(f"not an exact value: {text!r}")
        d = Fraction(t.group(2)) if t.group(2) else Fraction(1)
        i = int(t.group(3))
        tail[i] = tail.get(i, 0) + (-d if t.group(1) == "-" else d)
        pos = t.end()
    return triadic(const, tail)
