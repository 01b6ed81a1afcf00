"""Exact law of X_m, the sum of m independent random signs.

Probabilities are :class:`ExactDyadic` values ``numerator / 2**exponent``
with the denominator kept as an explicit power of two, so the usual
normalization and tail/CDF identities become integer identities.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import IndexOutOfRange, NotInSupport
from .numerics import to_fraction


@dataclass(frozen=True, eq=False)
class ExactDyadic:
    """The exact probability ``numerator / 2**exponent``; never reduced.

    Comparisons (including ``==``) are by value, so ``ExactDyadic(2, 3)``
    equals ``ExactDyadic(1, 2)`` and ``Fraction(1, 4)``.
    """

    numerator: int
    exponent: int

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("exponent must be non-negative")
        if not 0 <= self.numerator <= 1 << self.exponent:
            raise ValueError("dyadic probability outside [0, 1]")

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def complement(self) -> "ExactDyadic":
        return ExactDyadic((1 << self.exponent) - self.numerator, self.exponent)

    def __add__(self, other: "ExactDyadic") -> "ExactDyadic":
        if not isinstance(other, ExactDyadic):
            return NotImplemented
        e = max(self.exponent, other.exponent)
        return ExactDyadic((self.numerator << (e - self.exponent))
                           + (other.numerator << (e - other.exponent)), e)

    def __float__(self) -> float:
        return float(self.to_fraction())

    def __lt__(self, other):
        return self.to_fraction() < _frac(other)

    def __le__(self, other):
        return self.to_fraction() <= _frac(other)

    def __gt__(self, other):
        return self.to_fraction() > _frac(other)

    def __ge__(self, other):
        return self.to_fraction() >= _frac(other)

    def __eq__(self, other):
        try:
            return self.to_fraction() == _frac(other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash(self.to_fraction())

    def log2_exact(self):
        """``log2`` as an int when the value is a power of two, else None."""
        n = self.numerator
        if n > 0 and n & (n - 1) == 0:
            return n.bit_length() - 1 - self.exponent
        return None

    def __str__(self):
        return f"{self.numerator}/2^{self.exponent}"


def _frac(x) -> Fraction:
    return x.to_fraction() if isinstance(x, ExactDyadic) else to_fraction(x)


@dataclass(frozen=True)
class TailPoint:
    m: int
    k: int
    p: ExactDyadic
    x: Fraction


def binom_coeff(m: int, i: int) -> int:
    """C(m, i) by the multiplicative recurrence; 0 outside 0 <= i <= m."""
    if m < 0:
        raise ValueError("m must be non-negative")
    if i < 0 or i > m:
        return 0
    i = min(i, m - i)
    c = 1
    for j in range(i):
        c = c * (m - j) // (j + 1)
    return c


def binom_row(m: int) -> list[int]:
    """All coefficients C(m, 0..m)."""
    row = [1]
    for j in range(m):
        row.append(row[-1] * (m - j) // (j + 1))
    return row


def _check_tail_index(m: int, k: int) -> None:
    if m < 2 or m % 2:
        raise IndexOutOfRange(f"m must be a positive even integer, got {m}")
    if not m // 2 < k <= m:
        raise IndexOutOfRange(f"k={k} outside m/2 < k <= m for m={m}")


def tail_prob(m: int, k: int) -> ExactDyadic:
    """p_{k,m} = P(X_m >= 2k - m) = 2^-m sum_{i=k}^m C(m, i)."""
    _check_tail_index(m, k)
    total = 0
    c = 1  # C(m, m - j)
    for j in range(m - k + 1):
        total += c
        c = c * (m - j) // (j + 1)
    return ExactDyadic(total, m)


def tail_numerators(m: int) -> dict[int, int]:
    """Numerators of p_{k,m} for every valid k, in one O(m) pass."""
    _check_tail_index(m, m)
    out = {}
    total = 0
    c = 1
    for j in range(m // 2):
        total += c
        out[m - j] = total
        c = c * (m - j) // (j + 1)
    return out


def tail_point(m: int, k: int) -> TailPoint:
    return TailPoint(m, k, tail_prob(m, k), Fraction(2 * k - m, m))


def support(m: int) -> list[int]:
    """{-m, -m+2, ..., m} in ascending order."""
    if m < 0:
        raise ValueError("m must be non-negative")
    return list(range(-m, m + 1, 2))


def _support_index(m: int, s: int) -> int:
    if m < 1:
        raise ValueError("m must be positive")
    if not isinstance(s, int) or not -m <= s <= m or (s + m) % 2:
        raise NotInSupport(f"{s!r} is not a support point of X_{m}")
    return (s + m) // 2


def pmf(m: int, s: int) -> ExactDyadic:
    """P(X_m = s)."""
    return ExactDyadic(binom_coeff(m, _support_index(m, s)), m)


def cdf(m: int, s: int) -> ExactDyadic:
    """P(X_m <= s)."""
    i = _support_index(m, s)
    return ExactDyadic(sum(binom_row(m)[: i + 1]), m)


def cdf_table(m: int) -> list[ExactDyadic]:
    """P(X_m <= s) for every support point s, ascending."""
    out = []
    total = 0
    for c in binom_row(m):
        total += c
        out.append(ExactDyadic(total, m))
    return out
