"""Precision-parameterized reals, safeguarded root finding, certified comparison.

Real numbers are mpmath ``mpf`` values computed under an explicit working
precision ``prec`` (bits).  A :class:`LazyReal` wraps a function
``prec -> mpf``; its :class:`Enclosure` at precision P is obtained by
evaluating at P and at 2P and taking the difference plus the accuracy
contract of the 2P evaluation as radius.

mpmath keeps its working precision in a process-global context, so these
routines are pure per process; parallel callers use processes, not threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Union

import mpmath
from mpmath import mp, mpf
from mpmath.libmp import from_rational, mpf_add, mpf_sub

from .errors import EvaluationFailure, InvalidBracket, NoSignChange, TusnadyError

DEFAULT_PREC = 128
MAX_PREC = 4096

# Bits of slack granted to a composite expression evaluated at 2P.
SLACK_BITS = 16

Real = mpf


def to_fraction(x) -> Fraction:
    """Exact rational value of ``x``.

    Accepts ints, Fractions, floats, decimal strings, mpf values and any object
    with a ``to_fraction()`` method (e.g. :class:`~tusnady.binomial.ExactDyadic`).
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(x)
    if isinstance(x, mpf):
        if not mpmath.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        sign, man, exp, _ = x._mpf_
        man = -int(man) if sign else int(man)
        return Fraction(man << exp) if exp >= 0 else Fraction(man, 1 << -exp)
    if hasattr(x, "to_fraction"):
        return x.to_fraction()
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def rational_to_mpf(q: Fraction, prec: int) -> mpf:
    """Round an exact rational to ``prec`` bits."""
    with mp.workprec(prec):
        return mpf(q.numerator) / q.denominator


@dataclass(frozen=True)
class Enclosure:
    """Closed interval ``[mid - rad, mid + rad]`` known to contain a real."""

    mid: mpf
    rad: mpf
    prec: int

    @property
    def lo(self) -> Fraction:
        return to_fraction(self.mid) - to_fraction(self.rad)

    @property
    def hi(self) -> Fraction:
        return to_fraction(self.mid) + to_fraction(self.rad)

    @property
    def width(self) -> mpf:
        return 2 * self.rad

    def lower(self) -> mpf:
        """``mid - rad`` rounded toward -inf (cheap even for extreme exponents)."""
        return mp.make_mpf(mpf_sub(self.mid._mpf_, self.rad._mpf_, 2 * self.prec + 16, "f"))

    def upper(self) -> mpf:
        """``mid + rad`` rounded toward +inf."""
        return mp.make_mpf(mpf_add(self.mid._mpf_, self.rad._mpf_, 2 * self.prec + 16, "c"))

    def contains(self, x) -> bool:
        q = to_fraction(x)
        return self.lo <= q <= self.hi


class LazyReal:
    """A real expression that can be evaluated at any precision on demand.

    ``fn(prec)`` must return the value with relative error well below
    ``2**(SLACK_BITS - prec)`` (relative to ``scale`` when given, for
    expressions that suffer cancellation).  Evaluations are memoized per
    precision.
    """

    def __init__(self, fn: Callable[[int], mpf], scale=None, name: str = ""):
        self._fn = fn
        self._cache: dict[int, mpf] = {}
        self.scale = scale
        self.name = name

    def __repr__(self):
        return f"LazyReal({self.name or self._fn!r})"

    def at(self, prec: int) -> mpf:
        try:
            return self._cache[prec]
        except KeyError:
            pass
        try:
            value = self._fn(prec)
        except (TusnadyError, ValueError, ZeroDivisionError, OverflowError) as exc:
            raise EvaluationFailure(
                f"evaluation of {self!r} failed at {prec} bits: {exc}"
            ) from exc
        self._cache[prec] = value
        return value

    def enclose(self, prec: int) -> Enclosure:
        lo_p = self.at(prec)
        hi_p = self.at(2 * prec)
        with mp.workprec(2 * prec + 8):
            size = abs(hi_p)
            if self.scale is not None:
                size = max(size, mpf(self.scale))
            rad = abs(lo_p - hi_p) + mpmath.ldexp(size, SLACK_BITS - 2 * prec)
            # round the radius outward
            rad = rad * (1 + mpmath.ldexp(1, -prec)) + mpmath.ldexp(1, -4 * prec)
        return Enclosure(lo_p, rad, prec)


class Relation(enum.Enum):
    LESS = "less"
    GREATER = "greater"
    UNDECIDABLE = "undecidable"


@dataclass(frozen=True)
class CompareOutcome:
    relation: Relation
    precision: int

    @property
    def decided(self) -> bool:
        return self.relation is not Relation.UNDECIDABLE


Operand = Union[LazyReal, Callable[[int], mpf], Fraction, int, float, str, mpf]


def _as_operand(x) -> Union[LazyReal, Fraction]:
    if isinstance(x, LazyReal):
        return x
    if callable(x) and not hasattr(x, "to_fraction"):
        return LazyReal(x)
    return to_fraction(x)


def _bounds(x, prec) -> tuple[mpf, mpf]:
    if isinstance(x, Fraction):
        w = 2 * prec + 16
        return (mp.make_mpf(from_rational(x.numerator, x.denominator, w, "f")),
                mp.make_mpf(from_rational(x.numerator, x.denominator, w, "c")))
    enc = x.enclose(prec)
    return enc.lower(), enc.upper()


def certified_compare(a: Operand, b: Operand, prec_start: int = DEFAULT_PREC,
                      prec_max: int = MAX_PREC) -> CompareOutcome:
    """Decide ``a < b`` or ``a > b`` from disjoint enclosures.

    Exact operands (ints, Fractions, floats, decimal strings, mpf) are compared
    exactly; callables and :class:`LazyReal` are enclosed at precision
    ``prec_start, 2*prec_start, ...`` up to ``prec_max``.  Equal values can
    never be separated and yield ``UNDECIDABLE`` at ``prec_max``.
    """
    a, b = _as_operand(a), _as_operand(b)
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        if a < b:
            return CompareOutcome(Relation.LESS, prec_start)
        if a > b:
            return CompareOutcome(Relation.GREATER, prec_start)
        return CompareOutcome(Relation.UNDECIDABLE, prec_max)
    prec = prec_start
    while True:
        a_lo, a_hi = _bounds(a, prec)
        b_lo, b_hi = _bounds(b, prec)
        if a_hi < b_lo:
            return CompareOutcome(Relation.LESS, prec)
        if a_lo > b_hi:
            return CompareOutcome(Relation.GREATER, prec)
        if prec >= prec_max:
            return CompareOutcome(Relation.UNDECIDABLE, prec)
        prec = min(2 * prec, prec_max)


@dataclass(frozen=True)
class RootResult:
    root: mpf
    bracket_lo: mpf
    bracket_hi: mpf
    iterations: int = field(default=0)

    @property
    def width(self) -> mpf:
        return self.bracket_hi - self.bracket_lo


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def find_root_monotone(g: Callable[[mpf], mpf], lo, hi, tol, prec: int = DEFAULT_PREC,
                       *, fprime: Optional[Callable[[mpf], mpf]] = None,
                       start=None, g_lo=None, g_hi=None,
                       max_iter: int = 100_000) -> RootResult:
    """Bracketed root of a monotone function.

    Newton steps (or Illinois-weighted secant steps when ``fprime`` is None)
    are taken from the latest iterate; any step leaving the live bracket, or failing to shrink
    it, is replaced by bisection.  When a Newton step gets below ``tol/2`` the
    next probe is pushed ``tol/4`` past the predicted root so that the far
    end of the bracket closes too.

    ``g_lo``/``g_hi`` may supply values (or just signs) of ``g`` at the
    endpoints that are already known, saving two evaluations.
    """
    with mp.workprec(prec):
        lo, hi, tol = mpf(lo), mpf(hi), mpf(tol)
        if not lo < hi:
            raise InvalidBracket(f"empty bracket [{lo}, {hi}]")
        if not tol > 0:
            raise ValueError("tolerance must be positive")
        g_lo = g(lo) if g_lo is None else g_lo
        if g_lo == 0:
            return RootResult(lo, lo, lo, 0)
        g_hi = g(hi) if g_hi is None else g_hi
        if g_hi == 0:
            return RootResult(hi, hi, hi, 0)
        s_lo = _sign(g_lo)
        if s_lo == _sign(g_hi):
            raise NoSignChange(f"g has sign {s_lo:+d} at both {lo} and {hi}")
        f_lo, f_hi = abs(mpf(g_lo)), abs(mpf(g_hi))

        x = mpf(start) if start is not None and lo < start < hi else (lo + hi) / 2
        iterations = 0
        last_width = hi - lo
        last_step = None
        stalls = 0
        side = 0
        while hi - lo > tol and iterations < max_iter:
            iterations += 1
            gx = g(x)
            if gx == 0:
                return RootResult(x, x, x, iterations)
            if _sign(gx) == s_lo:
                lo, f_lo = x, abs(gx)
                if side == -1:
                    f_hi /= 2
                side = -1
            else:
                hi, f_hi = x, abs(gx)
                if side == 1:
                    f_lo /= 2
                side = 1
            width = hi - lo
            if width <= tol:
                break

            cand = None
            if fprime is not None:
                d = fprime(x)
                if d:
                    cand = x - gx / d
                    step = abs(cand - x)
                    # Newton must at least halve its step each round
                    stalls = stalls + 1 if last_step is not None and step > last_step / 2 else 0
                    last_step = step
                    if step < tol / 2:
                        # probe just beyond the root, on the side opposite x
                        cand = max(cand, x) + tol / 4 if x == lo else min(cand, x) - tol / 4
            else:
                stalls = stalls + 1 if width > last_width / 2 else 0
                if f_lo + f_hi:
                    cand = lo + width * f_lo / (f_lo + f_hi)
            last_width = width
            if stalls >= 3 or cand is None or not lo < cand < hi:
                cand = lo + width / 2
                stalls = 0
                last_step = None
                if cand == lo or cand == hi:
                    # tolerance finer than the working precision can resolve
                    break
            x = cand
        root = lo if f_lo <= f_hi else hi
        return RootResult(root, lo, hi, iterations)
