"""Standard Gaussian upper tail Q(x) = P(N(0,1) > x), log Q, and Q^{-1}.

The kernel works on the Mills ratio M(x) = Q(x)/phi(x) in fixed-point
integer arithmetic:

* small x: Q = 1/2 - phi(x) * sum_n x^(2n+1)/(2n+1)!!, a series of positive
  terms; the subtraction loses about x^2/(2 ln 2) bits, which are added as
  guard bits;
* large x: 1/M(x) = x + 1/(x + 2/(x + 3/(x + ...))), evaluated forward with
  Lentz's method.  Successive convergents of this fraction straddle the
  limit, so the last correction factor bounds the truncation error.

The switch is at x^2 = prec/5, roughly where the two cost the same.
"""

from __future__ import annotations

import math
import statistics
from fractions import Fraction

import mpmath
from mpmath import mp, mpf
from mpmath.libmp import mpf_neg, to_fixed

from .errors import DomainError
from .numerics import DEFAULT_PREC, RootResult, find_root_monotone, rational_to_mpf, to_fraction

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
_HALF = Fraction(1, 2)


def as_mpf(x, prec: int) -> mpf:
    """Convert a real-like argument (mpf, int, float, Fraction, str) at ``prec`` bits."""
    if isinstance(x, mpf):
        return x
    if isinstance(x, Fraction) or hasattr(x, "to_fraction"):
        return rational_to_mpf(to_fraction(x), prec)
    with mp.workprec(prec):
        return mpf(x)


def _neg(x: mpf) -> mpf:
    """Exact negation (plain ``-x`` would round to the ambient precision)."""
    return mp.make_mpf(mpf_neg(x._mpf_))


def _log_q_and_slope(x: mpf, prec: int) -> tuple[mpf, mpf]:
    """``(log Q(x), d/dx log Q(x))`` for ``x >= 0``, to about 2^-(prec+16)."""
    if x == 0:
        with mp.workprec(prec + 16):
            return -mp.ln2, -mpmath.sqrt(2 / mp.pi)
    xf = float(x)
    if xf * xf * 5 < prec:
        cancel = int(0.7214 * xf * xf) + 2
        w = prec + 32 + cancel
        xfix = to_fixed(x._mpf_, w)
        x2 = (xfix * xfix) >> w
        term = total = xfix
        n = 0
        while term:
            n += 1
            term = ((term * x2) >> w) // (2 * n + 1)
            total += term
        with mp.workprec(w + cancel + 16):
            e = mpmath.sqrt(mp.pi / 2) * mpmath.exp(x * x / 2)
        mills_fix = to_fixed(e._mpf_, w) - total
        with mp.workprec(prec + 16):
            mills = mpmath.ldexp(mpf(mills_fix), -w)
            log_q = mpmath.log(mills) - x * x / 2 - mpmath.log(2 * mp.pi) / 2
            return log_q, -1 / mills

    w = prec + 32
    xfix = to_fixed(x._mpf_, w)
    one = 1 << w
    one2 = one << w
    tau = 1 << (w - prec - 20)
    f = c = xfix
    d = 0
    n = 0
    while True:
        n += 1
        d = one2 // (xfix + n * d)
        c = xfix + n * one2 // c
        delta = (c * d) >> w
        f = (f * delta) >> w
        if abs(delta - one) <= tau:
            break
    with mp.workprec(prec + 16):
        inv_mills = mpmath.ldexp(mpf(f), -w)
        log_q = -mpmath.log(inv_mills) - x * x / 2 - mpmath.log(2 * mp.pi) / 2
        return log_q, -inv_mills


def _guard_bits(x: mpf) -> int:
    return 8 + int(float(x) ** 2).bit_length()


def log_Q(x, prec: int = DEFAULT_PREC) -> mpf:
    """Natural log of Q(x) for x >= 0, without underflow."""
    x = as_mpf(x, prec + 16)
    if x < 0:
        raise DomainError(f"log_Q requires x >= 0, got {x}")
    return _log_q_and_slope(x, prec + 4)[0]


def Q(x, prec: int = DEFAULT_PREC) -> mpf:
    """Upper-tail probability of the standard normal distribution."""
    x = as_mpf(x, prec + 16)
    if x < 0:
        tail = Q(_neg(x), prec + 8)
        with mp.workprec(prec + 8):
            return 1 - tail
    guard = _guard_bits(x)
    log_q = _log_q_and_slope(x, prec + guard)[0]
    with mp.workprec(prec + guard):
        return mpmath.exp(log_q)


def Phi(x, prec: int = DEFAULT_PREC) -> mpf:
    """Standard normal CDF, Phi(x) = Q(-x)."""
    if isinstance(x, (int, Fraction)) or hasattr(x, "to_fraction"):
        return Q(-to_fraction(x), prec)
    return Q(_neg(as_mpf(x, prec + 16)), prec)


def log_rational(q: Fraction, prec: int) -> mpf:
    """log of a positive rational; a power-of-two denominator costs one multiple of ln 2."""
    num, den = q.numerator, q.denominator
    with mp.workprec(prec + 8):
        out = mpmath.log(num) if num != 1 else mpf(0)
        if den & (den - 1) == 0:
            out -= (den.bit_length() - 1) * mp.ln2
        else:
            out -= mpmath.log(den)
        return out


def _float_log_q(x: float) -> float:
    if x < 26:
        return math.log(0.5 * math.erfc(x / math.sqrt(2)))
    # Lentz on 1/M(x) in floating point
    f = c = x
    d = 0.0
    for n in range(1, 60):
        d = 1 / (x + n * d)
        c = x + n / c
        delta = c * d
        f *= delta
        if abs(delta - 1) < 1e-17:
            break
    return -math.log(f) - x * x / 2 - _LOG_SQRT_2PI


def _float_q_inv(q: Fraction) -> float:
    """Double-precision starting point for Q^{-1}(q), 0 < q < 1/2."""
    gap = float(_HALF - q)
    if gap < 1e-6:
        return math.sqrt(2 * math.pi) * gap
    log_p = math.log(q.numerator) - math.log(q.denominator)
    if log_p > -690:
        x = -statistics.NormalDist().inv_cdf(math.exp(log_p))
    else:
        x = math.sqrt(-2 * log_p)
        for _ in range(4):
            x = math.sqrt(max(-2 * (log_p + math.log(x) + _LOG_SQRT_2PI), 1.0))
    for _ in range(3):
        if x <= 0:
            break
        # d/dx log Q = -1/M(x) ~ -(x + 1/x) for large x
        slope = -math.exp(-x * x / 2 - _LOG_SQRT_2PI - _float_log_q(x))
        step = (_float_log_q(x) - log_p) / slope
        x -= step
        if abs(step) < 1e-15 * x:
            break
    return x


def q_inv_root(q, prec: int = DEFAULT_PREC, start=None) -> RootResult:
    """Bracketed solution of Q(x) = q for 0 < q < 1/2 (so x > 0).

    Newton on ``log Q(x) - log q`` inside the a priori bracket
    ``[0, sqrt(-2 log 2q)]`` (from Q(x) <= exp(-x^2/2)/2); the bracket width
    on return is below ``x * 2^-(prec+6)``.
    """
    q = to_fraction(q)
    if not 0 < q < _HALF:
        raise DomainError(f"q_inv_root needs 0 < q < 1/2, got {q}")
    w = prec + 12
    log_p = log_rational(q, w)
    gap = float(_HALF - q)
    if gap < 0.25:
        log_2q = math.log1p(-2 * gap)
    else:
        log_2q = math.log(2 * q.numerator) - math.log(q.denominator)
    hi = math.sqrt(-2 * log_2q) * (1 + 1e-9) + 1e-300
    with mp.workprec(w):
        x0 = mpf(start) if start is not None else mpf(_float_q_inv(q))
        if not 0 < x0 < hi:
            x0 = mpf(hi) / 2
        tol = mpmath.ldexp(x0, -(prec + 6))
    cache = {}

    def h(x):
        log_q, slope = _log_q_and_slope(x, w)
        cache[x] = slope
        return log_q - log_p

    def dh(x):
        return cache[x] if x in cache else _log_q_and_slope(x, w)[1]

    return find_root_monotone(h, 0, hi, tol, w, fprime=dh, start=x0, g_lo=1, g_hi=-1)


def Q_inv(p, prec: int = DEFAULT_PREC) -> mpf:
    """The x with Q(x) = p; positive iff p < 1/2.

    ``p`` may be an :class:`~tusnady.binomial.ExactDyadic`, a Fraction or any
    binary value (float, mpf); it is converted exactly before inversion.
    """
    q = to_fraction(p)
    if not 0 < q < 1:
        raise DomainError(f"Q_inv requires 0 < p < 1, got {p}")
    if q == _HALF:
        return mpf(0)
    if q > _HALF:
        return _neg(q_inv_root(1 - q, prec).root)
    return q_inv_root(q, prec).root
