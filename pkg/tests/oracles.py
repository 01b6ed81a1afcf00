"""Independent reference implementations used only by the tests.

None of these share code with the package: the Gaussian tail comes from
mpmath's erfc or from quadrature of the density, the binomial law from
Pascal's triangle or enumeration, and Delta from a double-precision port of
the R program that produced the original figures (scipy's isf and brentq in
place of qnorm and uniroot).
"""

import itertools
import math
from fractions import Fraction

import mpmath
from scipy.optimize import brentq
from scipy.stats import norm


def pascal_row(m):
    row = [1]
    for _ in range(m):
        row = [a + b for a, b in zip([0] + row, row + [0])]
    return row


def enumerate_sums(m):
    """Exact law of a sum of m random signs by listing all 2^m outcomes."""
    counts = {}
    for signs in itertools.product((-1, 1), repeat=m):
        s = sum(signs)
        counts[s] = counts.get(s, 0) + 1
    return {s: Fraction(c, 2 ** m) for s, c in counts.items()}


def _mp(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def q_erfc(x, dps=60):
    with mpmath.workdps(dps):
        return mpmath.erfc(_mp(x) / mpmath.sqrt(2)) / 2


def q_quad(x, dps=60):
    """Q(x) by integrating the standard normal density over [x, inf)."""
    with mpmath.workdps(dps):
        x = _mp(x)
        dens = lambda t: mpmath.exp(-t * t / 2) / mpmath.sqrt(2 * mpmath.pi)
        return mpmath.quad(dens, [x, x + 1, x + 4, mpmath.inf])


def rate_g(x):
    out = 0.0
    if x > -1:
        out += (1 + x) * math.log1p(x)
    if x < 1:
        out += (1 - x) * math.log1p(-x)
    return out


def ginv(u):
    if u <= 0:
        return 0.0
    top = math.sqrt(math.log(4))
    if u >= top:
        return 1.0
    return brentq(lambda x: math.sqrt(max(rate_g(x), 0.0)) - u, 0.0, 1.0,
                  xtol=1e-300, rtol=8.9e-16, maxiter=500)


def recurrence_deltas(m):
    """{k: Delta_{k,m}} by a plain double-precision recurrence.

    Loops i = 0..m/2-1 with a running binomial sum; i maps to k = m - i.
    """
    out = {}
    total = 0
    divisor = 2.0 ** m
    binc = 1
    for i in range(m // 2):
        total += binc
        y = norm.isf(total / divisor) / math.sqrt(m)
        b = ginv(y)
        binc = (m - i) * binc // (i + 1)
        out[m - i] = 10 * (m - 2 * i - 1 - m * b)
    return out
