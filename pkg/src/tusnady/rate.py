"""Rate function of the symmetric walk and Chernoff functions of general laws.

``f(x) = sqrt((1+x)log(1+x) + (1-x)log(1-x))`` on [0, 1], and for a law with
moment generator R: ``psi = R'/R``, ``alpha = psi^{-1}`` and the Chernoff
function ``rho(x) = R(alpha(x)) exp(-x alpha(x))``.  Matching
``rho_F(x) = rho_G(y)`` against the standard normal gives
``y = sqrt(-2 log rho_F(x))``; for random signs this is exactly ``f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import mpmath
from mpmath import mp, mpf

from .errors import DomainError, RangeError
from .gaussian import as_mpf
from .numerics import DEFAULT_PREC, find_root_monotone

_LOG4 = math.log(4)


def _radicand_and_slope(x: mpf, prec: int) -> tuple[mpf, mpf]:
    """``(1+x)log(1+x) + (1-x)log(1-x)`` and its derivative ``log((1+x)/(1-x))``.

    For small x both halves are ~x and cancel to ~x^2; the working precision
    grows by log2(1/x) bits to compensate, and by the same amount again so
    that 1 +- x are exact.
    """
    extra = max(0, -int(mpmath.mag(x))) if x else 0
    with mp.workprec(prec + 16 + 2 * extra):
        up = mpmath.log(1 + x)
        down = mpmath.log(1 - x)
        return (1 + x) * up + (1 - x) * down, up - down


def f_eval(x, prec: int = DEFAULT_PREC) -> mpf:
    """The rate function f on [0, 1], with f(0) = 0 and f(1) = sqrt(log 4)."""
    x = as_mpf(x, prec + 32)
    if x < 0 or x > 1:
        raise DomainError(f"f is defined on [0, 1], got {x}")
    with mp.workprec(prec + 8):
        if x == 0:
            return mpf(0)
        if x == 1:
            return mpmath.sqrt(2 * mp.ln2)
        return mpmath.sqrt(_radicand_and_slope(x, prec)[0])


def f_squared(x, prec: int = DEFAULT_PREC) -> mpf:
    x = as_mpf(x, prec + 32)
    if x < 0 or x > 1:
        raise DomainError(f"f is defined on [0, 1], got {x}")
    if x == 0:
        return mpf(0)
    if x == 1:
        with mp.workprec(prec + 8):
            return 2 * mp.ln2
    return _radicand_and_slope(x, prec)[0]


def _float_f_inv(u: float) -> float:
    target = u * u
    # G(x)/x^2 rises from 1 to log 4, so the root lies in [u/sqrt(log 4), u]
    x = min(u, 1 - 1e-16)
    for _ in range(60):
        g = (1 + x) * math.log1p(x) + (1 - x) * math.log1p(-x) - target
        slope = math.log1p(x) - math.log1p(-x)
        if slope <= 0:
            break
        step = g / slope
        x = min(max(x - step, 1e-300), 1 - 1e-16)
        if abs(step) <= 1e-16 * x:
            break
    return x


def f_inv(u, prec: int = DEFAULT_PREC, tol=None, start=None) -> mpf:
    """The x in [0, 1] with f(x) = u, for 0 <= u <= sqrt(log 4).

    Solves ``(1+x)log(1+x) + (1-x)log(1-x) = u^2`` by safeguarded Newton in
    the bracket [0, 1]; ``tol`` bounds the final bracket width (default
    ``2^-(prec+4)``).
    """
    w = prec + 8
    u = as_mpf(u, w + 24)
    if u < 0:
        raise DomainError(f"f_inv needs u >= 0, got {u}")
    if u == 0:
        return mpf(0)
    with mp.workprec(w + 8):
        target = u * u
        excess = target - 2 * mp.ln2
        if excess > mpmath.ldexp(1, 4 - prec):
            raise DomainError(f"f_inv needs u <= sqrt(log 4), got {u}")
        if excess >= 0:
            return mpf(1)
        tol = mpmath.ldexp(1, -(prec + 4)) if tol is None else mpf(tol)
    if start is None:
        start = _float_f_inv(float(u))
    slopes = {}

    def g(x):
        value, slope = _radicand_and_slope(x, w)
        slopes[x] = slope
        return value - target

    def dg(x):
        return slopes[x] if x in slopes else _radicand_and_slope(x, w)[1]

    res = find_root_monotone(g, 0, 1, tol, w + 8, fprime=dg, start=start,
                             g_lo=-target, g_hi=-excess)
    return res.root


def _check_prob(p) -> Fraction:
    p = Fraction(p)
    if not 0 < p < 1:
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    return p


@dataclass(frozen=True)
class MGFSpec:
    """A law given through its moment generator ``R(t) = E exp(tX)``.

    ``R`` and ``R_prime`` take and return mpf values at the ambient mpmath
    precision.  ``domain`` is the open interval of t where R is finite and
    ``support`` the closed hull of the law (psi ranges over its interior).
    Registration checks R(0) = 1, R > 0 and that psi increases on a grid.
    """

    name: str
    R: Callable[[mpf], mpf] = field(repr=False)
    R_prime: Callable[[mpf], mpf] = field(repr=False)
    domain: tuple[float, float] = (-math.inf, math.inf)
    mean: Fraction = Fraction(0)
    support: tuple[float, float] = (-math.inf, math.inf)
    log_R: Optional[Callable[[mpf], mpf]] = field(default=None, repr=False)

    def __post_init__(self):
        with mp.workprec(64):
            if abs(self.R(mpf(0)) - 1) > mpf(2) ** -50:
                raise ValueError(f"{self.name}: R(0) must equal 1")
            lo = max(self.domain[0], -8.0)
            hi = min(self.domain[1], 8.0)
            grid = [lo + (hi - lo) * (j + 0.5) / 33 for j in range(33)]
            prev = None
            for t in grid:
                r = self.R(mpf(t))
                if not r > 0:
                    raise ValueError(f"{self.name}: R({t}) is not positive")
                cur = self.R_prime(mpf(t)) / r
                if prev is not None and not cur > prev:
                    raise ValueError(f"{self.name}: psi is not increasing near t={t}")
                prev = cur

    def log_mgf(self, t: mpf) -> mpf:
        return self.log_R(t) if self.log_R is not None else mpmath.log(self.R(t))


def rademacher() -> MGFSpec:
    return MGFSpec("rademacher", mpmath.cosh, mpmath.sinh, support=(-1.0, 1.0),
                   log_R=lambda t: abs(t) + mpmath.log1p(mpmath.exp(-2 * abs(t))) - mp.ln2)


def standard_normal() -> MGFSpec:
    return MGFSpec("normal", lambda t: mpmath.exp(t * t / 2),
                   lambda t: t * mpmath.exp(t * t / 2), log_R=lambda t: t * t / 2)


def bernoulli_pm(p) -> MGFSpec:
    """Values +1 (probability p) and -1 (probability 1 - p)."""
    p = _check_prob(p)

    def R(t):
        pp = mpf(p.numerator) / p.denominator
        return pp * mpmath.exp(t) + (1 - pp) * mpmath.exp(-t)

    def R_prime(t):
        pp = mpf(p.numerator) / p.denominator
        return pp * mpmath.exp(t) - (1 - pp) * mpmath.exp(-t)

    return MGFSpec(f"bernoulli:{p}", R, R_prime, mean=2 * p - 1, support=(-1.0, 1.0))


def poisson(lam) -> MGFSpec:
    lam = Fraction(lam)
    if lam <= 0:
        raise DomainError(f"poisson rate must be positive, got {lam}")

    def lam_mpf():
        return mpf(lam.numerator) / lam.denominator

    def R(t):
        return mpmath.exp(lam_mpf() * mpmath.expm1(t))

    def R_prime(t):
        return lam_mpf() * mpmath.exp(t) * R(t)

    return MGFSpec(f"poisson:{lam}", R, R_prime, mean=lam, support=(0.0, math.inf),
                   log_R=lambda t: lam_mpf() * mpmath.expm1(t))


def parse_distribution(text: str) -> MGFSpec:
    """``rademacher``, ``normal``, ``bernoulli:<p>`` or ``poisson:<lambda>``."""
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    try:
        if name == "rademacher" and not arg:
            return rademacher()
        if name in ("normal", "standard_normal", "gauss") and not arg:
            return standard_normal()
        if name == "bernoulli" and arg:
            return bernoulli_pm(Fraction(arg))
        if name == "poisson" and arg:
            return poisson(Fraction(arg))
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"bad distribution parameter in {text!r}: {exc}") from exc
    raise DomainError(f"unknown distribution {text!r}")


def _in_domain(spec: MGFSpec, t) -> bool:
    return spec.domain[0] < t < spec.domain[1]


def psi(spec: MGFSpec, t, prec: int = DEFAULT_PREC) -> mpf:
    """R'(t)/R(t), the mean of the exponentially tilted law."""
    with mp.workprec(prec + 16):
        t = as_mpf(t, prec + 16)
        if not _in_domain(spec, t):
            raise DomainError(f"t={t} outside the domain of {spec.name}")
        return spec.R_prime(t) / spec.R(t)


def alpha(spec: MGFSpec, x, prec: int = DEFAULT_PREC) -> mpf:
    """The t with psi(t) = x, found inside an expanding bracket [0, 2^j]."""
    w = prec + 16
    x = as_mpf(x, w + 16)
    mean = as_mpf(spec.mean, w + 16)
    lo_s, hi_s = spec.support
    if not lo_s < x < hi_s:
        raise RangeError(f"x={x} is outside the open range of psi for {spec.name}")
    if x == mean:
        return mpf(0)
    direction = 1 if x > mean else -1

    def g(t):
        return psi(spec, t, w) - x

    with mp.workprec(w):
        bound = mpf(spec.domain[1] if direction > 0 else -spec.domain[0])
        for j in range(65):
            edge = mpf(2) ** j
            last = edge >= bound
            if last:
                edge = bound * (1 - mpf(2) ** -20)
            if direction * g(direction * edge) > 0:
                break
            if last:
                break
        else:
            last = True
        if last and not direction * g(direction * edge) > 0:
            raise RangeError(f"x={x} is not attained by psi for {spec.name}")
        lo, hi = (0, edge) if direction > 0 else (-edge, 0)
        tol = mpmath.ldexp(max(edge, 1), -(prec + 8))
    return find_root_monotone(g, lo, hi, tol, w).root


def log_rho(spec: MGFSpec, x, prec: int = DEFAULT_PREC) -> mpf:
    """log of the Chernoff function, log R(alpha(x)) - x alpha(x)."""
    w = prec + 32
    x = as_mpf(x, w)
    a = alpha(spec, x, w)
    with mp.workprec(w):
        return spec.log_mgf(a) - x * a


def rho(spec: MGFSpec, x, prec: int = DEFAULT_PREC) -> mpf:
    """The Chernoff function R(alpha(x)) exp(-x alpha(x))."""
    value = log_rho(spec, x, prec)
    with mp.workprec(prec + 16):
        return mpmath.exp(value)


def _above_mean(spec: MGFSpec, x, prec: int) -> mpf:
    x = as_mpf(x, prec + 32)
    if not x > as_mpf(spec.mean, prec + 32):
        raise DomainError(f"x={x} must exceed the mean {spec.mean} of {spec.name}")
    return x


def couple_to_gauss(spec: MGFSpec, x, prec: int = DEFAULT_PREC) -> mpf:
    """Positive y with rho_F(x) = rho_G(y) = exp(-y^2/2)."""
    x = _above_mean(spec, x, prec)
    value = log_rho(spec, x, prec)
    with mp.workprec(prec + 16):
        return mpmath.sqrt(max(-2 * value, mpf(0)))


def chernoff_tail_estimate(spec: MGFSpec, m: int, x, prec: int = DEFAULT_PREC) -> mpf:
    """rho(x)^m, the Chernoff estimate of P(X_1 + ... + X_m >= m x)."""
    if m < 0:
        raise DomainError("m must be non-negative")
    x = _above_mean(spec, x, prec)
    if m == 0:
        return mpf(1)
    value = log_rho(spec, x, prec + int(m).bit_length())
    with mp.workprec(prec + 16):
        return mpmath.exp(m * value)
