"""Blow-up errors Delta_{k,m}, the conjectured inequalities, and the quantile transform.

For even m and m/2 < k <= m, with p = P(X_m >= 2k - m) exact,

    y     = Q^{-1}(p) / sqrt(m)
    b     = f^{-1}(y)
    Delta = 10 * (2k - m - 1 - m*b)

and the sharpened conjecture is 0 < Delta < 1.036.  The weak form is
Q(sqrt(m) f(x_k)) < p < Q(sqrt(m) f(x_{k-1})) with x_k = (2k - m)/m.
"""

from __future__ import annotations

import enum
import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath
from mpmath import mp, mpf

from .binomial import ExactDyadic, cdf_table, support, tail_numerators, tail_prob
from .errors import IndexOutOfRange, RangeError, Undecidable
from .gaussian import Q_inv, as_mpf, log_Q, log_rational, q_inv_root
from .numerics import (DEFAULT_PREC, MAX_PREC, Enclosure, LazyReal, Relation,
                       certified_compare, to_fraction)
from .rate import f_eval, f_inv

DELTA_LOWER = Fraction(0)
DELTA_UPPER = Fraction("1.036")
SHARP_CONSTANT = Fraction("1.1036")

# Figure 2 colour bands, labelled as in the original plotting legend.
BANDS = ((200, "0<m <= 200"), (400, "200<m<=400"), (600, "400<m<=600"),
         (800, "600<m<=800"), (1000, "800<m<=1000"))


def band_label(m: int) -> str:
    for upper, label in BANDS:
        if m <= upper:
            return label
    return "m>1000"


def _check_even(m: int) -> None:
    if m < 2 or m % 2:
        raise IndexOutOfRange(f"m must be a positive even integer, got {m}")


def _check_pair(m: int, k: int) -> None:
    _check_even(m)
    if not m // 2 < k <= m:
        raise IndexOutOfRange(f"k={k} outside m/2 < k <= m for m={m}")


@dataclass(frozen=True)
class DeltaRecord:
    m: int
    k: int
    p: ExactDyadic
    y: mpf
    b: mpf
    delta: mpf
    prec: int = DEFAULT_PREC


class _DeltaChain:
    """Delta(m, k) at arbitrary precision; each evaluation seeds the next."""

    def __init__(self, m: int, k: int, p: ExactDyadic):
        self.m, self.k, self.p = m, k, p
        self._q_seed = None
        self._b_seed = None
        self.parts: dict[int, tuple[mpf, mpf, mpf]] = {}

    def __call__(self, prec: int) -> mpf:
        return self.evaluate(prec)[2]

    def evaluate(self, prec: int) -> tuple[mpf, mpf, mpf]:
        if prec in self.parts:
            return self.parts[prec]
        m, k = self.m, self.k
        w = prec + 8 + m.bit_length()
        x = q_inv_root(self.p, w, start=self._q_seed).root
        with mp.workprec(w):
            y = x / mpmath.sqrt(m)
        if not 0 < y < math.sqrt(math.log(4)) or y * y >= 2 * mp.ln2:
            raise RangeError(f"y={y} outside (0, sqrt(log 4)) at m={m}, k={k}")
        b = f_inv(y, w, start=self._b_seed)
        with mp.workprec(w):
            delta = 10 * (2 * k - m - 1 - m * b)
        self._q_seed, self._b_seed = x, b
        self.parts[prec] = (y, b, delta)
        return y, b, delta

    def record(self, prec: int) -> DeltaRecord:
        y, b, d = self.evaluate(prec)
        return DeltaRecord(self.m, self.k, self.p, y, b, d, prec)

    def lazy(self) -> LazyReal:
        return LazyReal(self, scale=10 * self.m, name=f"Delta({self.m},{self.k})")


def delta(m: int, k: int, prec: int = DEFAULT_PREC, p: Optional[ExactDyadic] = None) -> DeltaRecord:
    """Evaluate Delta_{k,m} with p = tail_prob(m, k) (pass ``p`` to skip the sum)."""
    _check_pair(m, k)
    p = tail_prob(m, k) if p is None else p
    return _DeltaChain(m, k, p).record(prec)


def delta_enclosure(m: int, k: int, prec: int = DEFAULT_PREC) -> Enclosure:
    """Interval certified to contain Delta_{k,m}, from its values at ``prec`` and ``2 prec``."""
    _check_pair(m, k)
    return _DeltaChain(m, k, tail_prob(m, k)).lazy().enclose(prec)


class Status(enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNDECIDABLE = "undecidable"


@dataclass(frozen=True)
class CertifiedResult:
    """Outcome of certifying a pair of strict inequalities lower < value < upper.

    ``lower_margin``/``upper_margin`` are certified lower bounds on
    ``value - lower`` and ``upper - value`` at the precision reached (negative
    when the enclosure crosses the bound).
    """

    status: Status
    precision: int
    lower_margin: Optional[mpf] = None
    upper_margin: Optional[mpf] = None
    enclosure: Optional[Enclosure] = field(default=None, repr=False)

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS


def _combine(outcomes, wanted) -> tuple[Status, int]:
    precision = max(o.precision for o in outcomes)
    if any(o.decided and o.relation is not w for o, w in zip(outcomes, wanted)):
        return Status.FAILS, precision
    if all(o.relation is w for o, w in zip(outcomes, wanted)):
        return Status.HOLDS, precision
    return Status.UNDECIDABLE, precision


def _log_p_lazy(p: ExactDyadic) -> LazyReal:
    q = p.to_fraction()
    return LazyReal(lambda prec: log_rational(q, prec), name=f"log {p}")


def _log_q_of_f_lazy(m: int, x: Fraction) -> LazyReal:
    def fn(prec):
        with mp.workprec(prec + 16):
            arg = mpmath.sqrt(m) * f_eval(x, prec + 16)
        return log_Q(arg, prec + 4)

    return LazyReal(fn, name=f"log Q(sqrt({m}) f({x}))")


def _weak_from_sides(p: ExactDyadic, left: Optional[LazyReal], right, log_p: LazyReal,
                     prec_start: int, prec_max: int) -> CertifiedResult:
    # left: log Q(sqrt(m) f(x_k)) < log p;  right: p < Q(sqrt(m) f(x_{k-1}))
    out_left = certified_compare(left, log_p, prec_start, prec_max)
    if right is None:
        out_right = certified_compare(p.to_fraction(), Fraction(1, 2), prec_start, prec_max)
    else:
        out_right = certified_compare(log_p, right, prec_start, prec_max)
    status, precision = _combine((out_left, out_right), (Relation.LESS, Relation.LESS))
    enc = log_p.enclose(precision)
    with mp.workprec(precision + 16):
        left_enc = left.enclose(precision)
        lower = enc.mid - enc.rad - (left_enc.mid + left_enc.rad)
        if right is None:
            upper = -mp.ln2 - (enc.mid + enc.rad)
        else:
            right_enc = right.enclose(precision)
            upper = right_enc.mid - right_enc.rad - (enc.mid + enc.rad)
    return CertifiedResult(status, precision, lower, upper, enc)


def check_weak(m: int, k: int, prec_max: int = MAX_PREC,
               prec_start: int = DEFAULT_PREC) -> CertifiedResult:
    """Certify Q(sqrt(m) f(x_k)) < p_{k,m} < Q(sqrt(m) f(x_{k-1})).

    Both sides are compared in the log domain; margins are in log units.
    When k - 1 = m/2 the right side is Q(0) = 1/2 and is compared exactly.
    """
    _check_pair(m, k)
    p = tail_prob(m, k)
    left = _log_q_of_f_lazy(m, Fraction(2 * k - m, m))
    right = None if k - 1 == m // 2 else _log_q_of_f_lazy(m, Fraction(2 * k - 2 - m, m))
    return _weak_from_sides(p, left, right, _log_p_lazy(p), prec_start, prec_max)


def _sharp_from_lazy(value: LazyReal, prec_start: int, prec_max: int,
                     lower, upper) -> CertifiedResult:
    lower, upper = to_fraction(lower), to_fraction(upper)
    out_lo = certified_compare(value, lower, prec_start, prec_max)
    out_hi = certified_compare(value, upper, prec_start, prec_max)
    status, precision = _combine((out_lo, out_hi), (Relation.GREATER, Relation.LESS))
    enc = value.enclose(precision)
    with mp.workprec(precision + 16):
        lo_margin = enc.mid - enc.rad - mpf(lower.numerator) / lower.denominator
        hi_margin = mpf(upper.numerator) / upper.denominator - (enc.mid + enc.rad)
    return CertifiedResult(status, precision, lo_margin, hi_margin, enc)


def check_sharp(m: int, k: int, prec_max: int = MAX_PREC, prec_start: int = DEFAULT_PREC,
                lower=DELTA_LOWER, upper=DELTA_UPPER) -> CertifiedResult:
    """Certify lower < Delta_{k,m} < upper (default 0 and 1.036).

    The enclosure of Delta (value at P, difference to the value at 2P, plus
    slack) must clear both bounds; the precision doubles up to ``prec_max``.
    """
    _check_pair(m, k)
    chain = _DeltaChain(m, k, tail_prob(m, k))
    return _sharp_from_lazy(chain.lazy(), prec_start, prec_max, lower, upper)


@dataclass(frozen=True)
class PairCertificate:
    record: Optional[DeltaRecord]
    weak: CertifiedResult
    sharp: CertifiedResult
    error: str = ""


def certify_m(m: int, prec_start: int = DEFAULT_PREC, prec_max: int = MAX_PREC,
              lower=DELTA_LOWER, upper=DELTA_UPPER) -> list[PairCertificate]:
    """check_weak and check_sharp for every valid k at one m, sharing work across k."""
    _check_even(m)
    numerators = tail_numerators(m)
    sides = {}

    def side(j):
        if j == m // 2:
            return None
        if j not in sides:
            sides[j] = _log_q_of_f_lazy(m, Fraction(2 * j - m, m))
        return sides[j]

    out = []
    for k in range(m // 2 + 1, m + 1):
        p = ExactDyadic(numerators[k], m)
        weak = _weak_from_sides(p, side(k), side(k - 1), _log_p_lazy(p), prec_start, prec_max)
        chain = _DeltaChain(m, k, p)
        try:
            sharp = _sharp_from_lazy(chain.lazy(), prec_start, prec_max, lower, upper)
        except (RangeError, ArithmeticError) as exc:
            out.append(PairCertificate(None, weak,
                                       CertifiedResult(Status.UNDECIDABLE, prec_start), str(exc)))
            continue
        out.append(PairCertificate(chain.record(sharp.precision), weak, sharp))
    return out


def delta_row(m: int, prec: int = DEFAULT_PREC) -> list[DeltaRecord]:
    """Delta_{k,m} for all k = m/2+1 .. m (one O(m) tail pass)."""
    _check_even(m)
    numerators = tail_numerators(m)
    return [_DeltaChain(m, k, ExactDyadic(numerators[k], m)).record(prec)
            for k in range(m // 2 + 1, m + 1)]


@dataclass
class SweepReport:
    m_max: int
    records: list[DeltaRecord]
    delta_min: mpf
    delta_max: mpf
    argmax: tuple[int, int]
    violations: list[tuple[int, int, str]]


def map_over_m(fn, ms, jobs: int = 1):
    """``[fn(m) for m in ms]``, optionally across worker processes; order is kept."""
    ms = list(ms)
    if jobs <= 1 or len(ms) <= 1:
        return [fn(m) for m in ms]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # largest m first keeps the pool busy
        order = sorted(range(len(ms)), key=lambda i: -ms[i])
        futures = {i: pool.submit(fn, ms[i]) for i in order}
        return [futures[i].result() for i in range(len(ms))]


def sweep(m_max: int, prec: int = DEFAULT_PREC, jobs: int = 1,
          lower=DELTA_LOWER, upper=DELTA_UPPER) -> SweepReport:
    """All Delta_{k,m} for even m <= m_max, with extremes and bound violations."""
    _check_even(m_max)
    rows = map_over_m(functools.partial(delta_row, prec=prec), range(2, m_max + 1, 2), jobs)
    records = [r for row in rows for r in row]
    lower, upper = to_fraction(lower), to_fraction(upper)
    violations = []
    for r in records:
        d = to_fraction(r.delta)
        if not d > lower:
            violations.append((r.m, r.k, f"delta <= {lower}"))
        elif not d < upper:
            violations.append((r.m, r.k, f"delta >= {upper}"))
    best = max(records, key=lambda r: r.delta)
    return SweepReport(m_max, records, min(r.delta for r in records), best.delta,
                       (best.m, best.k), violations)


# -- quantile transform ------------------------------------------------------

@functools.lru_cache(maxsize=256)
def _cdf_fractions(m: int) -> tuple[Fraction, ...]:
    return tuple(c.to_fraction() for c in cdf_table(m))


def _as_exact_or_mpf(y, prec):
    if isinstance(y, (int, Fraction)) or hasattr(y, "to_fraction"):
        return to_fraction(y)
    return as_mpf(y, prec + 32)


def _breakpoint_fn(m: int, tail: Fraction):
    def fn(prec):
        x = Q_inv(tail, prec + 8)
        with mp.workprec(prec + 8):
            return x * mpmath.sqrt(m)
    return fn


@functools.lru_cache(maxsize=64)
def _breakpoints(m: int) -> tuple:
    """Breakpoint j = sqrt(m) Q^{-1}(1 - cdf_j) as a LazyReal, or exactly 0 at the median."""
    out = []
    for c in _cdf_fractions(m)[:-1]:
        tail = 1 - c
        if tail == Fraction(1, 2):
            out.append(Fraction(0))
        else:
            out.append(LazyReal(_breakpoint_fn(m, tail), scale=1, name=f"b({m}, {tail})"))
    return tuple(out)


def psi_m(m: int, y, prec: int = DEFAULT_PREC, prec_max: int = MAX_PREC) -> int:
    """Quantile transform: the support point s of X_m paired with y ~ N(0, m).

    Right-continuous: the smallest s with P(X_m <= s) > Phi(y / sqrt(m)).
    Since P(X_m <= s_j) > Phi(y/sqrt(m)) iff y < b_j = sqrt(m) Q^{-1}(1 - cdf_j),
    the answer is s_i with i the number of breakpoints b_j <= y; each
    comparison with a breakpoint is certified.
    """
    if m < 1:
        raise ValueError("m must be positive")
    y_val = _as_exact_or_mpf(y, prec)
    points = _breakpoints(m)

    def below(j) -> bool:
        # is b_j <= y ?
        b = points[j]
        if isinstance(b, Fraction) and isinstance(y_val, Fraction):
            return b <= y_val
        out = certified_compare(b, y_val, prec, prec_max)
        if not out.decided:
            raise Undecidable(f"psi_m({m}, {y}) sits on a breakpoint within {out.precision} bits",
                              out.precision)
        return out.relation is Relation.LESS

    lo, hi = 0, m  # count of breakpoints <= y lies in [lo, hi]
    while lo < hi:
        mid = (lo + hi) // 2
        if below(mid):
            lo = mid + 1
        else:
            hi = mid
    return -m + 2 * lo


@dataclass(frozen=True)
class StepFunction:
    """Psi_m as ascending breakpoints in the Gaussian domain and support values.

    On [breakpoints[j-1], breakpoints[j]) the value is values[j].
    """

    m: int
    breakpoints: tuple[mpf, ...]
    values: tuple[int, ...]

    def rescaled(self) -> tuple[tuple[mpf, ...], tuple[Fraction, ...]]:
        """Breakpoints as eta = Y/m and values as xi = X/m."""
        with mp.workprec(mp.prec + 16):
            etas = tuple(b / self.m for b in self.breakpoints)
        return etas, tuple(Fraction(v, self.m) for v in self.values)


def step_function(m: int, prec: int = DEFAULT_PREC) -> StepFunction:
    """Breakpoints sqrt(m) Q^{-1}(1 - cdf(m, s)) for every support point but the top."""
    if m < 1:
        raise ValueError("m must be positive")
    points = [mpf(0) if isinstance(b, Fraction) else b.at(prec) for b in _breakpoints(m)]
    return StepFunction(m, tuple(points), tuple(support(m)))


def tusnady_margin(m: int, y, prec: int = DEFAULT_PREC) -> mpf:
    """(y^2/m + 1) - |Psi_m(y) - y|; non-negative where the classical bound holds."""
    s = psi_m(m, y, prec)
    y_val = _as_exact_or_mpf(y, prec)
    if isinstance(y_val, Fraction):
        exact = y_val * y_val / m + 1 - abs(s - y_val)
        return mpf(exact.numerator) / exact.denominator
    with mp.workprec(prec + 16):
        return y_val * y_val / m + 1 - abs(s - y_val)


def sharp_target(m: int, y, prec: int = DEFAULT_PREC) -> tuple[mpf, bool]:
    """(sign(y) m f^{-1}(|y|/m), saturated); saturates at +-m once |y|/m >= sqrt(log 4)."""
    y_val = as_mpf(to_fraction(y) if not isinstance(y, mpf) else y, prec + 32)
    if y_val == 0:
        return mpf(0), False
    with mp.workprec(prec + 16):
        u = abs(y_val) / m
        sign = 1 if y_val > 0 else -1
        if u * u >= 2 * mp.ln2:
            return mpf(sign * m), True
    b = f_inv(u, prec + 8)
    with mp.workprec(prec + 16):
        return sign * m * b, False


def sharp_margin(m: int, y, prec: int = DEFAULT_PREC) -> mpf:
    """1.1036 - |Psi_m(y) - sign(y) m f^{-1}(|y|/m)|."""
    s = psi_m(m, y, prec)
    target, _ = sharp_target(m, y, prec)
    with mp.workprec(prec + 16):
        c = mpf(SHARP_CONSTANT.numerator) / SHARP_CONSTANT.denominator
        return c - abs(s - target)


def tusnady_grid(m: int, prec: int = DEFAULT_PREC, step: Fraction = Fraction(1, 8),
                 gap: Fraction = Fraction(1, 2 ** 40)) -> list:
    """{j*step : |j*step| <= 3 sqrt(m)} plus every breakpoint of Psi_m shifted by +-gap.

    With the default step this is {j/8 : |j| <= 24 sqrt(m)}.
    """
    step = Fraction(step)
    if step <= 0:
        raise ValueError("grid step must be positive")
    jmax = math.isqrt(9 * m * step.denominator ** 2 // step.numerator ** 2)
    grid = [j * step for j in range(-jmax, jmax + 1)]
    with mp.workprec(prec + 16):
        shift = mpf(gap.numerator) / gap.denominator
        for b in step_function(m, prec).breakpoints:
            grid.append(b - shift)
            grid.append(b + shift)
    return grid


# -- figure data -------------------------------------------------------------

def figure1_data(m: int, prec: int = DEFAULT_PREC, grid_step: Fraction = Fraction(1, 1000)) -> list[dict]:
    """Rows of the quantile-transform picture in (eta, xi) = (Y/m, X/m) coordinates.

    * ``limit``: (f(x), x) for x on a grid of [0, 1];
    * ``step``: for k = m/2 .. m-1, the level xi = (2k - m)/m spanning
      eta from y_k to y_{k+1} (y_{m/2} = 0), where y_k = Q^{-1}(p_{k,m})/sqrt(m);
    * ``delta``: (y_k, Delta_{k,m}) for k = m/2+1 .. m.
    """
    _check_even(m)
    grid_step = Fraction(grid_step)
    if not 0 < grid_step <= 1:
        raise ValueError("grid step must lie in (0, 1]")
    records = delta_row(m, prec)
    rows = []
    n = math.ceil(1 / grid_step)
    for j in range(n + 1):
        x = min(j * grid_step, Fraction(1))
        rows.append({"series": "limit", "m": m, "k": None, "eta": f_eval(x, prec),
                     "xi": x, "eta_end": None})
    ys = {m // 2: mpf(0)}
    ys.update({r.k: r.y for r in records})
    for k in range(m // 2, m):
        rows.append({"series": "step", "m": m, "k": k, "eta": ys[k],
                     "xi": Fraction(2 * k - m, m), "eta_end": ys[k + 1]})
    for r in records:
        rows.append({"series": "delta", "m": m, "k": r.k, "eta": r.y, "xi": r.delta,
                     "eta_end": None})
    return rows


def figure2_data(m_max: int, prec: int = DEFAULT_PREC, jobs: int = 1) -> list[dict]:
    """One polyline of (y_k, Delta_{k,m}) per even m <= m_max, tagged with its band."""
    _check_even(m_max)
    rows = map_over_m(functools.partial(delta_row, prec=prec), range(2, m_max + 1, 2), jobs)
    return [{"m": r.m, "k": r.k, "eta": r.y, "delta": r.delta, "band": band_label(r.m)}
            for row in rows for r in row]
