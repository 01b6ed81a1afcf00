import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, mpf

from oracles import q_erfc, q_quad
from tusnady.binomial import ExactDyadic
from tusnady.errors import DomainError
from tusnady.gaussian import Phi, Q, Q_inv, log_Q, log_rational, q_inv_root
from tusnady.numerics import Relation, certified_compare, to_fraction


def _mp(v):
    if isinstance(v, Fraction):
        return mpf(v.numerator) / v.denominator
    return mpf(v)


def rel_err(a, b):
    with mp.workprec(2048):
        return abs(_mp(a) - _mp(b)) / abs(_mp(b))


def test_examples():
    assert Q(0) == mpf(1) / 2
    # digits from quadrature of the density (see test_q_against_quadrature)
    assert float(Q(Fraction("0.723359"))) == pytest.approx(0.2347297, abs=1e-7)
    assert float(Q(Fraction("0.6435214"))) == pytest.approx(0.2599429, abs=1e-7)
    assert float(log_Q(0)) == pytest.approx(-math.log(2), rel=1e-15)
    assert float(log_Q(10)) == pytest.approx(-53.23128, abs=1e-5)
    assert float(log_Q(Fraction("37.11"))) == pytest.approx(-693.1, abs=0.1)
    assert Q_inv(Fraction(1, 2)) == 0
    assert float(Q_inv(Fraction(1, 4))) == pytest.approx(0.67448975, abs=1e-8)
    assert float(Q_inv(ExactDyadic(1, 1000))) == pytest.approx(37.11, abs=0.01)


def test_quarter_lies_between_the_two_spot_points():
    x = Q_inv(Fraction(1, 4))
    assert Fraction("0.6435214") < to_fraction(x) < Fraction("0.723359")


@pytest.mark.parametrize("x", ["0", "0.3", "0.723359", "1.5", "3", "5.6", "9.1", "12", "27", "40"])
@pytest.mark.parametrize("prec", [64, 128, 256, 1024])
def test_q_against_erfc(x, prec):
    val = Q(Fraction(x), prec)
    ref = q_erfc(Fraction(x), dps=int(prec * 0.3) + 40)
    assert rel_err(val, ref) <= mpf(2) ** (8 - prec)


@pytest.mark.parametrize("x", ["0.723359", "0.6435214", "2.5", "10"])
def test_q_against_quadrature(x):
    ref = q_quad(Fraction(x))
    assert rel_err(Q(Fraction(x), 128), ref) <= mpf(10) ** -30


@pytest.mark.parametrize("x", ["0", "1", "6", "20", "100", "1000", "100000"])
def test_log_q_without_underflow(x):
    prec = 128
    val = log_Q(Fraction(x), prec)
    with mp.workdps(80):
        z = mpf(Fraction(x).numerator) / mpmath.sqrt(2)
        ref = mpmath.log(mpmath.erfc(z) / 2)
    assert rel_err(val, ref) <= mpf(2) ** (8 - prec)


def test_log_q_domain():
    with pytest.raises(DomainError):
        log_Q(-1)


def test_negative_arguments_and_phi():
    for x in (Fraction(1, 3), Fraction(2), Fraction(7)):
        s = Q(x) + Q(-x)
        assert abs(s - 1) <= mpf(2) ** (8 - 128)
        assert Phi(x) == Q(-x)
    assert float(Phi(0)) == 0.5


def test_q_inv_domain_and_reflection():
    for bad in (0, 1, Fraction(-1, 2), Fraction(3, 2)):
        with pytest.raises(DomainError):
            Q_inv(bad)
    with pytest.raises(DomainError):
        q_inv_root(Fraction(1, 2))
    assert Q_inv(Fraction(3, 4)) + Q_inv(Fraction(1, 4)) == 0
    assert float(Q_inv(0.975)) == pytest.approx(-1.959963984540054, abs=1e-14)


@pytest.mark.parametrize("j", [1, 2, 10, 64, 500, 1000, 2000, 5000])
def test_roundtrip_log_domain(j):
    prec = 256
    x = Q_inv(ExactDyadic(1, j), prec)
    with mp.workprec(prec + 16):
        err = abs(log_Q(x, prec) + j * mp.ln2)
    assert err <= mpf(2) ** (-prec // 2)


def test_bracket_width_contract():
    r = q_inv_root(Fraction(1, 2 ** 300), 128)
    assert r.bracket_lo <= r.root <= r.bracket_hi
    assert r.width <= r.root * mpf(2) ** -128


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10 ** 9), st.integers(1, 200))
def test_roundtrip_random_rationals(num, shift):
    q = Fraction(num, num + 1 + (1 << shift))
    x = Q_inv(q, 128)
    assert rel_err(Q(x, 160), q) <= mpf(2) ** -100


@settings(max_examples=30, deadline=None)
@given(st.fractions(Fraction(-8), Fraction(8), max_denominator=10 ** 6),
       st.fractions(Fraction(1, 10 ** 6), Fraction(1), max_denominator=10 ** 6))
def test_strict_monotonicity(x, gap):
    out = certified_compare(lambda p: Q(x, p), lambda p: Q(x + gap, p))
    assert out.relation is Relation.GREATER


@pytest.mark.parametrize("x", ["0.1", "3", "10", "29.5"])
def test_log_consistency(x):
    prec = 128
    lq = log_Q(Fraction(x), prec)
    with mp.workprec(prec + 16):
        assert rel_err(mpmath.exp(lq), Q(Fraction(x), prec)) <= mpf(2) ** (10 - prec)


def test_log_rational():
    with mp.workprec(200):
        assert abs(log_rational(Fraction(3, 8), 128) - mpmath.log(mpf(3) / 8)) < mpf(2) ** -125
        assert abs(log_rational(Fraction(7, 3), 128) - mpmath.log(mpf(7) / 3)) < mpf(2) ** -125
