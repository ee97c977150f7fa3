"""Exact linear combinations of exponentials (sum of q*e^r with
rational q, r) and their formal quotients."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import exp as mpexp, mp, mpf

from mg1exact.explin import ExpLinComb, ExpRatio

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)


@st.composite
def combos(draw):
    n = draw(st.integers(0, 4))
    out = ExpLinComb.constant(draw(rationals))
    for _ in range(n):
        out = out + ExpLinComb.exp_term(draw(rationals), draw(rationals))
    return out


class TestAlgebra:
    def test_constants_collapse(self):
        c = ExpLinComb.constant(Fraction(3, 4))
        assert c.is_rational()
        assert c.as_rational() == Fraction(3, 4)
        assert ExpLinComb.constant(0).is_zero()

    def test_exponent_addition_law(self):
        # exp_term(r, q) means r * e^q
        a = ExpLinComb.exp_term(Fraction(1, 2), 2)
        b = ExpLinComb.exp_term(4, 5)
        assert a * b == ExpLinComb.exp_term(2, 7)

    def test_like_terms_merge(self):
        x = ExpLinComb.exp_term(2, 1) + ExpLinComb.exp_term(-2, 1)
        assert x.is_zero()
        assert len(x) == 0

    @given(a=combos(), b=combos(), c=combos())
    @settings(max_examples=80)
    def test_ring_axioms(self, a, b, c):
        assert a + b == b + a
        assert a * b == b * a
        assert a * (b + c) == a * b + a * c
        assert (a - a).is_zero()

    @given(a=combos())
    def test_single_term_division_roundtrip(self, a):
        t = ExpLinComb.exp_term(Fraction(1, 2), Fraction(3))
        assert (a * t) / t == a

    @given(a=combos(), b=combos())
    @settings(max_examples=60)
    def test_quotients_compare_by_cross_multiplication(self, a, b):
        if b.is_zero():
            return
        r = ExpRatio.wrap(a) / ExpRatio.wrap(b)
        assert r.equals(ExpRatio(a, b))
        assert (r * ExpRatio.wrap(b)).equals(ExpRatio.wrap(a))


class TestNumeric:
    @given(a=combos())
    @settings(max_examples=60)
    def test_eval_matches_direct_summation(self, a):
        got = a.eval_mp(160)
        with mp.workprec(220):
            want = mpf(0)
            for r, q in a.terms.items():
                want += (
                    mpf(q.numerator)
                    / q.denominator
                    * mpexp(mpf(r.numerator) / r.denominator)
                )
        assert abs(got - want) <= mpf(2) ** -140 * (1 + abs(want))

    def test_float_protocol(self):
        x = ExpLinComb.exp_term(-1, 1)  # -e
        assert float(x) == pytest.approx(-2.718281828459045)


class TestStrings:
    def test_exact_str_shows_terms(self):
        x = ExpLinComb.constant(Fraction(-1, 3)) + ExpLinComb.exp_term(
            Fraction(1, 3), Fraction(2, 3)
        )
        assert x.exact_str() == "(-1/3) + (1/3)*exp(2/3)"

    def test_ratio_str_has_both_sides(self):
        r = ExpRatio(
            ExpLinComb.exp_term(1, 1), ExpLinComb.constant(Fraction(2))
        )
        s = r.exact_str()
        assert "/" in s and "exp(1)" in s
