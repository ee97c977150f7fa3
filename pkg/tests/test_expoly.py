"""Exponential polynomials: sums of c * x^k * e^(a x + q) with exact
scalar coefficients, with calculus and cancellation-safe evaluation."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import exp as mpexp, mp, mpf

from mg1exact.errors import DomainError
from mg1exact.exact import cplx, quad
from mg1exact.expoly import TermSum

small = st.fractions(min_value=-6, max_value=6, max_denominator=6)


@st.composite
def term_sums(draw):
    n = draw(st.integers(1, 4))
    items = []
    for _ in range(n):
        items.append(
            (
                draw(small),
                draw(st.integers(0, 3)),
                draw(small),
                draw(small),
            )
        )
    return TermSum.from_terms(items)


def _direct(ts: TermSum, x, prec=220):
    with mp.workprec(prec):
        from mg1exact.exact import mp_eval

        total = mpf(0)
        for (k, a, q), c in ts.terms.items():
            total += (
                mp_eval(c, prec)
                * mp_eval(x, prec) ** k
                * mpexp(mp_eval(a, prec) * mp_eval(x, prec) + mp_eval(q, prec))
            )
        return total


class TestAlgebra:
    @given(f=term_sums(), g=term_sums())
    @settings(max_examples=60)
    def test_product_rule_for_derivative(self, f, g):
        assert (f * g).derivative() == f.derivative() * g + f * g.derivative()

    @given(f=term_sums())
    @settings(max_examples=60)
    def test_antiderivative_inverts_derivative(self, f):
        assert f.antiderivative().derivative() == f

    @given(f=term_sums(), s=small)
    @settings(max_examples=60)
    def test_shift_translates_the_graph(self, f, s):
        x = Fraction(5, 7)
        assert f.shift(s).at_point(x) == f.at_point(x - s)

    @given(f=term_sums(), s=small, t=small)
    @settings(max_examples=40)
    def test_shift_composes(self, f, s, t):
        assert f.shift(s).shift(t) == f.shift(s + t)

    @given(f=term_sums())
    @settings(max_examples=40)
    def test_definite_integral_is_antiderivative_difference(self, f):
        lo, hi = Fraction(-1, 3), Fraction(3, 2)
        anti = f.antiderivative()
        assert f.definite_integral(lo, hi) == anti.at_point(hi) - anti.at_point(lo)

    def test_times_x_power(self):
        f = TermSum.term(2, 1, 3, 0)
        assert f.times_x_power(2) == TermSum.term(2, 3, 3, 0)

    def test_scale_and_division(self):
        f = TermSum.term(Fraction(3, 4), 2, 1, 0)
        assert f.scale(Fraction(4, 3)) == TermSum.term(1, 2, 1, 0)
        assert f / Fraction(3, 4) == TermSum.term(1, 2, 1, 0)


class TestConstants:
    def test_at_point_merges_equal_exponents(self):
        # x*e^(2x) and e^(x + 1) share the exponent value 2 at x = 1
        f = TermSum.from_terms([(1, 1, 2, 0), (2, 0, 1, 1)])
        v = f.at_point(Fraction(1))
        assert v.num_terms() == 1
        assert v == TermSum.term(3, 0, 0, 2)

    def test_left_tail_mass_of_idle_exponential(self):
        # The leftward extension kappa*e^(lam x) integrates over
        # (-inf, 0] to kappa/lam = 1 - rho: the cell that encodes the
        # atom of the delay distribution.
        lam, rho = Fraction(2), Fraction(2, 3)
        kappa = lam * (1 - rho)
        f = TermSum.term(kappa, 0, lam, 0)
        assert f.definite_integral(None, 0) == TermSum.constant(1 - rho)

    def test_left_infinite_integral_requires_decay(self):
        with pytest.raises(DomainError):
            TermSum.term(1, 0, -1, 0).definite_integral(None, 0)


class TestComplexPairs:
    def test_conjugate_pair_sum_is_real(self):
        c = cplx(Fraction(1, 2), quad(0, -1, 2))
        a = cplx(Fraction(1), quad(0, 1, 2))
        f = TermSum.term(c, 1, a, 0)
        g = f + f.conjugate()
        assert g.is_real()
        v = g.eval_mp(Fraction(3, 5), 128)
        assert abs(v.imag if hasattr(v, "imag") else 0) == 0

    def test_real_partner_sum_is_the_real_part(self):
        c = cplx(Fraction(1, 2), Fraction(1, 3))
        a = cplx(Fraction(1), quad(0, 1, 2))
        f = TermSum.term(c, 0, a, 0)
        assert f.real_partner_sum() == (f + f.conjugate()).scale(Fraction(1, 2))
        assert f.real_partner_sum().is_real()


class TestEvaluation:
    @given(f=term_sums(), x=small)
    @settings(max_examples=60, deadline=None)
    def test_eval_matches_direct_summation(self, f, x):
        got = f.eval_mp(x, 160)
        want = _direct(f, x)
        assert abs(got - want) <= (1 + abs(want)) * mpf(2) ** -140

    def test_cancellation_guard(self):
        # e^(2x) - e^(2x - 1e-6): both terms ~ 4.8e8 at x = 10, the
        # difference ~ 970.  A naive 64-bit evaluation would keep only
        # ~8 digits; the slack analysis must preserve full precision.
        eps = Fraction(1, 1_000_000)
        f = TermSum.from_terms([(1, 0, 2, 0), (-1, 0, 2, -eps)])
        lo = f.eval_mp(10, 64)
        hi = f.eval_mp(10, 256)
        assert abs(lo - hi) <= abs(hi) * mpf(2) ** -60

    def test_magnitude_slack_bounds_largest_term(self):
        f = TermSum.from_terms([(1, 0, 2, 0), (-1, 0, 2, Fraction(-1, 10))])
        slack = f.magnitude_slack(10.0)
        # largest term is e^20 ~ 2^28.9
        assert slack >= 28

    def test_eval_checked_consistency(self):
        f = TermSum.from_terms([(1, 2, -1, 0), (3, 0, 1, -2)])
        a = f.eval_checked(Fraction(7, 3), 96)
        b = f.eval_mp(Fraction(7, 3), 192)
        assert abs(a - b) <= abs(b) * mpf(2) ** -90


class TestStrings:
    def test_exact_str_readable(self):
        f = TermSum.from_terms([(Fraction(-1, 9), 0, 2, Fraction(-1, 6))])
        s = f.exact_str()
        assert "exp" in s and "-1/9" in s
