"""Numerical inversion of the waiting-time transform — the analytic
oracle used to cross-check the recursive solver."""

from fractions import Fraction

from mpmath import exp as mpexp, mp, mpf

from mg1exact.laplace import exponential_selftest, invert_delay_density
from mg1exact.model import Deterministic, Exponential, QueueModel, Uniform


class TestSelfTest:
    def test_markovian_inversion_closes(self):
        assert exponential_selftest() < 1e-8


class TestPointInversion:
    def test_markovian_closed_form(self):
        model = QueueModel(2, Exponential(3))
        with mp.workprec(160):
            for x in (mpf(1) / 4, mpf(1), mpf(3)):
                res = invert_delay_density(model, x)
                want = mpf(2) / 3 * mpexp(-x)
                assert abs(res.value - want) < 1e-10
                assert res.error_estimate < 1e-8
                assert not res.near_discontinuity

    def test_jump_neighbourhood_is_flagged(self):
        model = QueueModel(2, Deterministic(Fraction(1, 3)))
        res = invert_delay_density(model, Fraction(1, 3))
        assert res.near_discontinuity

    def test_smooth_case_not_flagged(self):
        model = QueueModel(2, Uniform(Fraction(1, 12), Fraction(7, 12)))
        res = invert_delay_density(model, Fraction(1, 2))
        assert not res.near_discontinuity

    def test_error_estimate_is_honest(self, ctx):
        # compare against the exact solver at a handful of points
        model = ctx.model_uniform_zero
        dist = ctx.distribution(model)
        with mp.workprec(160):
            for x in (Fraction(1, 2), Fraction(5, 4), Fraction(5, 2)):
                res = invert_delay_density(model, x)
                exact = dist.solution.density_value(x, 160)
                assert abs(res.value - exact) < max(1e-6, 10 * res.error_estimate)
