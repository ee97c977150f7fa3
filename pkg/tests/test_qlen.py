"""Number-in-system distribution: exact generating-series recursion
and its closed-form anchors."""

from fractions import Fraction

import pytest
from mpmath import mp, mpf

from mg1exact.explin import ExpLinComb, ExpRatio
from mg1exact.model import Deterministic, Exponential, QueueModel, Uniform
from mg1exact.qlen import (
    QueueLengthDistribution,
    pgf_series_exact,
    pgf_series_mp,
    theta_series_exact,
)


class TestMarkovianAnchor:
    def test_geometric_probabilities_exact(self):
        m = QueueModel(2, Exponential(3))
        series = pgf_series_exact(m, 8)
        rho = Fraction(2, 3)
        for level, entry in enumerate(series):
            entry = entry.simplify() if hasattr(entry, "simplify") else entry
            assert isinstance(entry, ExpLinComb)
            assert entry.is_rational()
            assert entry.as_rational() == (1 - rho) * rho**level


class TestExactSeries:
    def test_level_zero_is_idle_probability(self):
        for m in (
            QueueModel(2, Uniform(Fraction(1, 12), Fraction(7, 12))),
            QueueModel(2, Deterministic(Fraction(1, 3))),
        ):
            entry = ExpRatio.wrap(pgf_series_exact(m, 1)[0])
            want = ExpRatio.wrap(ExpLinComb.constant(m.idle_probability))
            assert entry.equals(want)

    def test_deterministic_level_one(self):
        m = QueueModel(2, Deterministic(Fraction(1, 3)))
        got = pgf_series_exact(m, 2)[1]
        want = ExpLinComb.constant(Fraction(-1, 3)) + ExpLinComb.exp_term(
            Fraction(1, 3), Fraction(2, 3)
        )
        assert got == want

    def test_exact_and_numeric_series_agree(self):
        m = QueueModel(2, Uniform(Fraction(1, 12), Fraction(7, 12)))
        exact = pgf_series_exact(m, 10)
        numeric = pgf_series_mp(m, 10, 192)
        with mp.workprec(192):
            for e, v in zip(exact, numeric):
                assert abs(e.eval_mp(192) - v) < mpf(2) ** -150

    def test_theta_series_normalizes(self):
        # entries are E[(arrivals during one service) = j] probabilities;
        # they must be positive and sum toward 1
        m = QueueModel(2, Deterministic(Fraction(1, 3)))
        probs = theta_series_exact(m, 30)
        total = ExpLinComb.constant(0)
        for p in probs:
            total = total + p
        with mp.workprec(160):
            vals = [p.eval_mp(160) for p in probs]
            assert all(v > 0 for v in vals)
            assert abs(total.eval_mp(160) - 1) < mpf(10) ** -25


class TestDistributionFacade:
    def test_pmf_heads_toward_one(self):
        qld = QueueLengthDistribution(QueueModel(2, Uniform(0, Fraction(2, 3))))
        with mp.workprec(192):
            probs = qld.pmf(80, 192)
            assert all(p > 0 for p in probs)
            assert 0 < 1 - sum(probs) < 1e-8

    def test_moments_match_transform_values(self):
        for m in (
            QueueModel(2, Uniform(Fraction(1, 12), Fraction(7, 12))),
            QueueModel(2, Deterministic(Fraction(1, 3))),
            QueueModel(2, Exponential(3)),
        ):
            qld = QueueLengthDistribution(m)
            system = m.system_size_moments()
            assert qld.mean() == system.mean
            assert qld.variance() == system.variance

    def test_pmf_mean_agrees_with_exact_mean(self):
        m = QueueModel(2, Deterministic(Fraction(1, 3)))
        qld = QueueLengthDistribution(m)
        with mp.workprec(192):
            probs = qld.pmf(120, 192)
            mean_est = sum(l * p for l, p in enumerate(probs))
            want = mpf(qld.mean().numerator) / qld.mean().denominator
            assert abs(mean_est - want) < 1e-12
