"""Discrete-event simulation oracle: reproducibility, convergence to
the exact law, and the Poisson-arrivals sampling property."""

from fractions import Fraction

import numpy as np
import pytest

from mg1exact.errors import DomainError
from mg1exact.model import Deterministic, Exponential, QueueModel, Uniform
from mg1exact.qlen import QueueLengthDistribution
from mg1exact.simulate import (
    default_warmup_customers,
    ks_band,
    ks_statistic,
    replicate_waiting,
    simulate_system_size,
    simulate_waiting,
)
MODEL = QueueModel(2, Exponential(3))


class TestReproducibility:
    def test_same_seed_bit_identical(self):
        a = simulate_waiting(MODEL, 50_000, seed=9)
        b = simulate_waiting(MODEL, 50_000, seed=9)
        assert np.array_equal(a.waits, b.waits)
        assert a.mean == b.mean and a.se_mean == b.se_mean

    def test_different_seeds_differ(self):
        a = simulate_waiting(MODEL, 50_000, seed=9)
        b = simulate_waiting(MODEL, 50_000, seed=10)
        assert not np.array_equal(a.waits, b.waits)

    def test_replications_are_independent_streams(self):
        runs = replicate_waiting(MODEL, 50_000, 3, seed=4)
        assert len(runs) == 3
        assert not np.array_equal(runs[0].waits, runs[1].waits)
        again = replicate_waiting(MODEL, 50_000, 3, seed=4)
        for r, s in zip(runs, again):
            assert np.array_equal(r.waits, s.waits)


class TestValidation:
    def test_warmup_must_leave_samples(self):
        with pytest.raises(DomainError):
            simulate_waiting(MODEL, 5_000)  # default warmup covers it all
        with pytest.raises(DomainError):
            simulate_waiting(MODEL, 0)

    def test_default_warmup_scales_with_arrivals(self):
        assert default_warmup_customers(MODEL) >= 10_000


class TestConvergence:
    def test_zero_fraction_estimates_idle_probability(self):
        run = simulate_waiting(MODEL, 400_000, seed=3)
        want = float(MODEL.idle_probability)
        se = (want * (1 - want) / run.waits.size) ** 0.5
        assert abs(run.zero_fraction - want) < 6 * se

    def test_mean_within_standard_errors(self):
        run = simulate_waiting(MODEL, 400_000, seed=3)
        assert abs(run.mean - float(MODEL.delay_moments().mean)) < 5 * run.se_mean

    def test_ks_against_exact_cdf(self):
        run = simulate_waiting(MODEL, 400_000, seed=12)
        lam, mu = 2.0, 3.0
        rho = lam / mu

        def cdf(x):
            return 1 - rho * np.exp(-(mu - lam) * np.asarray(x))

        sample = run.thinned()
        d = ks_statistic(sample, cdf, atom=1 - rho)
        assert d < ks_band(sample.size)

    def test_ks_detects_a_wrong_law(self):
        run = simulate_waiting(MODEL, 400_000, seed=12)

        def wrong_cdf(x):  # wrong decay rate
            return 1 - (2.0 / 3.0) * np.exp(-2.0 * np.asarray(x))

        sample = run.thinned()
        assert ks_statistic(sample, wrong_cdf, atom=1.0 / 3.0) > 3 * ks_band(
            sample.size
        )

    def test_finite_service_ks(self, ctx):
        model = ctx.model_uniform_positive
        interp = ctx.interpolator(model)
        run = simulate_waiting(model, 300_000, seed=5)
        sample = run.thinned()
        d = ks_statistic(sample, interp, atom=interp.atom)
        assert d < ks_band(sample.size)


class TestPoissonArrivalsSeeTimeAverages:
    def test_occupancy_matches_exact_distribution(self):
        model = QueueModel(2, Deterministic(Fraction(1, 3)))
        sim = simulate_system_size(model, 200_000, seed=21)
        qld = QueueLengthDistribution(model)
        exact = [float(qld.prob(l, 96)) for l in range(12)]
        for l, p in enumerate(exact):
            assert abs(sim.time_average[l] - p) < 0.01
            assert abs(sim.arrival_seen[l] - p) < 0.01
        # the two empirical views agree with each other even tighter
        assert np.max(np.abs(sim.time_average[:12] - sim.arrival_seen[:12])) < 0.01
