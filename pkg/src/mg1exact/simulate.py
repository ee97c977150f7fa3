"""Discrete-event simulation oracle for the queue.

Vectorized Lindley recursion for per-customer delays and an event-merge pass
for the time-average number in system, using the counter-based Philox
generator so every run is reproducible bit for bit from its seed (independent
replications via SeedSequence spawning).

Empirical-vs-exact comparison notes:

* the delay sample of a single run is strongly autocorrelated, so the
  classical Kolmogorov-Smirnov band c/sqrt(n) holds only after thinning to
  roughly independent samples (keep every ``thin``-th customer);
* the delay law has an atom at zero, so the KS statistic compares the
  empirical staircase against both one-sided limits of the model CDF, with
  F(0-) = F(0) - atom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .model import QueueModel

__all__ = [
    "WaitingSimulation",
    "SystemSizeSimulation",
    "simulate_waiting",
    "replicate_waiting",
    "simulate_system_size",
    "ks_statistic",
    "ks_band",
    "default_warmup_customers",
    "DEFAULT_THIN",
]

DEFAULT_THIN = 64
KS_BAND_COEFF = 1.63  # ~1% level for the one-sample statistic


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def default_warmup_customers(model: QueueModel) -> int:
    """max(1e4 customers, 1e3 time units of arrivals)."""
    lam = float(model.arrival_rate)
    return max(10_000, int(math.ceil(1_000 * lam)))


@dataclass(frozen=True)
class WaitingSimulation:
    """Post-warmup delay sample of one replication."""

    waits: np.ndarray
    zero_fraction: float
    mean: float
    se_mean: float
    n_total: int
    warmup_customers: int

    def thinned(self, thin: int = DEFAULT_THIN) -> np.ndarray:
        return self.waits[::thin]


def simulate_waiting(
    model: QueueModel,
    n_customers: int,
    seed=0,
    warmup_customers: int | None = None,
    batches: int = 32,
) -> WaitingSimulation:
    """Lindley recursion: W_0 = 0, W_{k+1} = max(0, W_k + S_k - A_{k+1}).

    Vectorized as W_k = P_k - min_{j<=k} P_j with P the partial sums of
    S - A.  Returns the post-warmup delays and batch-means standard error.
    """
    if n_customers <= 0:
        raise DomainError("n_customers must be positive")
    warm = (
        default_warmup_customers(model)
        if warmup_customers is None
        else warmup_customers
    )
    if warm >= n_customers:
        raise DomainError(
            f"warmup ({warm}) must be smaller than n_customers ({n_customers})"
        )
    rng = _generator(seed)
    lam = float(model.arrival_rate)
    inter = rng.exponential(1.0 / lam, n_customers)
    services = model.service.sample(rng, n_customers)
    steps = services[:-1] - inter[1:]
    p = np.concatenate(([0.0], np.cumsum(steps)))
    w = p - np.minimum.accumulate(p)
    waits = w[warm:]
    n = waits.size
    m = n // batches
    if m > 0:
        bm = waits[: m * batches].reshape(batches, m).mean(axis=1)
        se = float(bm.std(ddof=1) / math.sqrt(batches))
    elif n > 1:
        # too few observations to form batches: plain standard error
        se = float(waits.std(ddof=1) / math.sqrt(n))
    else:
        se = float("nan")
    return WaitingSimulation(
        waits=waits,
        zero_fraction=float(np.mean(waits == 0.0)),
        mean=float(waits.mean()),
        se_mean=se,
        n_total=n_customers,
        warmup_customers=warm,
    )


def replicate_waiting(
    model: QueueModel,
    n_customers: int,
    replications: int,
    seed=0,
    warmup_customers: int | None = None,
) -> list[WaitingSimulation]:
    """Independent replications via SeedSequence spawning."""
    base = (
        seed
        if isinstance(seed, np.random.SeedSequence)
        else np.random.SeedSequence(seed)
    )
    return [
        simulate_waiting(model, n_customers, child, warmup_customers)
        for child in base.spawn(replications)
    ]


def ks_statistic(samples: np.ndarray, cdf, atom: float) -> float:
    """Kolmogorov-Smirnov distance between a sample and a CDF with an atom
    at zero.

    ``cdf`` maps a float array to F values.  At each distinct sample value v
    the empirical proportions strictly-below and up-to v are compared against
    F(v-) and F(v); the only discontinuity of F is the atom at v = 0.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise DomainError("empty sample")
    uniq = np.unique(x)
    hi = np.searchsorted(x, uniq, side="right") / n
    lo = np.searchsorted(x, uniq, side="left") / n
    f = np.asarray(cdf(uniq), dtype=float)
    f_minus = np.where(uniq == 0.0, f - atom, f)
    return float(max(np.abs(hi - f).max(), np.abs(lo - f_minus).max()))


def ks_band(n: int, coeff: float = KS_BAND_COEFF) -> float:
    """Critical distance for an iid sample of size n (~1% level)."""
    return coeff / math.sqrt(n)


@dataclass(frozen=True)
class SystemSizeSimulation:
    """Occupancy estimates over levels 0..max_level (last bin truncated)."""

    time_average: np.ndarray
    arrival_seen: np.ndarray
    horizon: float
    n_arrivals_observed: int


def simulate_system_size(
    model: QueueModel,
    n_customers: int,
    seed=0,
    warmup_time: float | None = None,
    max_level: int = 40,
) -> SystemSizeSimulation:
    """Time-average and arrival-seen number-in-system distributions.

    Builds the full event list (arrival +1 at T_k, departure -1 at D_k with
    D_k = C_k + max_{j<=k}(T_j - C_{j-1}), C the cumulative services) and
    integrates the piecewise-constant level over [warmup_time, last arrival].
    Arrival-seen levels count departures before each arrival -- with Poisson
    arrivals both estimates converge to the same law.
    """
    if n_customers <= 0:
        raise DomainError("n_customers must be positive")
    rng = _generator(seed)
    lam = float(model.arrival_rate)
    t_arr = np.cumsum(rng.exponential(1.0 / lam, n_customers))
    services = model.service.sample(rng, n_customers)
    c = np.cumsum(services)
    shifted = np.concatenate(([0.0], c[:-1]))
    d = c + np.maximum.accumulate(t_arr - shifted)

    if warmup_time is None:
        warmup_time = min(1_000.0, float(t_arr[-1]) * 0.1)
    t_end = float(t_arr[-1])
    if warmup_time >= t_end:
        raise DomainError("warmup_time exceeds the simulated horizon")

    times = np.concatenate((t_arr, d))
    deltas = np.concatenate((np.ones(n_customers, int), -np.ones(n_customers, int)))
    order = np.argsort(times, kind="stable")
    times = times[order]
    levels = np.cumsum(deltas[order])

    starts = np.concatenate(([0.0], times))
    ends = np.concatenate((times, [np.inf]))
    segment_levels = np.concatenate(([0], levels))
    a = np.clip(starts, warmup_time, t_end)
    b = np.clip(ends, warmup_time, t_end)
    dur = np.maximum(b - a, 0.0)
    acc = np.zeros(max_level + 1)
    np.add.at(acc, np.clip(segment_levels, 0, max_level), dur)
    horizon = t_end - warmup_time
    time_avg = acc / horizon

    seen_mask = t_arr >= warmup_time
    ks = np.nonzero(seen_mask)[0]
    seen_levels = ks - np.searchsorted(d, t_arr[ks], side="right")
    seen_acc = np.bincount(
        np.clip(seen_levels, 0, max_level), minlength=max_level + 1
    ).astype(float)
    arrival_seen = seen_acc / seen_acc.sum()

    return SystemSizeSimulation(
        time_average=time_avg,
        arrival_seen=arrival_seen,
        horizon=horizon,
        n_arrivals_observed=int(seen_mask.sum()),
    )
