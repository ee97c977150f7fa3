"""scikit-learn style facade over the exact queueing computations.

Two estimators wrap the library for pipelines that expect the familiar
``fit`` / ``predict`` / ``get_params`` surface:

``WaitingTimeEstimator``
    Stationary waiting-time law of the queue.  ``fit`` solves the delay
    equations once; afterwards the estimator answers density/CDF/quantile
    queries, scores observed waits by log-likelihood, and draws sample
    paths from the matching simulator.

``QueueLengthEstimator``
    Stationary number-in-system law.  ``fit`` computes the probability
    series; afterwards the estimator exposes the pmf, moments, and
    sampling.

Both follow the scikit-learn contract: constructors only store
hyperparameters, all derived state lives in trailing-underscore
attributes, and unfitted use raises ``NotFittedError``.  The exact
objects remain reachable through ``model_`` / ``distribution_`` for
callers who need rationals rather than floats.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .density import WaitingTimeDistribution, solve_tail_asymptote
from .model import (
    Deterministic,
    Exponential,
    QueueModel,
    ServiceDistribution,
    Uniform,
    as_fraction,
)
from .qlen import QueueLengthDistribution
from .simulate import default_warmup_customers, simulate_waiting
from .solver import solve_waiting_density

__all__ = ["WaitingTimeEstimator", "QueueLengthEstimator"]

ServiceSpec = Union[ServiceDistribution, str]


def _service_from_params(
    service: ServiceSpec,
    lower,
    upper,
    duration,
    rate,
) -> ServiceDistribution:
    if isinstance(service, ServiceDistribution):
        return service
    kind = str(service).lower()
    if kind == "uniform":
        return Uniform(as_fraction(lower), as_fraction(upper))
    if kind == "deterministic":
        return Deterministic(as_fraction(duration))
    if kind == "exponential":
        return Exponential(as_fraction(rate))
    raise ValueError(
        f"service must be a ServiceDistribution or one of "
        f"'uniform', 'deterministic', 'exponential'; got {service!r}"
    )


def _as_1d(X) -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError("expected a 1-d array or a single-column 2-d array")
    return arr


class WaitingTimeEstimator(BaseEstimator):
    """Exact stationary waiting-time distribution of a single-server queue.

    Parameters
    ----------
    arrival_rate : number, str, or Fraction, default=1
        Poisson arrival rate; parsed exactly ("7/12" and 0.5 both work).
    service : ServiceDistribution or {'uniform','deterministic','exponential'}
        Service-time family, either an exact distribution object or a
        family name resolved with the matching parameters below.
    lower, upper : bounds of the uniform family (used when
        ``service='uniform'``).
    duration : the constant service time (``service='deterministic'``).
    rate : the exponential service rate (``service='exponential'``).
    x_max : solve the density out to this point (None picks a default
        covering all but ~1e-6 of the mass; ignored for exponential
        service, whose law is closed-form on the whole axis).
    precision : working precision in bits for numeric queries.

    Attributes
    ----------
    model_ : QueueModel with exact rational parameters.
    solution_ : piecewise closed-form density (one entry per segment).
    distribution_ : WaitingTimeDistribution answering exact queries.
    atom_ : float probability of a zero wait (1 - utilization).
    mean_, variance_ : float delay moments (exact values on ``model_``).
    tail_ : TailAsymptote of the survival function.
    """

    def __init__(
        self,
        arrival_rate=1,
        service: ServiceSpec = "exponential",
        lower=0,
        upper=1,
        duration=1,
        rate=2,
        x_max=None,
        precision: int = 128,
    ):
        self.arrival_rate = arrival_rate
        self.service = service
        self.lower = lower
        self.upper = upper
        self.duration = duration
        self.rate = rate
        self.x_max = x_max
        self.precision = precision

    def fit(self, X=None, y=None):
        """Solve the delay equations for the configured queue.

        ``X`` and ``y`` are accepted for pipeline compatibility and
        ignored: the law is determined by the model parameters alone.
        """
        service = _service_from_params(
            self.service, self.lower, self.upper, self.duration, self.rate
        )
        self.model_ = QueueModel(as_fraction(self.arrival_rate), service)
        x_max = self.x_max
        if x_max is None and not isinstance(service, Exponential):
            x_max = self._default_x_max(self.model_)
        self.solution_ = solve_waiting_density(self.model_, x_max=x_max)
        self.distribution_ = WaitingTimeDistribution(self.solution_)
        self.atom_ = float(self.model_.idle_probability)
        moments = self.model_.delay_moments()
        self.mean_ = float(moments.mean)
        self.variance_ = float(moments.variance)
        self.tail_ = solve_tail_asymptote(self.model_, self.precision)
        return self

    @staticmethod
    def _default_x_max(model: QueueModel) -> Fraction:
        """Smallest grid-aligned range whose tail mass is below ~1e-6."""
        tail = solve_tail_asymptote(model, 64)
        need = math.log(float(tail.prefactor) * 1e6) / float(tail.decay_rate)
        return Fraction(max(1, math.ceil(need)))

    def _beyond(self, x) -> bool:
        hi = self.solution_.upper_limit
        return hi is not None and x > float(hi)

    # -- distribution queries ------------------------------------------------
    def pdf(self, X):
        """Density of the continuous part at each point (vectorized).

        Beyond the solved range the exponential tail asymptote stands in
        for the exact expression (its relative error there is below the
        ~1e-6 mass the default range leaves out).
        """
        check_is_fitted(self, "distribution_")
        xs = _as_1d(X)
        out = np.empty_like(xs)
        for i, x in enumerate(xs):
            if x < 0:
                out[i] = 0.0
            elif self._beyond(x):
                out[i] = float(self.tail_.density_estimate(x))
            else:
                out[i] = float(self.distribution_.pdf(Fraction(x), self.precision))
        return out

    def cdf(self, X):
        check_is_fitted(self, "distribution_")
        xs = _as_1d(X)
        out = np.empty(len(xs))
        for i, x in enumerate(xs):
            if x < 0:
                out[i] = 0.0
            elif self._beyond(x):
                out[i] = 1.0 - float(self.tail_.survival_estimate(x))
            else:
                out[i] = float(self.distribution_.cdf(Fraction(x), self.precision))
        return out

    def survival(self, X):
        check_is_fitted(self, "distribution_")
        return 1.0 - self.cdf(X)

    def quantile(self, q):
        check_is_fitted(self, "distribution_")
        qs = np.atleast_1d(np.asarray(q, dtype=float))
        vals = np.array(
            [float(self.distribution_.quantile(p, self.precision)) for p in qs]
        )
        return vals if np.ndim(q) else float(vals[0])

    def score_samples(self, X):
        """Log-likelihood of each observed wait.

        Zero waits score ``log`` of the atom mass; positive waits score the
        log density.  Negative waits score ``-inf``.
        """
        check_is_fitted(self, "distribution_")
        xs = _as_1d(X)
        out = np.full(xs.shape, -np.inf)
        for i, x in enumerate(xs):
            if x == 0.0:
                out[i] = math.log(self.atom_)
            elif x > 0:
                v = self.pdf(np.array([x]))[0]
                out[i] = math.log(v) if v > 0 else -np.inf
        return out

    def score(self, X, y=None):
        """Mean log-likelihood of the observed waits."""
        return float(np.mean(self.score_samples(X)))

    def sample(self, n_samples: int = 1, random_state: Optional[int] = None):
        """Stationary waits drawn from the matching simulator.

        Consecutive customers' waits are correlated (it is a sample path,
        not an i.i.d. draw); thin externally if independence matters.
        """
        check_is_fitted(self, "model_")
        seed = 0 if random_state is None else int(random_state)
        n = int(n_samples)
        warmup = default_warmup_customers(self.model_)
        sim = simulate_waiting(
            self.model_, n_customers=n + warmup, seed=seed, warmup_customers=warmup
        )
        return sim.waits[:n]

    def predict(self, X):
        """Alias for ``cdf`` (the natural numeric answer per wait)."""
        return self.cdf(X)


class QueueLengthEstimator(BaseEstimator):
    """Exact stationary number-in-system distribution.

    Parameters mirror :class:`WaitingTimeEstimator`; ``levels`` controls
    how many probabilities are tabulated up front.

    Attributes
    ----------
    model_ : QueueModel with exact rational parameters.
    distribution_ : QueueLengthDistribution answering exact queries.
    pmf_ : float array of P{L = 0..levels-1}.
    mean_, variance_ : float moments (exact values on ``distribution_``).
    """

    def __init__(
        self,
        arrival_rate=1,
        service: ServiceSpec = "exponential",
        lower=0,
        upper=1,
        duration=1,
        rate=2,
        levels: int = 32,
        precision: int = 128,
    ):
        self.arrival_rate = arrival_rate
        self.service = service
        self.lower = lower
        self.upper = upper
        self.duration = duration
        self.rate = rate
        self.levels = levels
        self.precision = precision

    def fit(self, X=None, y=None):
        service = _service_from_params(
            self.service, self.lower, self.upper, self.duration, self.rate
        )
        self.model_ = QueueModel(as_fraction(self.arrival_rate), service)
        self.distribution_ = QueueLengthDistribution(self.model_)
        self.pmf_ = np.array(
            [
                float(self.distribution_.prob(level, self.precision))
                for level in range(int(self.levels))
            ]
        )
        self.mean_ = float(self.distribution_.mean())
        self.variance_ = float(self.distribution_.variance())
        return self

    def predict_proba(self, X):
        """P{L = level} for each integer level in ``X``."""
        check_is_fitted(self, "distribution_")
        levels = np.asarray(X, dtype=int).ravel()
        if np.any(levels < 0):
            raise ValueError("queue-length levels are nonnegative integers")
        out = np.empty(levels.shape, dtype=float)
        for i, level in enumerate(levels):
            if level < len(self.pmf_):
                out[i] = self.pmf_[level]
            else:
                out[i] = float(self.distribution_.prob(int(level), self.precision))
        return out

    def predict(self, X=None):
        """Stationary mean number in system (constant per query row)."""
        check_is_fitted(self, "distribution_")
        if X is None:
            return self.mean_
        n = len(np.atleast_1d(np.asarray(X)))
        return np.full(n, self.mean_)

    def sample(self, n_samples: int = 1, random_state: Optional[int] = None):
        """I.i.d. levels drawn from the exact pmf by inverse transform."""
        check_is_fitted(self, "distribution_")
        probs = list(self.pmf_)
        while sum(probs) < 1.0 - 2.0**-40 and len(probs) < 10_000:
            probs.append(
                float(self.distribution_.prob(len(probs), self.precision))
            )
        cum = np.cumsum(probs)
        rng = np.random.default_rng(random_state)
        return np.searchsorted(cum, rng.random(int(n_samples)), side="right")

    def score_samples(self, X):
        """Log-probability of each observed level."""
        probs = self.predict_proba(X)
        with np.errstate(divide="ignore"):
            return np.log(probs)

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))
