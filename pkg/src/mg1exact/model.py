"""Single-server queue model: Poisson arrivals, FIFO service.

The model couples a rational arrival rate with one of three service-time
families (uniform, deterministic, exponential), validates stability, and
exposes the exact quantities everything downstream consumes: service moments,
Laplace transforms of the service and equilibrium-delay distributions (exact
at rational arguments, big-float at arbitrary complex ones), Takacs moment
recursions for the delay, and factorial-moment formulas for the number in
system.

Numeric transform evaluation uses a series form of ``(theta(s) - 1)/s + m1``
near the origin so the delay transform stays accurate where the direct
formula cancels catastrophically.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Union

import numpy as np
from mpmath import mp, mpf, mpmathify

from .errors import QueueParameterError, TransformPoleError, PrecisionError
from .explin import ExpLinComb, ExpRatio

__all__ = [
    "Uniform",
    "Deterministic",
    "Exponential",
    "ServiceDistribution",
    "QueueModel",
    "ServiceMoments",
    "DelayMoments",
    "SystemSizeMoments",
    "BoundaryValues",
    "as_fraction",
]

_SERIES_CAP = 500


def as_fraction(x, name: str = "value") -> Fraction:
    """Coerce to an exact Fraction.

    Strings accept both '7/12' and decimal forms; floats are read through
    their shortest decimal representation (so 0.25 -> 1/4), which keeps CLI
    input intuitive -- prefer strings or Fractions for values like 1/12 that
    have no finite decimal form.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise QueueParameterError(f"{name} must be a number, got bool")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(str(x))
    if isinstance(x, (str, Decimal)):
        try:
            return Fraction(x)
        except (ValueError, ArithmeticError) as exc:
            raise QueueParameterError(f"cannot parse {name} {x!r}") from exc
    raise QueueParameterError(f"{name} must be rational-like, got {type(x).__name__}")


class ServiceDistribution(ABC):
    """Common surface for the supported service-time families."""

    @abstractmethod
    def mean(self) -> Fraction: ...

    @abstractmethod
    def moment(self, n: int) -> Fraction:
        """Exact n-th raw moment E[Y^n]."""

    @abstractmethod
    def transform_exact(self, s: Fraction) -> ExpLinComb:
        """E[exp(-sY)] at rational s, as an exact exponential combination."""

    @abstractmethod
    def centered_over_s_mp(self, s):
        """(E[exp(-sY)] - 1)/s + E[Y], stable near s = 0 (ambient precision)."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray: ...

    @abstractmethod
    def spec_dict(self) -> dict: ...

    def transform_mp(self, s):
        """E[exp(-sY)] at an arbitrary (possibly complex) point, ambient prec."""
        s = mpmathify(s)
        if s == 0:
            return mpf(1)
        m1 = self.mean()
        m1_mp = mpf(m1.numerator) / m1.denominator
        return 1 + s * (self.centered_over_s_mp(s) - m1_mp)

    def second_moment(self) -> Fraction:
        return self.moment(2)

    def third_moment(self) -> Fraction:
        return self.moment(3)

    def variance(self) -> Fraction:
        return self.moment(2) - self.mean() ** 2


def _series_centered(s, moment_fn, scale_hint: Fraction):
    """sum_{n>=2} (-1)^n m_n s^(n-1) / n!  evaluated at ambient precision.

    Entire in s; used when |s|*scale_hint is small enough to converge fast.
    """
    s = mpmathify(s)
    total = mp.mpf(0) * s  # adopt s's type (mpf or mpc)
    power = s  # s^(n-1) at n = 2
    tol = mpf(2) ** (-(mp.prec + 8))
    for n in range(2, _SERIES_CAP):
        m_n = moment_fn(n)
        coeff = Fraction((-1) ** n * m_n.numerator, m_n.denominator * math.factorial(n))
        term = (mpf(coeff.numerator) / coeff.denominator) * power
        total += term
        if abs(term) <= tol * max(mpf(1), abs(total)):
            return total
        power *= s
    raise PrecisionError("service transform series did not converge")


@dataclass(frozen=True)
class Uniform(ServiceDistribution):
    """Service time uniform on [lower, upper], 0 <= lower < upper."""

    lower: Fraction
    upper: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lower", as_fraction(self.lower, "lower"))
        object.__setattr__(self, "upper", as_fraction(self.upper, "upper"))
        if self.lower < 0:
            raise QueueParameterError("uniform lower endpoint must be >= 0")
        if not self.lower < self.upper:
            raise QueueParameterError(
                "uniform needs lower < upper; use Deterministic for a point mass"
            )

    def mean(self) -> Fraction:
        return (self.lower + self.upper) / 2

    def moment(self, n: int) -> Fraction:
        a, b = self.lower, self.upper
        return (b ** (n + 1) - a ** (n + 1)) / ((n + 1) * (b - a))

    def transform_exact(self, s) -> ExpLinComb:
        s = as_fraction(s, "s")
        a, b = self.lower, self.upper
        if s == 0:
            return ExpLinComb.constant(1)
        c = Fraction(1, 1) / ((b - a) * s)
        return ExpLinComb({-a * s: c}) + ExpLinComb({-b * s: -c})

    def centered_over_s_mp(self, s):
        s = mpmathify(s)
        if s == 0:
            return mp.mpf(0)
        if abs(s) * float(self.upper) < mpf(1) / 2:
            return _series_centered(s, self.moment, self.upper)
        a, b = self.lower, self.upper
        a_mp = mpf(a.numerator) / a.denominator
        b_mp = mpf(b.numerator) / b.denominator
        theta = (mp.exp(-a_mp * s) - mp.exp(-b_mp * s)) / ((b_mp - a_mp) * s)
        m1 = self.mean()
        return (theta - 1) / s + mpf(m1.numerator) / m1.denominator

    def sample(self, rng, size):
        return rng.uniform(float(self.lower), float(self.upper), size)

    def spec_dict(self):
        return {"family": "uniform", "lower": str(self.lower), "upper": str(self.upper)}


@dataclass(frozen=True)
class Deterministic(ServiceDistribution):
    """Service time equal to a fixed positive duration."""

    duration: Fraction

    def __post_init__(self):
        object.__setattr__(self, "duration", as_fraction(self.duration, "duration"))
        if self.duration <= 0:
            raise QueueParameterError("deterministic duration must be > 0")

    def mean(self) -> Fraction:
        return self.duration

    def moment(self, n: int) -> Fraction:
        return self.duration**n

    def transform_exact(self, s) -> ExpLinComb:
        s = as_fraction(s, "s")
        return ExpLinComb({-self.duration * s: Fraction(1)})

    def centered_over_s_mp(self, s):
        s = mpmathify(s)
        if s == 0:
            return mp.mpf(0)
        if abs(s) * float(self.duration) < mpf(1) / 2:
            return _series_centered(s, self.moment, self.duration)
        a = self.duration
        a_mp = mpf(a.numerator) / a.denominator
        return (mp.exp(-a_mp * s) - 1) / s + a_mp

    def sample(self, rng, size):
        return np.full(size, float(self.duration))

    def spec_dict(self):
        return {"family": "deterministic", "duration": str(self.duration)}


@dataclass(frozen=True)
class Exponential(ServiceDistribution):
    """Service time exponential with the given rate (mean 1/rate)."""

    rate: Fraction

    def __post_init__(self):
        object.__setattr__(self, "rate", as_fraction(self.rate, "rate"))
        if self.rate <= 0:
            raise QueueParameterError("exponential rate must be > 0")

    def mean(self) -> Fraction:
        return Fraction(1, 1) / self.rate

    def moment(self, n: int) -> Fraction:
        return Fraction(math.factorial(n), 1) / self.rate**n

    def transform_exact(self, s) -> ExpLinComb:
        s = as_fraction(s, "s")
        if s == -self.rate:
            raise TransformPoleError("transform pole at s = -rate")
        return ExpLinComb.constant(self.rate / (self.rate + s))

    def centered_over_s_mp(self, s):
        # (theta - 1)/s + 1/mu = s -> s / (mu (mu + s)), exactly.
        s = mpmathify(s)
        mu = self.rate
        mu_mp = mpf(mu.numerator) / mu.denominator
        if s == -mu_mp:
            raise TransformPoleError("transform pole at s = -rate")
        return s / (mu_mp * (mu_mp + s))

    def sample(self, rng, size):
        return rng.exponential(1.0 / float(self.rate), size)

    def spec_dict(self):
        return {"family": "exponential", "rate": str(self.rate)}


@dataclass(frozen=True)
class ServiceMoments:
    mean: Fraction
    second_moment: Fraction
    third_moment: Fraction
    variance: Fraction


@dataclass(frozen=True)
class DelayMoments:
    """Moments of the stationary delay (queueing wait), atom included."""

    mean: Fraction
    second_moment: Fraction
    variance: Fraction


@dataclass(frozen=True)
class SystemSizeMoments:
    """Moments of the stationary number in system."""

    mean: Fraction
    second_factorial_moment: Fraction
    variance: Fraction


@dataclass(frozen=True)
class BoundaryValues:
    """Exact boundary behaviour of the delay density on (0, inf).

    ``value_jump`` / ``derivative_jump`` are (location, size) pairs when the
    density (resp. its slope) is discontinuous somewhere in the interior, and
    None when it is not.
    """

    density_at_zero: Fraction
    derivative_at_zero: Fraction
    value_jump: tuple[Fraction, Fraction] | None
    derivative_jump: tuple[Fraction, Fraction] | None


@dataclass(frozen=True)
class QueueModel:
    """Stable single-server queue: Poisson(arrival_rate) + FIFO service."""

    arrival_rate: Fraction
    service: ServiceDistribution

    def __post_init__(self):
        object.__setattr__(
            self, "arrival_rate", as_fraction(self.arrival_rate, "arrival_rate")
        )
        if self.arrival_rate <= 0:
            raise QueueParameterError("arrival rate must be > 0")
        if not isinstance(self.service, ServiceDistribution):
            raise QueueParameterError(
                "service must be Uniform, Deterministic, or Exponential"
            )
        if self.utilization >= 1:
            raise QueueParameterError(
                f"unstable queue: utilization {self.utilization} >= 1"
            )

    # -- basic exact quantities ---------------------------------------------
    @property
    def service_mean(self) -> Fraction:
        return self.service.mean()

    @property
    def service_rate(self) -> Fraction:
        return Fraction(1, 1) / self.service.mean()

    @property
    def utilization(self) -> Fraction:
        return self.arrival_rate * self.service.mean()

    @property
    def idle_probability(self) -> Fraction:
        """Mass of the delay atom at zero, 1 - utilization."""
        return 1 - self.utilization

    @property
    def density_at_zero(self) -> Fraction:
        """Right limit of the delay density at 0: arrival_rate * (1 - util)."""
        return self.arrival_rate * self.idle_probability

    def service_moments(self) -> ServiceMoments:
        return ServiceMoments(
            mean=self.service.mean(),
            second_moment=self.service.moment(2),
            third_moment=self.service.moment(3),
            variance=self.service.variance(),
        )

    # -- transforms ---------------------------------------------------------
    def service_transform(self, s) -> ExpLinComb:
        return self.service.transform_exact(s)

    def service_transform_mp(self, s):
        return self.service.transform_mp(s)

    def waiting_transform(self, s) -> Union[ExpLinComb, ExpRatio]:
        """E[exp(-s W)] for the stationary delay W, exact at rational s."""
        s = as_fraction(s, "s")
        if s == 0:
            return ExpLinComb.constant(1)
        lam = self.arrival_rate
        num = ExpLinComb.constant(self.idle_probability * s)
        den = ExpLinComb.constant(s - lam) + self.service.transform_exact(s) * lam
        if den.is_zero():
            raise TransformPoleError(f"delay transform pole at s = {s}")
        return num / den

    def waiting_transform_mp(self, s):
        """E[exp(-s W)] at an arbitrary point, at ambient mp precision.

        Uses F(s) = (1-rho) / (1 - rho + lam * C(s)) with
        C(s) = (theta(s)-1)/s + m1, which is regular at s = 0.
        """
        s = mpmathify(s)
        one_minus_rho = self.idle_probability
        omr = mpf(one_minus_rho.numerator) / one_minus_rho.denominator
        if s == 0:
            return mpf(1)
        lam = self.arrival_rate
        lam_mp = mpf(lam.numerator) / lam.denominator
        den = omr + lam_mp * self.service.centered_over_s_mp(s)
        if den == 0:
            raise TransformPoleError(f"delay transform pole at s = {s}")
        return omr / den

    # -- delay moments (Takacs recursion) -------------------------------------
    def delay_moment(self, k: int) -> Fraction:
        """Exact k-th raw moment of the stationary delay.

        E[W^k] = lam/(1-rho) * sum_{i=1..k} C(k,i) m_{i+1}/(i+1) E[W^{k-i}].
        """
        if k < 0:
            raise QueueParameterError("moment order must be >= 0")
        lam = self.arrival_rate
        factor = lam / self.idle_probability
        mom = [Fraction(1)]
        for j in range(1, k + 1):
            acc = Fraction(0)
            for i in range(1, j + 1):
                acc += (
                    math.comb(j, i)
                    * self.service.moment(i + 1)
                    / (i + 1)
                    * mom[j - i]
                )
            mom.append(factor * acc)
        return mom[k]

    def delay_moments(self) -> DelayMoments:
        m1 = self.delay_moment(1)
        m2 = self.delay_moment(2)
        return DelayMoments(mean=m1, second_moment=m2, variance=m2 - m1 * m1)

    def system_size_moments(self) -> SystemSizeMoments:
        """Mean and variance of the equilibrium number in system.

        From the generating function (1-rho)(1-z) theta(lam(1-z)) /
        (theta(lam(1-z)) - z) expanded at z = 1.
        """
        lam, rho = self.arrival_rate, self.utilization
        xi = self.service.moment(2)
        eta = self.service.moment(3)
        a = lam * lam * xi / (2 * self.idle_probability)
        mean = rho + a
        flm2 = (
            lam * lam * xi
            + 2 * rho * a
            + 2 * a * a
            + lam**3 * eta / (3 * self.idle_probability)
        )
        return SystemSizeMoments(
            mean=mean,
            second_factorial_moment=flm2,
            variance=flm2 + mean - mean * mean,
        )

    # -- boundary structure ---------------------------------------------------
    def boundary_values(self) -> BoundaryValues:
        lam = self.arrival_rate
        kappa = self.density_at_zero
        svc = self.service
        if isinstance(svc, Deterministic):
            return BoundaryValues(
                density_at_zero=kappa,
                derivative_at_zero=kappa * lam,
                value_jump=(svc.duration, -lam * self.idle_probability),
                derivative_jump=None,
            )
        if isinstance(svc, Exponential):
            mu = svc.rate
            return BoundaryValues(
                density_at_zero=kappa,
                derivative_at_zero=-kappa * (mu - lam),
                value_jump=None,
                derivative_jump=None,
            )
        assert isinstance(svc, Uniform)
        if svc.lower == 0:
            b = svc.upper
            return BoundaryValues(
                density_at_zero=kappa,
                derivative_at_zero=kappa * (lam - Fraction(1, 1) / b),
                value_jump=None,
                derivative_jump=(b, lam * self.idle_probability / b),
            )
        return BoundaryValues(
            density_at_zero=kappa,
            derivative_at_zero=kappa * lam,
            value_jump=None,
            derivative_jump=None,
        )

    def spec_dict(self) -> dict:
        return {
            "arrival_rate": str(self.arrival_rate),
            "service": self.service.spec_dict(),
            "utilization": str(self.utilization),
        }
