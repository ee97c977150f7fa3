"""Equilibrium number-in-system distribution via the generating function.

With theta the service transform and lam the arrival rate, the stationary
number in system L of a stable FIFO single-server queue has

    Pi(z) = E[z^L] = (1 - rho)(1 - z) D(z) / (D(z) - z),   D(z) = theta(lam(1-z)).

The coefficients of D are exact exponential combinations (:class:`ExpLinComb`),
so the probabilities can be extracted exactly.  Exponential combinations are
not closed under division, so the exact path carries

    u_l = p_l * D(0)^(l+1)   via   u_l = N_l E0^l - sum_{j=1..l} E_j u_{l-j} E0^(j-1)

where N is the numerator series, E the denominator series, and E0 = D(0);
``p_l`` is returned as the exact quotient, which collapses to a plain
combination whenever E0 is a single term (deterministic and exponential
service).  A big-float path evaluates long stretches of the series cheaply.

Term counts on the exact path grow quadratically in l for uniform service;
exact extraction is meant for small l (the big-float path covers the rest).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from mpmath import mp, mpf

from .errors import DomainError
from .explin import ExpLinComb, ExpRatio
from .model import Deterministic, Exponential, QueueModel, Uniform

__all__ = [
    "theta_series_exact",
    "pgf_value",
    "pgf_series_exact",
    "pgf_series_mp",
    "QueueLengthDistribution",
]


def theta_series_exact(model: QueueModel, count: int) -> list[ExpLinComb]:
    """First ``count`` coefficients of D(z) = theta(lam(1-z)), exact.

    Exponential-in-z expansions: for service point mass a,
    D(z) = e^{-a lam} sum (a lam z)^j / j!; uniform service divides the
    difference of two such series by lam(1-z)(b-a), the 1/(1-z) turning into
    cumulative sums; exponential service gives a geometric series.
    """
    lam = model.arrival_rate
    svc = model.service
    if isinstance(svc, Deterministic):
        alam = svc.duration * lam
        coef = Fraction(1)
        out = []
        for j in range(count):
            if j:
                coef = coef * alam / j
            out.append(ExpLinComb({-alam: coef}))
        return out
    if isinstance(svc, Exponential):
        mu = svc.rate
        ratio = lam / (mu + lam)
        base = mu / (mu + lam)
        return [ExpLinComb.constant(base * ratio**j) for j in range(count)]
    assert isinstance(svc, Uniform)
    a, b = svc.lower, svc.upper
    pre = Fraction(1, 1) / ((b - a) * lam)
    alam, blam = a * lam, b * lam
    ca, cb = Fraction(1), Fraction(1)
    out: list[ExpLinComb] = []
    acc = ExpLinComb()
    for j in range(count):
        if j:
            ca = ca * alam / j
            cb = cb * blam / j
        s_j = ExpLinComb({-alam: pre * ca}) - ExpLinComb({-blam: pre * cb})
        acc = acc + s_j
        out.append(acc)
    return out


def _series_nde(model: QueueModel, count: int):
    """Numerator N, denominator E = D - z, and E0 for the series division."""
    d = theta_series_exact(model, count)
    one_minus_rho = model.idle_probability
    n = [d[0] * one_minus_rho]
    for l in range(1, count):
        n.append((d[l] - d[l - 1]) * one_minus_rho)
    e = list(d)
    if count > 1:
        e[1] = e[1] - 1
    return n, e, d[0]


def pgf_series_exact(
    model: QueueModel, count: int
) -> list[Union[ExpLinComb, ExpRatio]]:
    """Exact probabilities P(L = l) for l = 0..count-1."""
    if count <= 0:
        return []
    n, e, e0 = _series_nde(model, count)
    e0_pow = [ExpLinComb.constant(1)]
    for _ in range(count):
        e0_pow.append(e0_pow[-1] * e0)
    u: list[ExpLinComb] = []
    for l in range(count):
        acc = n[l] * e0_pow[l]
        for j in range(1, l + 1):
            acc = acc - e[j] * u[l - j] * e0_pow[j - 1]
        u.append(acc)
    return [ExpRatio(u[l], e0_pow[l + 1]).simplify() for l in range(count)]


def pgf_series_mp(model: QueueModel, count: int, prec: int = 256) -> list[mpf]:
    """Probabilities P(L = l), l = 0..count-1, as big floats.

    Plain division recurrence; the leading terms of the sum cancel down to
    the geometrically small p_l, so allow ~0.9*l bits of slack in prec.
    """
    if count <= 0:
        return []
    with mp.workprec(prec + 32):
        n, e, e0 = _series_nde(model, count)
        n_mp = [x.eval_mp(prec + 32) for x in n]
        e_mp = [x.eval_mp(prec + 32) for x in e]
        e0_mp = e0.eval_mp(prec + 32)
        p: list[mpf] = []
        for l in range(count):
            acc = n_mp[l]
            for j in range(1, l + 1):
                acc -= e_mp[j] * p[l - j]
            p.append(acc / e0_mp)
        out = p
    with mp.workprec(prec):
        return [+x for x in out]


def pgf_value(model: QueueModel, z) -> Union[ExpLinComb, ExpRatio]:
    """Exact Pi(z) at rational z (1 at z = 1)."""
    z = Fraction(z)
    if z == 1:
        return ExpLinComb.constant(1)
    lam = model.arrival_rate
    d = model.service.transform_exact(lam * (1 - z))
    den = d - z
    if den.is_zero():
        raise DomainError(f"generating function pole at z = {z}")
    num = d * (model.idle_probability * (1 - z))
    return num / den


@dataclass
class QueueLengthDistribution:
    """Lazy access to exact and big-float system-size probabilities."""

    model: QueueModel

    def __post_init__(self):
        self._exact: list = []
        self._mp: dict[int, list] = {}

    def prob_exact(self, l: int) -> Union[ExpLinComb, ExpRatio]:
        if l < 0:
            raise DomainError("index must be >= 0")
        if l >= len(self._exact):
            self._exact = pgf_series_exact(self.model, l + 1)
        return self._exact[l]

    def pmf(self, count: int, prec: int = 256) -> list[mpf]:
        cache = self._mp.get(prec, [])
        if count > len(cache):
            cache = pgf_series_mp(self.model, count, prec)
            self._mp[prec] = cache
        return cache[:count]

    def prob(self, l: int, prec: int = 256) -> mpf:
        return self.pmf(l + 1, prec)[l]

    def mean(self) -> Fraction:
        return self.model.system_size_moments().mean

    def variance(self) -> Fraction:
        return self.model.system_size_moments().variance

    def ratio_diagnostics(self, count: int = 24, prec: int = 256) -> dict:
        """Successive-ratio report for the pmf tail (diagnostic only).

        The ratios p_{l+1}/p_l drift toward lam/(lam + gamma), the reciprocal
        root of D(z) = z beyond 1, with gamma the delay tail decay rate; the
        report includes that reference point but asserts nothing.
        """
        from .density import solve_tail_asymptote

        pmf = self.pmf(count + 1, prec)
        ratios = [float(pmf[l + 1] / pmf[l]) for l in range(count)]
        lam = self.model.arrival_rate
        with mp.workprec(prec):
            gamma = solve_tail_asymptote(self.model, prec).decay_rate
            lam_mp = mpf(lam.numerator) / lam.denominator
            ref = float(lam_mp / (lam_mp + gamma))
        return {
            "ratios": ratios,
            "limit_estimate": ratios[-1] if ratios else None,
            "decay_reciprocal_from_tail": ref,
        }
