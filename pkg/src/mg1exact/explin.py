"""Exact linear combinations sum_i r_i * exp(q_i) with rational r_i, q_i.

These arise as transform values at rational arguments and as queue-length
probabilities.  They form a ring (closed under +, -, *) but not a field, so
quotients are carried as ``ExpRatio`` pairs; a quotient whose denominator is
a single term folds back into an ``ExpLinComb``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from mpmath import mp, mpf

from .errors import PrecisionError

_GUARD = 32
_MAX_PREC = 1 << 16


class ExpLinComb:
    """Immutable map {exponent q -> coefficient r} for sum r*exp(q)."""

    __slots__ = ("_terms",)

    def __init__(self, terms: dict[Fraction, Fraction] | None = None):
        clean: dict[Fraction, Fraction] = {}
        if terms:
            for q, r in terms.items():
                if r:
                    clean[Fraction(q)] = Fraction(r)
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, *a):
        raise AttributeError("ExpLinComb is immutable")

    # -- constructors ----------------------------------------------------
    @classmethod
    def constant(cls, r) -> "ExpLinComb":
        return cls({Fraction(0): Fraction(r)})

    @classmethod
    def exp_term(cls, r, q) -> "ExpLinComb":
        return cls({Fraction(q): Fraction(r)})

    zero_: "ExpLinComb"

    # -- inspection ------------------------------------------------------
    @property
    def terms(self) -> dict[Fraction, Fraction]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_rational(self) -> bool:
        return all(q == 0 for q in self._terms)

    def as_rational(self) -> Fraction:
        if not self._terms:
            return Fraction(0)
        if self.is_rational():
            return self._terms[Fraction(0)]
        raise ValueError("not a pure rational")

    def single_term(self) -> tuple[Fraction, Fraction] | None:
        """(r, q) when the combination is exactly one term, else None."""
        if len(self._terms) == 1:
            (q, r), = self._terms.items()
            return r, q
        return None

    def __len__(self):
        return len(self._terms)

    # -- ring operations ---------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self._terms)
        for q, r in other._terms.items():
            s = out.get(q, Fraction(0)) + r
            if s:
                out[q] = s
            else:
                out.pop(q, None)
        return ExpLinComb(out)

    __radd__ = __add__

    def __neg__(self):
        return ExpLinComb({q: -r for q, r in self._terms.items()})

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return ExpLinComb()
            return ExpLinComb({q: r * other for q, r in self._terms.items()})
        if isinstance(other, ExpLinComb):
            out: dict[Fraction, Fraction] = {}
            for q1, r1 in self._terms.items():
                for q2, r2 in other._terms.items():
                    q = q1 + q2
                    s = out.get(q, Fraction(0)) + r1 * r2
                    if s:
                        out[q] = s
                    else:
                        out.pop(q, None)
            return ExpLinComb(out)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * Fraction(1, 1) / ExpLinComb.constant(other)
        if isinstance(other, ExpLinComb):
            single = other.single_term()
            if single is not None:
                r, q = single
                return ExpLinComb(
                    {qq - q: rr / r for qq, rr in self._terms.items()}
                )
            return ExpRatio(self, other)
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out = ExpLinComb.constant(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    # -- evaluation ------------------------------------------------------
    def eval_mp(self, prec: int = 256):
        """Evaluate to an mpf at prec bits, escalating on cancellation."""
        work = prec
        prev = None
        while work <= _MAX_PREC:
            with mp.workprec(work + _GUARD):
                total = mpf(0)
                for q, r in self._terms.items():
                    term = (mpf(r.numerator) / r.denominator) * mp.exp(
                        mpf(q.numerator) / q.denominator
                    )
                    total += term
            if prev is not None:
                scale = max(abs(prev), mpf(1))
                if abs(total - prev) <= scale * mpf(2) ** (-prec):
                    with mp.workprec(prec):
                        return +total
            prev = total
            work *= 2
        raise PrecisionError("exp-combination evaluation did not stabilize")

    def __float__(self):
        return float(self.eval_mp(96))

    # -- formatting ------------------------------------------------------
    def exact_str(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for q in sorted(self._terms):
            r = self._terms[q]
            if q == 0:
                parts.append(f"({r})")
            else:
                parts.append(f"({r})*exp({q})")
        return " + ".join(parts)

    def __repr__(self):
        return f"ExpLinComb[{self.exact_str()}]"


ExpLinComb.zero_ = ExpLinComb()


def _coerce(x):
    if isinstance(x, ExpLinComb):
        return x
    if isinstance(x, (int, Fraction)):
        return ExpLinComb.constant(x)
    return NotImplemented


class ExpRatio:
    """Quotient of two ExpLinComb values, kept unevaluated.

    No simplification beyond single-term denominator folding is attempted;
    the pair is exact as written.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: ExpLinComb, den: ExpLinComb):
        if den.is_zero():
            raise ZeroDivisionError("ExpRatio with zero denominator")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, *a):
        raise AttributeError("ExpRatio is immutable")

    @classmethod
    def wrap(cls, x) -> "ExpRatio":
        if isinstance(x, ExpRatio):
            return x
        x = _coerce(x)
        return cls(x, ExpLinComb.constant(1))

    def simplify(self) -> "ExpRatio | ExpLinComb":
        single = self.den.single_term()
        if single is not None:
            return self.num / self.den
        return self

    # -- arithmetic (field operations on pairs) --------------------------
    def __add__(self, other):
        o = ExpRatio.wrap(other)
        return ExpRatio(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return ExpRatio(-self.num, self.den)

    def __sub__(self, other):
        return self + (-ExpRatio.wrap(other))

    def __rsub__(self, other):
        return ExpRatio.wrap(other) + (-self)

    def __mul__(self, other):
        o = ExpRatio.wrap(other)
        return ExpRatio(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = ExpRatio.wrap(other)
        if o.num.is_zero():
            raise ZeroDivisionError
        return ExpRatio(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        return ExpRatio.wrap(other) / self

    def equals(self, other) -> bool:
        """Exact equality by cross-multiplication."""
        o = ExpRatio.wrap(other)
        return self.num * o.den == o.num * self.den

    def eval_mp(self, prec: int = 256):
        num = self.num.eval_mp(prec + _GUARD)
        den = self.den.eval_mp(prec + _GUARD)
        with mp.workprec(prec):
            return num / den

    def __float__(self):
        return float(self.eval_mp(96))

    def exact_str(self) -> str:
        return f"({self.num.exact_str()}) / ({self.den.exact_str()})"

    def __repr__(self):
        return f"ExpRatio[{self.exact_str()}]"
