"""Exponential polynomials: finite sums  c * x^k * exp(q + a*x).

``TermSum`` is the exact closed-form carrier for every density segment this
package produces.  Coefficients ``c``, slopes ``a`` and offsets ``q`` live in
the scalar tower of :mod:`.exact` (rationals, real quadratic extensions, and
complex numbers over those), and all calculus needed by the segment recursions
-- differentiation, antidifferentiation, argument shifts, definite integrals
with an optionally infinite lower limit -- is closed over this class.

Terms are keyed canonically by ``(k, a, q)``; two sums are equal exactly when
their canonical term maps coincide.  Because the exponents are algebraic and
distinct exponentials of distinct algebraic numbers are linearly independent
over the algebraic numbers, equality of the canonical maps is equivalent to
equality of the underlying functions, and the same argument makes the pointwise
``at_point`` maps a sound exact-equality test at a single abscissa.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Optional

from mpmath import mp, mpc, mpf

from .errors import DomainError, PrecisionError
from .exact import (
    GUARD_BITS,
    Scalar,
    _mp_eval_raw,
    as_scalar,
    conj,
    is_zero,
    scal_im,
    scal_re,
    scalar_str,
    sort_key,
)

_ZERO = Fraction(0)
_MAX_PREC = 1 << 16

Key = tuple[int, Scalar, Scalar]  # (power k, slope a, offset q)


def _binomial(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out


def _log2_coeff(c: Scalar) -> float:
    """Coarse upper bound on log2 |c| (within ~1 bit)."""
    import math

    if isinstance(c, Fraction):
        if c == 0:
            return float("-inf")
        return c.numerator.bit_length() - c.denominator.bit_length() + 1
    re = scal_re(c)
    im = scal_im(c)
    if not is_zero(im):  # complex: |c| <= |re| + |im|
        return max(_log2_coeff(re), _log2_coeff(im)) + 1
    # real quadratic p + q sqrt(d)
    p, q, d = c.p, c.q, c.d
    lp = _log2_coeff(p) if p else float("-inf")
    lq = _log2_coeff(q) + 0.5 * math.log2(d) if q else float("-inf")
    return max(lp, lq) + 1


_LOG2E = 1.4426950408889634


def _scalar_float(x: Scalar) -> float:
    if isinstance(x, Fraction):
        return x.numerator / x.denominator if abs(x) < 10**300 else float("inf")
    with mp.workprec(64):
        return float(_mp_eval_raw(x))


class TermSum:
    """Immutable canonical sum of terms c * x^k * exp(q + a*x)."""

    __slots__ = ("_terms", "_cache")

    def __init__(self, terms: Mapping[Key, Scalar] | None = None):
        clean: dict[Key, Scalar] = {}
        if terms:
            for (k, a, q), c in terms.items():
                if not is_zero(c):
                    clean[(int(k), as_scalar(a), as_scalar(q))] = as_scalar(c)
        object.__setattr__(self, "_terms", clean)
        object.__setattr__(self, "_cache", {})

    def __setattr__(self, *a):
        raise AttributeError("TermSum is immutable")

    # -- constructors ------------------------------------------------------
    @classmethod
    def zero(cls) -> "TermSum":
        return cls()

    @classmethod
    def term(cls, coef, power: int = 0, slope=0, offset=0) -> "TermSum":
        """Single term coef * x^power * exp(offset + slope*x)."""
        return cls({(power, as_scalar(slope), as_scalar(offset)): as_scalar(coef)})

    @classmethod
    def constant(cls, coef) -> "TermSum":
        return cls.term(coef)

    @classmethod
    def from_terms(cls, items: Iterable[tuple[Scalar, int, Scalar, Scalar]]) -> "TermSum":
        """Build from (coef, power, slope, offset) tuples, merging duplicates."""
        out: dict[Key, Scalar] = {}
        for coef, power, slope, offset in items:
            key = (int(power), as_scalar(slope), as_scalar(offset))
            cur = out.get(key, _ZERO) + as_scalar(coef)
            if is_zero(cur):
                out.pop(key, None)
            else:
                out[key] = cur
        return cls(out)

    # -- inspection ----------------------------------------------------------
    @property
    def terms(self) -> dict[Key, Scalar]:
        return dict(self._terms)

    def num_terms(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_real(self) -> bool:
        return self == self.conjugate()

    def degree(self) -> int:
        """Largest polynomial power present (-1 for the zero sum)."""
        return max((k for k, _, _ in self._terms), default=-1)

    def sorted_items(self) -> list[tuple[Key, Scalar]]:
        return sorted(
            self._terms.items(),
            key=lambda kv: (kv[0][0], sort_key(kv[0][1]), sort_key(kv[0][2])),
        )

    # -- ring / module operations ---------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = TermSum.constant(other)
        if not isinstance(other, TermSum):
            return NotImplemented
        out = dict(self._terms)
        for key, c in other._terms.items():
            cur = out.get(key, _ZERO) + c
            if is_zero(cur):
                out.pop(key, None)
            else:
                out[key] = cur
        return TermSum(out)

    __radd__ = __add__

    def __neg__(self):
        return TermSum({key: -c for key, c in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = TermSum.constant(other)
        if not isinstance(other, TermSum):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "TermSum":
        c = as_scalar(c)
        if is_zero(c):
            return TermSum()
        return TermSum({key: v * c for key, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, TermSum):
            out: dict[Key, Scalar] = {}
            for (k1, a1, q1), c1 in self._terms.items():
                for (k2, a2, q2), c2 in other._terms.items():
                    key = (k1 + k2, as_scalar(a1 + a2), as_scalar(q1 + q2))
                    cur = out.get(key, _ZERO) + c1 * c2
                    if is_zero(cur):
                        out.pop(key, None)
                    else:
                        out[key] = cur
            return TermSum(out)
        try:
            return self.scale(other)
        except (TypeError, ValueError):
            return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.scale(Fraction(1, 1) / as_scalar(other))

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = TermSum.constant(other)
        if not isinstance(other, TermSum):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    # -- calculus ---------------------------------------------------------
    def derivative(self) -> "TermSum":
        out: dict[Key, Scalar] = {}

        def add(key: Key, c: Scalar):
            cur = out.get(key, _ZERO) + c
            if is_zero(cur):
                out.pop(key, None)
            else:
                out[key] = cur

        for (k, a, q), c in self._terms.items():
            if k:
                add((k - 1, a, q), c * k)
            if not is_zero(a):
                add((k, a, q), c * a)
        return TermSum(out)

    def antiderivative(self) -> "TermSum":
        """One antiderivative (integration constant zero).

        For slope a != 0 integration by parts gives
        ``int c x^k e^{ax} = e^{ax} * sum_{j<=k} (-1)^{k-j} (k!/j!) a^{j-k-1} c x^j``;
        for a == 0 the power rule applies.  Offsets ride along unchanged.
        """
        out: dict[Key, Scalar] = {}

        def add(key: Key, c: Scalar):
            cur = out.get(key, _ZERO) + c
            if is_zero(cur):
                out.pop(key, None)
            else:
                out[key] = cur

        for (k, a, q), c in self._terms.items():
            if is_zero(a):
                add((k + 1, a, q), c * Fraction(1, k + 1))
                continue
            inv_a = Fraction(1, 1) / a
            factor = c * inv_a  # j = k
            add((k, a, q), factor)
            for j in range(k - 1, -1, -1):
                factor = factor * (-(j + 1)) * inv_a
                add((j, a, q), factor)
        return TermSum(out)

    def shift(self, s) -> "TermSum":
        """Substitute x -> x - s (translate the graph right by s)."""
        s = as_scalar(s)
        if is_zero(s):
            return self
        out: dict[Key, Scalar] = {}
        for (k, a, q), c in self._terms.items():
            q_new = as_scalar(q - a * s)
            powers = [as_scalar(1)]
            for _ in range(k):
                powers.append(powers[-1] * (-s))
            for j in range(k + 1):
                key = (j, a, q_new)
                cur = out.get(key, _ZERO) + c * _binomial(k, j) * powers[k - j]
                if is_zero(cur):
                    out.pop(key, None)
                else:
                    out[key] = cur
        return TermSum(out)

    def times_x_power(self, m: int) -> "TermSum":
        if m < 0:
            raise ValueError("power must be nonnegative")
        if m == 0:
            return self
        return TermSum({(k + m, a, q): c for (k, a, q), c in self._terms.items()})

    def at_point(self, x) -> "TermSum":
        """Exact value at ``x`` as a constant TermSum (keys (0, 0, exponent)).

        Merges terms whose exponents q + a*x coincide at this abscissa, so two
        segment functions agree at ``x`` iff their ``at_point`` maps are equal.
        """
        x = as_scalar(x)
        out: dict[Key, Scalar] = {}
        for (k, a, q), c in self._terms.items():
            expo = as_scalar(q + a * x)
            key = (0, _ZERO, expo)
            cur = out.get(key, _ZERO) + c * x**k
            if is_zero(cur):
                out.pop(key, None)
            else:
                out[key] = cur
        return TermSum(out)

    def definite_integral(self, lo, hi) -> "TermSum":
        """Exact integral over [lo, hi] as a constant TermSum.

        ``lo=None`` means an integral from minus infinity, valid only when
        every slope has positive real part (all terms decay to the left).
        """
        anti = self.antiderivative()
        upper = anti.at_point(hi)
        if lo is None:
            for (k, a, q), _ in self._terms.items():
                if real_part_sign_nonpositive(a):
                    raise DomainError(
                        "integral from -infinity requires every exponential "
                        "slope to have positive real part"
                    )
            return upper
        return upper - anti.at_point(lo)

    def conjugate(self) -> "TermSum":
        return TermSum(
            {(k, conj(a), conj(q)): conj(c) for (k, a, q), c in self._terms.items()}
        )

    def real_partner_sum(self) -> "TermSum":
        """(self + conjugate(self)) / 2 -- the real part for real x."""
        return (self + self.conjugate()).scale(Fraction(1, 2))

    # -- numeric evaluation -------------------------------------------------
    def magnitude_slack(self, x: float) -> int:
        """Extra bits needed at x because individual terms dwarf the sum.

        Late recursion cells hold coefficients of ~1e50 and beyond that
        cancel down to order one, so evaluation precision must budget for
        the largest single term.  Rounded up to a multiple of 32 to keep
        the compiled-evaluation cache stable across nearby points.
        """
        import math

        x = float(x)
        worst = 0.0
        for (k, a, q), c in self._terms.items():
            m = _log2_coeff(c)
            if k:
                if x == 0.0:
                    continue
                m += k * math.log2(abs(x))
            m += (_scalar_float(scal_re(a)) * x + _scalar_float(scal_re(q))) * _LOG2E
            if m > worst:
                worst = m
        if worst <= 0:
            return 0
        return ((int(worst) + 8) + 31) // 32 * 32

    def _compiled(self, workprec: int):
        cached = self._cache.get(workprec)
        if cached is not None:
            return cached
        groups: dict[tuple, list] = {}
        order: list[tuple] = []
        with mp.workprec(workprec):
            for (k, a, q), c in self.sorted_items():
                gkey = (a, q)
                if gkey not in groups:
                    groups[gkey] = [
                        _mp_eval_raw(a),
                        mp.exp(_mp_eval_raw(q)),
                        {},
                    ]
                    order.append(gkey)
                groups[gkey][2][k] = _mp_eval_raw(c)
            compiled = []
            for gkey in order:
                a_mp, eq_mp, coeffs = groups[gkey]
                deg = max(coeffs)
                dense = [coeffs.get(j, mpf(0)) for j in range(deg + 1)]
                compiled.append((a_mp, eq_mp, dense))
        self._cache[workprec] = compiled
        return compiled

    def eval_mp(self, x, prec: int = 256):
        """Evaluate at real ``x`` to ``prec`` bits (result is real).

        Complex terms must occur in conjugate pairs (true for every density
        this package builds); a residual imaginary part beyond roundoff is
        reported as a :class:`PrecisionError`.  Working precision is raised
        automatically when individual terms exceed the sum's scale (see
        :meth:`magnitude_slack`), so cancellation never silently destroys
        the requested accuracy.
        """
        workprec = prec + GUARD_BITS + self.magnitude_slack(float(x))
        compiled = self._compiled(workprec)
        with mp.workprec(workprec):
            if isinstance(x, Fraction):
                x_mp = mpf(x.numerator) / x.denominator
            elif isinstance(x, int):
                x_mp = mpf(x)
            else:
                x_mp = _mp_eval_raw(as_scalar(x)) if not isinstance(
                    x, (float, mpf)
                ) else mpf(x)
            total = mpf(0)
            for a_mp, eq_mp, dense in compiled:
                poly = dense[-1]
                for c in reversed(dense[:-1]):
                    poly = poly * x_mp + c
                total += poly * mp.exp(a_mp * x_mp) * eq_mp
            if isinstance(total, mpc):
                scale = max(abs(total.real), mpf(1))
                if abs(total.imag) > scale * mpf(2) ** (-(prec - 4)):
                    raise PrecisionError(
                        "imaginary residue exceeds roundoff; "
                        "term sum is not real-valued"
                    )
                total = total.real
        with mp.workprec(prec):
            return +total

    def eval_checked(self, x, prec: int = 256):
        """Evaluate with cancellation control: escalate until P and 2P agree."""
        work = prec
        while work <= _MAX_PREC:
            v1 = self.eval_mp(x, work)
            v2 = self.eval_mp(x, 2 * work)
            with mp.workprec(prec):
                scale = max(abs(v2), mpf(1))
                if abs(v1 - v2) <= scale * mpf(2) ** (-prec):
                    return +v2
            work *= 2
        raise PrecisionError("evaluation did not stabilize under escalation")

    def __call__(self, x, prec: int = 256):
        return self.eval_mp(x, prec)

    def eval_explin(self, x: Fraction):
        """Exact value at rational ``x`` as an ExpLinComb.

        Requires every coefficient, slope, and offset to be rational.
        """
        from .explin import ExpLinComb

        x = Fraction(x)
        out: dict[Fraction, Fraction] = {}
        for (k, a, q), c in self._terms.items():
            if not (
                isinstance(a, Fraction)
                and isinstance(q, Fraction)
                and isinstance(c, Fraction)
            ):
                raise DomainError("exact exp-combination value needs rational data")
            expo = q + a * x
            cur = out.get(expo, _ZERO) + c * x**k
            if cur:
                out[expo] = cur
            else:
                out.pop(expo, None)
        return ExpLinComb(out)

    # -- formatting --------------------------------------------------------
    def exact_str(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for (k, a, q), c in self.sorted_items():
            bits = [f"({scalar_str(c)})"]
            if k == 1:
                bits.append("x")
            elif k > 1:
                bits.append(f"x^{k}")
            if not is_zero(a) or not is_zero(q):
                if is_zero(a):
                    arg = scalar_str(q)
                elif is_zero(q):
                    arg = f"({scalar_str(a)})*x"
                else:
                    arg = f"{scalar_str(q)} + ({scalar_str(a)})*x"
                bits.append(f"exp({arg})")
            parts.append("*".join(bits))
        return " + ".join(parts)

    def __repr__(self):
        n = len(self._terms)
        if n <= 6:
            return f"TermSum[{self.exact_str()}]"
        return f"TermSum<{n} terms>"


def real_part_sign_nonpositive(a: Scalar) -> bool:
    """True when Re(a) <= 0 (used to reject divergent left tails)."""
    re = scal_re(a)
    if isinstance(re, Fraction):
        return re <= 0
    return re.sign() <= 0
