"""Exact scalar arithmetic: rationals, quadratic extensions, and complex pairs.

Scalars are closed under +, -, *, / and evaluate to big floats at any
requested precision.  Three concrete representations are used:

* ``fractions.Fraction``  -- plain rationals,
* ``QuadExt``            -- p + q*sqrt(d) with rational p, q and squarefree
  integer d >= 2,
* ``ComplexExt``         -- re + im*i where each component is a Fraction or
  a QuadExt.

Arithmetic demotes automatically: a QuadExt whose surd coefficient cancels
becomes a Fraction, a ComplexExt whose imaginary part cancels becomes its
real component.  Values therefore always live in the simplest possible
representation, and two equal values always compare (and hash) equal.

All scalar instances are immutable and safe to share across threads.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt
from typing import Union

from mpmath import mp, mpc, mpf

from .errors import FieldMismatchError

Scalar = Union[Fraction, "QuadExt", "ComplexExt"]

#: Guard bits used so that a final rounding to the requested precision is
#: faithful (error < 1 ulp) despite intermediate roundings.
GUARD_BITS = 32

_SMALL_PRIMES_LIMIT = 100_000


def _square_split(n: int) -> tuple[int, int]:
    """Write n = s*s*m with m squarefree (best effort); return (s, m).

    Trial division by primes below a fixed bound, then a perfect-square check
    on the remainder.  Inputs derive from user-level rationals, so they are
    small in practice; a remainder with a large square factor is left as is,
    which keeps the decomposition deterministic.
    """
    if n <= 0:
        raise ValueError("square_split expects a positive integer")
    s, m = 1, 1
    p = 2
    while p * p <= n and p < _SMALL_PRIMES_LIMIT:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            s *= p ** (e // 2)
            if e % 2:
                m *= p
        p += 1 if p == 2 else 2
    r = isqrt(n)
    if r * r == n:
        s *= r
    else:
        m *= n
    return s, m


def canonical_sqrt(d: Fraction) -> tuple[Fraction, int]:
    """Return (factor, core) with sqrt(d) = factor*sqrt(core), core squarefree.

    core == 1 means d is a perfect square of a rational.
    """
    d = Fraction(d)
    if d < 0:
        raise ValueError("negative discriminant is not supported")
    if d == 0:
        return Fraction(0), 1
    # sqrt(p/q) = sqrt(p*q)/q
    s, core = _square_split(d.numerator * d.denominator)
    return Fraction(s, d.denominator), core


def quad(p, q, d) -> Scalar:
    """Construct p + q*sqrt(d), demoted to a Fraction when possible."""
    p = Fraction(p)
    q = Fraction(q)
    if q == 0:
        return p
    factor, core = canonical_sqrt(Fraction(d))
    if core == 1:
        return p + q * factor
    return QuadExt._raw(p, q * factor, core)


def cplx(re, im) -> Scalar:
    """Construct re + im*i, demoted to the real component when im == 0."""
    re = re if isinstance(re, QuadExt) else Fraction(re)
    im = im if isinstance(im, QuadExt) else Fraction(im)
    if is_zero(im):
        return re
    return ComplexExt._raw(re, im)


def as_scalar(x) -> Scalar:
    """Coerce ints/Fractions (and pass scalars through) to Scalar."""
    if isinstance(x, (QuadExt, ComplexExt, Fraction)):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as an exact scalar")


class QuadExt:
    """p + q*sqrt(d) with d a squarefree integer >= 2 and q != 0."""

    __slots__ = ("p", "q", "d")

    def __init__(self, p, q, d):
        # Public constructor normalizes; may *not* return a Fraction, so it
        # rejects arguments that would demote.  Use quad() when unsure.
        v = quad(p, q, d)
        if not isinstance(v, QuadExt):
            raise ValueError("QuadExt would demote to a rational; use quad()")
        object.__setattr__(self, "p", v.p)
        object.__setattr__(self, "q", v.q)
        object.__setattr__(self, "d", v.d)

    @classmethod
    def _raw(cls, p: Fraction, q: Fraction, d: int) -> "QuadExt":
        self = object.__new__(cls)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "d", d)
        return self

    def __setattr__(self, *a):
        raise AttributeError("QuadExt is immutable")

    # -- helpers -------------------------------------------------------
    def _check(self, other: "QuadExt"):
        if self.d != other.d:
            raise FieldMismatchError(
                f"mixed extensions sqrt({self.d}) and sqrt({other.d})"
            )

    def conjugate(self) -> "QuadExt":
        """Field conjugate: sqrt(d) -> -sqrt(d)."""
        return QuadExt._raw(self.p, -self.q, self.d)

    def norm(self) -> Fraction:
        """p*p - q*q*d, the product with the field conjugate."""
        return self.p * self.p - self.q * self.q * self.d

    def sign(self) -> int:
        """Exact sign of the real value p + q*sqrt(d)."""
        if self.q == 0:  # cannot happen post-normalization, kept for safety
            return (self.p > 0) - (self.p < 0)
        if self.p >= 0 and self.q > 0:
            return 1
        if self.p <= 0 and self.q < 0:
            return -1
        # p and q have opposite signs; compare p^2 with q^2 d
        lhs = self.p * self.p
        rhs = self.q * self.q * self.d
        if lhs == rhs:
            return 0
        big_p = lhs > rhs
        return (1 if big_p else -1) * (1 if self.p > 0 else -1)

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other):
        if isinstance(other, QuadExt):
            self._check(other)
            return quad(self.p + other.p, self.q + other.q, self.d)
        if isinstance(other, (Fraction, int)):
            return QuadExt._raw(self.p + other, self.q, self.d)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return QuadExt._raw(-self.p, -self.q, self.d)

    def __sub__(self, other):
        r = self.__add__(-other if isinstance(other, (QuadExt, Fraction, int)) else other)
        return r

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, QuadExt):
            self._check(other)
            return quad(
                self.p * other.p + self.q * other.q * self.d,
                self.p * other.q + self.q * other.p,
                self.d,
            )
        if isinstance(other, (Fraction, int)):
            if other == 0:
                return Fraction(0)
            return QuadExt._raw(self.p * other, self.q * other, self.d)
        return NotImplemented

    __rmul__ = __mul__

    def _inverse(self) -> "QuadExt":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("QuadExt with zero norm")
        return QuadExt._raw(self.p / n, -self.q / n, self.d)

    def __truediv__(self, other):
        if isinstance(other, QuadExt):
            self._check(other)
            return self * other._inverse()
        if isinstance(other, (Fraction, int)):
            if other == 0:
                raise ZeroDivisionError
            return QuadExt._raw(self.p / other, self.q / other, self.d)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (Fraction, int)):
            return self._inverse() * other
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out: Scalar = Fraction(1)
        base: Scalar = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- comparisons ---------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, QuadExt):
            return (self.p, self.q, self.d) == (other.p, other.q, other.d)
        if isinstance(other, (Fraction, int)):
            return False  # q != 0 always, so never rational
        if isinstance(other, ComplexExt):
            return False
        return NotImplemented

    def __hash__(self):
        return hash(("quadext", self.p, self.q, self.d))

    def __repr__(self):
        return f"({self.p} + {self.q}*sqrt({self.d}))"


class ComplexExt:
    """re + im*i with Fraction or QuadExt components and im != 0."""

    __slots__ = ("re", "im")

    def __init__(self, re, im):
        v = cplx(re, im)
        if not isinstance(v, ComplexExt):
            raise ValueError("ComplexExt would demote to a real scalar; use cplx()")
        object.__setattr__(self, "re", v.re)
        object.__setattr__(self, "im", v.im)

    @classmethod
    def _raw(cls, re, im) -> "ComplexExt":
        self = object.__new__(cls)
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)
        return self

    def __setattr__(self, *a):
        raise AttributeError("ComplexExt is immutable")

    def conjugate(self) -> "ComplexExt":
        """Complex conjugate (components are left untouched)."""
        return ComplexExt._raw(self.re, -self.im)

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other):
        if isinstance(other, ComplexExt):
            return cplx(self.re + other.re, self.im + other.im)
        if isinstance(other, (QuadExt, Fraction, int)):
            return ComplexExt._raw(self.re + other, self.im)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return ComplexExt._raw(-self.re, -self.im)

    def __sub__(self, other):
        if isinstance(other, (ComplexExt, QuadExt, Fraction, int)):
            return self.__add__(-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, ComplexExt):
            return cplx(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        if isinstance(other, (QuadExt, Fraction, int)):
            if is_zero(as_scalar(other) if isinstance(other, int) else other):
                return Fraction(0)
            return cplx(self.re * other, self.im * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ComplexExt):
            den = other.re * other.re + other.im * other.im
            num = self * other.conjugate()
            if isinstance(num, ComplexExt):
                return cplx(num.re / den, num.im / den)
            return num / den
        if isinstance(other, (QuadExt, Fraction, int)):
            return cplx(self.re / other, self.im / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (QuadExt, Fraction, int)):
            den = self.re * self.re + self.im * self.im
            conj = self.conjugate()
            return cplx(conj.re * other / den, conj.im * other / den)
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out: Scalar = Fraction(1)
        base: Scalar = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, ComplexExt):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (QuadExt, Fraction, int)):
            return False  # im != 0 always
        return NotImplemented

    def __hash__(self):
        return hash(("complexext", self.re, self.im))

    def __repr__(self):
        return f"({self.re!r} + {self.im!r}*i)"


# -- free helpers -------------------------------------------------------

def is_zero(x: Scalar) -> bool:
    if isinstance(x, Fraction):
        return x == 0
    if isinstance(x, int):
        return x == 0
    return False  # QuadExt and ComplexExt are nonzero by construction


def scal_re(x: Scalar) -> Scalar:
    """Real part of a scalar."""
    return x.re if isinstance(x, ComplexExt) else x


def scal_im(x: Scalar) -> Scalar:
    """Imaginary part of a scalar."""
    return x.im if isinstance(x, ComplexExt) else Fraction(0)


def conj(x: Scalar) -> Scalar:
    """Complex conjugate of a scalar (rationals and QuadExt are fixed)."""
    return x.conjugate() if isinstance(x, ComplexExt) else x


def real_sign(x: Scalar) -> int:
    """Exact sign of a real scalar; rejects complex values."""
    if isinstance(x, ComplexExt):
        raise ValueError("sign of a complex scalar is undefined")
    if isinstance(x, QuadExt):
        return x.sign()
    return (x > 0) - (x < 0)


def sort_key(x: Scalar) -> tuple:
    """Deterministic total order on scalars, for canonical term ordering."""
    if isinstance(x, ComplexExt):
        return (2,) + sort_key(x.re) + sort_key(x.im)
    if isinstance(x, QuadExt):
        return (1, x.p, x.q, x.d)
    return (0, Fraction(x), Fraction(0), 0)


def mp_eval(x: Scalar, prec: int):
    """Evaluate a scalar to an mpf/mpc with prec bits (faithfully rounded)."""
    with mp.workprec(prec + GUARD_BITS):
        v = _mp_eval_raw(x)
    with mp.workprec(prec):
        return +v


def _mp_eval_raw(x: Scalar):
    """Evaluate at the ambient precision (caller supplies guard bits)."""
    if isinstance(x, Fraction):
        return mpf(x.numerator) / x.denominator
    if isinstance(x, int):
        return mpf(x)
    if isinstance(x, QuadExt):
        return (mpf(x.p.numerator) / x.p.denominator
                + (mpf(x.q.numerator) / x.q.denominator) * mp.sqrt(x.d))
    if isinstance(x, ComplexExt):
        return mpc(_mp_eval_raw(x.re), _mp_eval_raw(x.im))
    raise TypeError(f"not a scalar: {x!r}")


def scalar_str(x: Scalar) -> str:
    """Render a scalar exactly, e.g. '2/3', '1/2 + 1*sqrt(2)', '(0 + 1/2*sqrt(2))*i'."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, QuadExt):
        qs = f"{x.q}*sqrt({x.d})"
        if x.p == 0:
            return qs
        op = "+" if x.q > 0 else "-"
        mag = f"{abs(x.q)}*sqrt({x.d})"
        return f"{x.p} {op} {mag}"
    if isinstance(x, ComplexExt):
        return f"({scalar_str(x.re)}) + ({scalar_str(x.im)})*i"
    return str(x)
