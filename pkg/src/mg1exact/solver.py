"""Segment-by-segment exact solver for the stationary delay density.

For a stable queue fed by Poisson arrivals, the delay distribution has an
atom of mass 1 - rho at zero and a density f on (0, inf).  On each cell of a
rational grid the density satisfies a linear ODE whose inhomogeneity involves
only earlier cells, so the pieces can be solved left to right in closed form.
Everything here is exact: coefficients live in the scalar tower of
:mod:`.exact` and every piece is a :class:`~.expoly.TermSum`.

The three service families lead to three recursions:

* uniform on [a, b] with a > 0: grid step h = gcd(a, b); the first a/h cells
  carry kappa * exp(lam x) (extended virtually to -inf, which accounts for
  the atom), and each later cell solves a first-order ODE whose right side
  integrates the density over [x - b, x - a] split across cells;
* uniform on [0, b]: grid step b; each cell solves a second-order ODE with
  complex-conjugate characteristic roots lam/2 +- i sqrt(lam(2 mu - lam))/2,
  forced by the previous piece shifted by b.  The density is continuous with
  one upward slope jump lam (1 - rho)/b at x = b;
* deterministic a: grid step a; first-order ODE forced by the previous piece
  shifted by a; the density itself drops by lam (1 - rho) at x = a.

Exponential service needs no recursion: the density is a single global
exponential cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import DomainError, GridError, QueueParameterError
from .exact import Scalar, as_scalar, canonical_sqrt, cplx, is_zero, quad
from .expoly import TermSum
from .model import Deterministic, Exponential, QueueModel, Uniform

__all__ = [
    "SegmentFunction",
    "WaitingTimeDensity",
    "solve_waiting_density",
    "rational_gcd",
    "segment_grid",
    "second_order_roots",
    "deterministic_closed_segment",
    "solve_first_order_segment",
    "solve_second_order_segment",
    "GRID_DENOMINATOR_CAP",
    "MAX_SEGMENTS",
]

GRID_DENOMINATOR_CAP = 10**6
MAX_SEGMENTS = 10_000


def rational_gcd(a: Fraction, b: Fraction) -> Fraction:
    """Largest rational h with a/h and b/h both integers."""
    num = math.gcd(a.numerator * b.denominator, b.numerator * a.denominator)
    return Fraction(num, a.denominator * b.denominator)


def promote_constant(const_ts: TermSum, slope: Scalar, x0) -> TermSum:
    """Turn a constant TermSum v into v * exp(slope * (x - x0))."""
    slope = as_scalar(slope)
    x0 = as_scalar(x0)
    out = {}
    for (k, a, q), c in const_ts.terms.items():
        if k != 0 or not is_zero(a):
            raise ValueError("promote_constant needs a constant TermSum")
        out[(0, slope, as_scalar(q - slope * x0))] = c
    return TermSum(out)


# ---------------------------------------------------------------------------
# linear segment solvers
# ---------------------------------------------------------------------------


def _particular_first_order(lam: Fraction, rhs: TermSum) -> TermSum:
    """One solution of y' - lam y = rhs (rhs a TermSum)."""
    out = TermSum.zero()
    for (k, alpha, q), c in rhs.terms.items():
        e0 = as_scalar(alpha - lam)
        if is_zero(e0):
            # resonance: P' = c x^k
            out = out + TermSum.term(c * Fraction(1, k + 1), k + 1, alpha, q)
            continue
        coeffs = {k: c / e0}
        for j in range(k, 0, -1):
            coeffs[j - 1] = -(coeffs[j] * j) / e0
        out = out + TermSum(
            {(j, as_scalar(alpha), as_scalar(q)): cj for j, cj in coeffs.items()}
        )
    return out


def solve_first_order_segment(
    lam: Fraction, rhs: TermSum, x0, value_ts: TermSum
) -> TermSum:
    """Solve y' - lam y = rhs with y(x0) equal to the constant TermSum given."""
    part = _particular_first_order(lam, rhs)
    deficit = value_ts - part.at_point(x0)
    return part + promote_constant(deficit, Fraction(lam), x0)


def _particular_second_order(lam: Fraction, c0: Fraction, rhs: TermSum) -> TermSum:
    """One solution of y'' - lam y' + c0 y = rhs."""
    out = TermSum.zero()
    for (k, alpha, q), c in rhs.terms.items():
        e0 = as_scalar(alpha * alpha - lam * alpha + c0)
        e1 = as_scalar(2 * alpha - lam)
        if not is_zero(e0):
            coeffs = {k: c / e0}
            if k >= 1:
                coeffs[k - 1] = -(e1 * k * coeffs[k]) / e0
            for j in range(k - 2, -1, -1):
                coeffs[j] = (
                    -(e1 * (j + 1) * coeffs[j + 1])
                    - ((j + 2) * (j + 1)) * coeffs[j + 2]
                ) / e0
        else:
            # alpha is a characteristic root; roots are simple, so e1 != 0.
            # Solve e1 u + u' = c x^k for u = P', then integrate.
            u = {k: c / e1}
            for j in range(k, 0, -1):
                u[j - 1] = -(u[j] * j) / e1
            coeffs = {j + 1: uj * Fraction(1, j + 1) for j, uj in u.items()}
        out = out + TermSum(
            {(j, as_scalar(alpha), as_scalar(q)): cj for j, cj in coeffs.items()}
        )
    return out


def solve_second_order_segment(
    lam: Fraction,
    c0: Fraction,
    roots: tuple[Scalar, Scalar],
    rhs: TermSum,
    x0,
    value_ts: TermSum,
    deriv_ts: TermSum,
) -> TermSum:
    """Solve y'' - lam y' + c0 y = rhs with given value/derivative at x0."""
    r_plus, r_minus = roots
    part = _particular_second_order(lam, c0, rhs)
    dv = value_ts - part.at_point(x0)
    dw = deriv_ts - part.derivative().at_point(x0)
    inv_gap = Fraction(1, 1) / as_scalar(r_plus - r_minus)
    a_const = (dw - dv.scale(r_minus)).scale(inv_gap)
    b_const = dv - a_const
    return (
        part
        + promote_constant(a_const, r_plus, x0)
        + promote_constant(b_const, r_minus, x0)
    )


def second_order_roots(lam: Fraction, service_upper: Fraction) -> tuple[Scalar, Scalar]:
    """Exact characteristic roots lam/2 +- i*sqrt(4 lam/b - lam^2)/2.

    For uniform-on-[0, b] service the characteristic polynomial is
    r^2 - lam r + lam/b with discriminant lam^2 - 4 lam/b < 0 whenever the
    queue is stable, so the roots form a complex-conjugate pair.
    """
    b = service_upper
    d = 4 * lam / b - lam * lam  # = lam (2 mu - lam) with mu = 2/b
    if d <= 0:
        raise QueueParameterError("second-order cell requires utilization < 1")
    fac, core = canonical_sqrt(d / 4)
    imag = fac if core == 1 else quad(0, fac, core)
    half = lam / 2
    return cplx(half, imag), cplx(half, -imag)


# ---------------------------------------------------------------------------
# piecewise result container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SegmentFunction:
    """One closed-form piece of the delay density, valid on [lower, upper)."""

    lower: Fraction
    upper: Optional[Fraction]  # None = unbounded
    expr: TermSum

    def contains(self, x: Fraction, side: str = "right") -> bool:
        if side == "right":
            return self.lower <= x and (self.upper is None or x < self.upper)
        return self.lower < x and (self.upper is None or x <= self.upper)


@dataclass(frozen=True)
class WaitingTimeDensity:
    """Piecewise closed form of the stationary delay law.

    ``atom`` is the probability mass at zero; ``segments`` carry the density
    of the continuous part on contiguous cells starting at 0.  The overall
    distribution is  P(W <= x) = atom + integral of the density up to x.
    """

    model: QueueModel
    case_label: str
    atom: Fraction
    grid_step: Optional[Fraction]
    segments: tuple[SegmentFunction, ...]

    @property
    def upper_limit(self) -> Optional[Fraction]:
        return self.segments[-1].upper

    def breakpoints(self) -> list[Fraction]:
        pts = [seg.lower for seg in self.segments]
        if self.upper_limit is not None:
            pts.append(self.upper_limit)
        return pts

    def _check_range(self, x: Fraction):
        if x < 0:
            raise DomainError("delay density is supported on [0, inf)")
        hi = self.upper_limit
        if hi is not None and x > hi:
            raise DomainError(
                f"point {x} is beyond the solved range [0, {hi}]; "
                "re-solve with a larger x_max"
            )

    def segment_index(self, x, side: str = "right") -> int:
        """Index of the piece whose (half-open) cell contains x.

        ``side='right'`` treats cells as [lower, upper) -- the value at an
        interior breakpoint is the right limit; ``side='left'`` uses
        (lower, upper] and yields left limits instead.
        """
        x = Fraction(x)
        self._check_range(x)
        if side not in ("right", "left"):
            raise ValueError("side must be 'right' or 'left'")
        lows = [seg.lower for seg in self.segments]
        import bisect

        if side == "right":
            i = bisect.bisect_right(lows, x) - 1
            if i < 0:
                raise DomainError("point below support")
            if self.segments[i].upper is not None and x >= self.segments[i].upper:
                raise DomainError(
                    f"point {x} is beyond the solved range; re-solve with a "
                    "larger x_max"
                )
            return i
        if x == 0:
            raise DomainError("left limit at 0 is outside the support")
        i = bisect.bisect_left(lows, x) - 1
        if i < 0:
            raise DomainError("point below support")
        return i

    def segment_at(self, x, side: str = "right") -> SegmentFunction:
        return self.segments[self.segment_index(x, side)]

    def piece(self, n: int) -> TermSum:
        return self.segments[n].expr

    # -- evaluation -------------------------------------------------------
    def density_value(self, x, prec: int = 256, side: str = "right"):
        """Density of the continuous part at x (big float, prec bits)."""
        x = Fraction(x)
        return self.segment_at(x, side).expr.eval_mp(x, prec)

    def density_at_point(self, x, side: str = "right") -> TermSum:
        """Exact density value at rational x as a constant TermSum."""
        x = Fraction(x)
        return self.segment_at(x, side).expr.at_point(x)

    def num_terms(self) -> list[int]:
        return [seg.expr.num_terms() for seg in self.segments]


# ---------------------------------------------------------------------------
# per-family recursions
# ---------------------------------------------------------------------------


def segment_grid(model: QueueModel) -> tuple[Fraction, int, Optional[int]]:
    """Grid step and cell indices (h, A, B) for the model's recursion.

    A is the index of the first solved cell; B (uniform with positive lower
    endpoint only) is b/h.  Raises GridError when the reduced step is finer
    than 1/GRID_DENOMINATOR_CAP.
    """
    svc = model.service
    if isinstance(svc, Uniform):
        if svc.lower == 0:
            return svc.upper, 1, None
        h = rational_gcd(svc.lower, svc.upper)
        if h.denominator > GRID_DENOMINATOR_CAP:
            raise GridError(
                f"grid step {h} is finer than 1/{GRID_DENOMINATOR_CAP}; "
                "endpoints share almost no structure -- coarsen them"
            )
        return h, int(svc.lower / h), int(svc.upper / h)
    if isinstance(svc, Deterministic):
        if svc.duration.denominator > GRID_DENOMINATOR_CAP:
            raise GridError(
                f"grid step {svc.duration} has denominator beyond "
                f"{GRID_DENOMINATOR_CAP}"
            )
        return svc.duration, 1, None
    raise QueueParameterError("no grid for exponential service")


def _n_cells(x_max, h: Fraction) -> int:
    x_max = Fraction(x_max)
    if x_max <= 0:
        raise DomainError("x_max must be positive")
    n = math.floor(x_max / h) + 1
    if n > MAX_SEGMENTS:
        raise GridError(
            f"{n} cells needed to reach {x_max} (step {h}) exceeds the cap "
            f"of {MAX_SEGMENTS}"
        )
    return n


def _solve_uniform_positive(model: QueueModel, n_cells: int) -> list[TermSum]:
    lam = model.arrival_rate
    svc = model.service
    a, b = svc.lower, svc.upper
    h, A, B = segment_grid(model)
    kappa = model.density_at_zero
    weight = lam / (b - a)

    pieces: list[TermSum] = []
    anti: list[TermSum] = []  # antiderivative of piece m
    j_const: list[TermSum] = []  # integral of piece p over its whole cell
    base = TermSum.term(kappa, 0, lam, 0)

    def cell_point(m: int) -> Optional[Fraction]:
        # left endpoint of cell m; cell 0 extends virtually to -inf
        return None if m == 0 else m * h

    for n in range(n_cells):
        if n < A:
            pieces.append(base)
        else:
            i_part = anti[n - A].shift(a)
            left = cell_point(n - A)
            if left is not None:
                i_part = i_part - anti[n - A].at_point(left)
            forcing = i_part
            for p in range(max(0, n - B + 1), n - A):
                forcing = forcing + j_const[p]
            if n >= B:
                m = n - B
                k_part = anti[m].at_point((m + 1) * h) - anti[m].shift(b)
                forcing = forcing + k_part
            rhs = forcing.scale(-weight)  # y' - lam y = -weight * forcing
            value = pieces[n - 1].at_point(n * h)
            pieces.append(solve_first_order_segment(lam, rhs, n * h, value))
        anti.append(pieces[n].antiderivative())
        left = cell_point(n)
        hi = anti[n].at_point((n + 1) * h)
        j_const.append(hi if left is None else hi - anti[n].at_point(left))
    return pieces


def _solve_uniform_zero(model: QueueModel, n_cells: int) -> list[TermSum]:
    lam = model.arrival_rate
    b = model.service.upper
    c0 = lam / b
    roots = second_order_roots(lam, b)
    kappa = model.density_at_zero

    pieces: list[TermSum] = []
    value = TermSum.constant(kappa)
    deriv = TermSum.constant(kappa * (lam - Fraction(1, 1) / b))
    for n in range(n_cells):
        if n == 0:
            rhs = TermSum.zero()
        else:
            rhs = pieces[n - 1].shift(b).scale(c0)
            value = pieces[n - 1].at_point(n * b)
            deriv = pieces[n - 1].derivative().at_point(n * b)
            if n == 1:
                deriv = deriv + TermSum.constant(lam * model.idle_probability / b)
        pieces.append(
            solve_second_order_segment(lam, c0, roots, rhs, n * b, value, deriv)
        )
    return pieces


def _solve_deterministic(model: QueueModel, n_cells: int) -> list[TermSum]:
    lam = model.arrival_rate
    a = model.service.duration
    kappa = model.density_at_zero

    pieces: list[TermSum] = [TermSum.term(kappa, 0, lam, 0)]
    for n in range(1, n_cells):
        rhs = pieces[n - 1].shift(a).scale(-lam)
        value = pieces[n - 1].at_point(n * a)
        if n == 1:
            value = value - TermSum.constant(lam * model.idle_probability)
        pieces.append(solve_first_order_segment(lam, rhs, n * a, value))
    return pieces


def deterministic_closed_segment(model: QueueModel, n: int) -> TermSum:
    """Independent closed form for constant service: piece n equals
    (1-rho) * d/dx sum_{m=0..n} (-lam)^m (x - m a)^m / m! * exp(lam (x - m a)).
    """
    if not isinstance(model.service, Deterministic):
        raise QueueParameterError("closed form applies to constant service only")
    lam = model.arrival_rate
    a = model.service.duration
    total = TermSum.zero()
    for m in range(n + 1):
        coef = Fraction((-lam) ** m, math.factorial(m))
        total = total + TermSum.term(coef, m, lam, 0).shift(m * a)
    return total.derivative().scale(model.idle_probability)


def solve_waiting_density(
    model: QueueModel,
    x_max=None,
    *,
    n_segments: Optional[int] = None,
) -> WaitingTimeDensity:
    """Exact piecewise delay density covering [0, x_max] (or n_segments cells).

    Exponential service yields a single unbounded cell and ignores both
    arguments.  For the other families exactly one of x_max / n_segments
    fixes the coverage.
    """
    svc = model.service
    atom = model.idle_probability

    if isinstance(svc, Exponential):
        mu = svc.rate
        expr = TermSum.term(model.density_at_zero, 0, model.arrival_rate - mu, 0)
        seg = SegmentFunction(Fraction(0), None, expr)
        return WaitingTimeDensity(model, "exponential", atom, None, (seg,))

    if n_segments is None:
        if x_max is None:
            raise DomainError("give x_max (or n_segments) for the solved range")
        h = segment_grid(model)[0]
        n_segments = _n_cells(x_max, h)
    else:
        if n_segments <= 0:
            raise DomainError("n_segments must be positive")
        if n_segments > MAX_SEGMENTS:
            raise GridError(f"n_segments exceeds the cap of {MAX_SEGMENTS}")
        h = segment_grid(model)[0]

    if isinstance(svc, Uniform) and svc.lower > 0:
        pieces = _solve_uniform_positive(model, n_segments)
        label = "uniform-positive-lower"
    elif isinstance(svc, Uniform):
        pieces = _solve_uniform_zero(model, n_segments)
        label = "uniform-zero-lower"
    else:
        pieces = _solve_deterministic(model, n_segments)
        label = "deterministic"

    segs = tuple(
        SegmentFunction(n * h, (n + 1) * h, expr) for n, expr in enumerate(pieces)
    )
    return WaitingTimeDensity(model, label, atom, h, segs)
