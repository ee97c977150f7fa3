"""Exception types shared across the package."""

from __future__ import annotations


class MG1Error(Exception):
    """Base class for all package-specific errors."""


class QueueParameterError(MG1Error, ValueError):
    """Invalid queue parameters (non-positive rates, utilization >= 1, ...)."""


class GridError(MG1Error, ValueError):
    """Service endpoints admit no acceptable common grid."""


class DomainError(MG1Error, ValueError):
    """Query outside the solved or mathematically valid domain."""


class TransformPoleError(MG1Error, ZeroDivisionError):
    """Transform evaluated at (or numerically indistinguishable from) a pole."""


class PrecisionError(MG1Error, ArithmeticError):
    """Precision escalation exceeded its cap without the requested agreement."""


class FieldMismatchError(MG1Error, ValueError):
    """Arithmetic between members of different quadratic extensions."""
