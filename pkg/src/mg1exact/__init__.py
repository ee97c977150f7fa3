"""Exact waiting-time and queue-length analysis of M/G/1 queues.

Single-server queues with Poisson arrivals and Uniform, Deterministic,
or Exponential service are solved in closed form: the stationary
waiting-time density is built piece by piece as exact
exponential-polynomial expressions, and the number-in-system
distribution as exact exponential combinations.  Floating-point values
are produced only at the last step, at any requested precision, with
automatic guard digits against cancellation.

Quick start::

    from fractions import Fraction
    from mg1exact import QueueModel, Uniform, solve_waiting_density
    from mg1exact.density import WaitingTimeDistribution

    model = QueueModel(2, Uniform(Fraction(1, 12), Fraction(7, 12)))
    dist = WaitingTimeDistribution(solve_waiting_density(model, x_max=4))
    dist.cdf_exact(Fraction(1, 2)).exact_str()   # closed form
    float(dist.cdf(Fraction(1, 2)))              # its value

Scikit-learn style facades live in :mod:`mg1exact.estimators`, the
command line in :mod:`mg1exact.cli` (entry point ``mg1exact``), and the
self-validation suite in :mod:`mg1exact.verify`.
"""

from .density import (
    TailAsymptote,
    WaitingTimeDistribution,
    fit_tail,
    solve_tail_asymptote,
)
from .errors import (
    DomainError,
    FieldMismatchError,
    GridError,
    MG1Error,
    PrecisionError,
    QueueParameterError,
    TransformPoleError,
)
from .estimators import QueueLengthEstimator, WaitingTimeEstimator
from .laplace import exponential_selftest, invert_delay_density
from .model import (
    Deterministic,
    Exponential,
    QueueModel,
    Uniform,
    as_fraction,
)
from .qlen import QueueLengthDistribution, pgf_series_exact
from .simulate import (
    ks_band,
    ks_statistic,
    replicate_waiting,
    simulate_system_size,
    simulate_waiting,
)
from .solver import solve_waiting_density
from .verify import CHECK_NAMES, CheckResult, run_checks

__version__ = "0.1.0"

__all__ = [
    "CHECK_NAMES",
    "CheckResult",
    "Deterministic",
    "DomainError",
    "Exponential",
    "FieldMismatchError",
    "GridError",
    "MG1Error",
    "PrecisionError",
    "QueueLengthDistribution",
    "QueueLengthEstimator",
    "QueueModel",
    "QueueParameterError",
    "TailAsymptote",
    "TransformPoleError",
    "Uniform",
    "WaitingTimeDistribution",
    "WaitingTimeEstimator",
    "as_fraction",
    "exponential_selftest",
    "fit_tail",
    "invert_delay_density",
    "ks_band",
    "ks_statistic",
    "pgf_series_exact",
    "replicate_waiting",
    "run_checks",
    "simulate_system_size",
    "simulate_waiting",
    "solve_tail_asymptote",
    "solve_waiting_density",
    "__version__",
]
