"""Command-line surface.

Every command takes the queue description the same way::

    --lambda 2 --uniform 1/12 7/12      (or --deterministic 1/3,
                                         or --exponential 3)

with rates and times parsed as exact rationals ("7/12", "0.25", "3").
Commands:

``density``
    CSV of (x, density) on a uniform grid with step 1/240 over
    (0, x_max]; at a jump point both one-sided values appear as two
    consecutive rows.  The first line is a ``#`` comment holding JSON
    metadata (model, case, precision, atom); writing to a file also
    produces a ``<file>.meta.json`` sidecar with the same record.
``cdf``, ``quantile``, ``mode``, ``moments``, ``tail``
    JSON records; values that exist in closed form carry both an
    ``exact`` expression string and an ``approx`` decimal.
``qlen``
    Number-in-system table (level, exact expression, decimal) plus
    mean and variance.
``simulate``
    Empirical replication summary as JSON (seeded, reproducible).
``verify``
    Runs the package's cross-validation suite and reports pass/fail
    per check; exit status 0 only if everything passes.
``figures``
    Emits the three density CSVs for the documented example models
    (lambda = 2 with Uniform[1/12,7/12], Uniform[0,2/3], and
    Deterministic[1/3] service).

``--precision`` counts significant decimal digits (default 15, or the
``MG1EXACT_PRECISION`` environment variable).  Errors print a JSON
object ``{code, message, context}`` on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction
from typing import Optional

from mpmath import mp, mpf

from . import __version__
from .density import WaitingTimeDistribution, solve_tail_asymptote
from .errors import MG1Error
from .model import (
    Deterministic,
    Exponential,
    QueueModel,
    Uniform,
    as_fraction,
)
from .qlen import QueueLengthDistribution, pgf_series_exact
from .simulate import replicate_waiting
from .solver import solve_waiting_density
from .verify import CHECK_NAMES, run_checks

GRID_STEP = Fraction(1, 240)
DEFAULT_DIGITS = 15
PRECISION_ENV = "MG1EXACT_PRECISION"


# ---------------------------------------------------------------------------
# Argument plumbing
# ---------------------------------------------------------------------------


def _add_model_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--lambda",
        dest="arrival_rate",
        required=True,
        metavar="RATE",
        help="Poisson arrival rate (exact rational or decimal string)",
    )
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument(
        "--uniform",
        nargs=2,
        metavar=("A", "B"),
        help="uniform service times on [A, B]",
    )
    group.add_argument(
        "--deterministic",
        metavar="A",
        help="constant service time A",
    )
    group.add_argument(
        "--exponential",
        metavar="MU",
        help="exponential service times with rate MU",
    )


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--precision",
        type=int,
        default=None,
        metavar="DIGITS",
        help=f"significant decimal digits (default {DEFAULT_DIGITS}, "
        f"or ${PRECISION_ENV})",
    )
    parser.add_argument(
        "--out",
        default=None,
        metavar="PATH",
        help="write output here instead of stdout",
    )
    parser.add_argument(
        "--format",
        choices=("csv", "json"),
        default=None,
        help="output format (default: the command's natural one)",
    )


def _model_from_args(args) -> QueueModel:
    if args.uniform is not None:
        service = Uniform(as_fraction(args.uniform[0]), as_fraction(args.uniform[1]))
    elif args.deterministic is not None:
        service = Deterministic(as_fraction(args.deterministic))
    else:
        service = Exponential(as_fraction(args.exponential))
    return QueueModel(as_fraction(args.arrival_rate), service)


def _digits(args) -> int:
    if args.precision is not None:
        digits = args.precision
    else:
        env = os.environ.get(PRECISION_ENV)
        digits = int(env) if env else DEFAULT_DIGITS
    if digits < 1:
        raise ValueError("--precision must be a positive digit count")
    return digits


def _bits(digits: int) -> int:
    return max(64, math.ceil(digits * 3.3219280948873626) + 32)


def _nstr(value, digits: int) -> str:
    return mp.nstr(value, digits, strip_zeros=False)


def _metadata(args, model: QueueModel, digits: int, **extra) -> dict:
    meta = {
        "tool": "mg1exact",
        "version": __version__,
        "command": args.command,
        "model": model.spec_dict(),
        "precision_digits": digits,
    }
    meta.update(extra)
    return meta


class _Output:
    """stdout or a file, uniformly."""

    def __init__(self, path: Optional[str]):
        self.path = path

    def __enter__(self):
        self.handle = open(self.path, "w", newline="") if self.path else sys.stdout
        return self.handle

    def __exit__(self, *exc):
        if self.path:
            self.handle.close()
        return False


def _emit_json(obj: dict, out: Optional[str]) -> None:
    text = json.dumps(obj, indent=2)
    with _Output(out) as fh:
        fh.write(text + "\n")


def _write_sidecar(out: Optional[str], meta: dict) -> None:
    if out:
        with open(out + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")


def _fraction_str(value: Fraction) -> str:
    return str(value)


def _dual(exact_str: Optional[str], approx) -> dict:
    record = {}
    if exact_str is not None:
        record["exact"] = exact_str
    record["approx"] = approx
    return record


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _solve(model: QueueModel, x_max) -> WaitingTimeDistribution:
    if isinstance(model.service, Exponential):
        return WaitingTimeDistribution(solve_waiting_density(model))
    return WaitingTimeDistribution(
        solve_waiting_density(model, x_max=as_fraction(x_max))
    )


def _density_rows(solution, x_max: Fraction, bits: int, digits: int):
    """(x, value) rows on the 1/240 grid; two rows at a value jump."""
    breakpoints = {
        seg.lower for seg in solution.segments[1:] if seg.lower <= x_max
    }
    rows = []
    steps = int(x_max / GRID_STEP)
    for k in range(1, steps + 1):
        x = k * GRID_STEP
        two_sided = False
        if x in breakpoints:
            n = next(
                i
                for i, seg in enumerate(solution.segments)
                if seg.lower == x
            )
            left = solution.segments[n - 1].expr.at_point(x)
            right = solution.segments[n].expr.at_point(x)
            two_sided = left != right
        if two_sided:
            rows.append((str(x), _nstr(solution.density_value(x, bits, "left"), digits)))
            rows.append((str(x), _nstr(solution.density_value(x, bits, "right"), digits)))
        else:
            rows.append((str(x), _nstr(solution.density_value(x, bits), digits)))
    return rows


def _cmd_density(args) -> int:
    model = _model_from_args(args)
    digits = _digits(args)
    bits = _bits(digits)
    x_max = as_fraction(args.xmax)
    dist = _solve(model, x_max)
    solution = dist.solution
    if solution.upper_limit is not None:
        x_max = min(x_max, solution.upper_limit)
    atom = model.idle_probability
    meta = _metadata(
        args,
        model,
        digits,
        case=solution.case_label,
        grid_step=str(GRID_STEP),
        atom={"exact": _fraction_str(atom), "approx": atom.numerator / atom.denominator},
    )
    rows = _density_rows(solution, x_max, bits, digits)
    if (args.format or "csv") == "json":
        _emit_json(
            {
                "metadata": meta,
                "density": [{"x": x, "value": v} for x, v in rows],
            },
            args.out,
        )
        return 0
    with _Output(args.out) as fh:
        fh.write("# " + json.dumps(meta) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "density"])
        writer.writerows(rows)
    _write_sidecar(args.out, meta)
    return 0


def _cmd_cdf(args) -> int:
    model = _model_from_args(args)
    digits = _digits(args)
    bits = _bits(digits)
    x = as_fraction(args.at)
    dist = _solve(model, max(as_fraction(args.xmax), x))
    with mp.workprec(bits):
        cdf_val = dist.cdf(x, bits)
        exact = None
        if x >= 0:
            exact = dist.cdf_exact(x).exact_str()
        record = {
            "metadata": _metadata(args, model, digits, case=dist.solution.case_label),
            "x": str(x),
            "atom": _dual(
                _fraction_str(model.idle_probability),
                model.idle_probability.numerator / model.idle_probability.denominator,
            ),
            "cdf": _dual(exact, _nstr(cdf_val, digits)),
            "survival": _dual(None, _nstr(1 - cdf_val, digits)),
        }
    _emit_json(record, args.out)
    return 0


def _cmd_quantile(args) -> int:
    model = _model_from_args(args)
    digits = _digits(args)
    bits = _bits(digits)
    p = as_fraction(args.probability)
    dist = _solve(model, args.xmax)
    x = dist.quantile(p, bits)
    record = {
        "metadata": _metadata(args, model, digits, case=dist.solution.case_label),
        "probability": str(p),
        "quantile": _dual("0" if p <= model.idle_probability else None, _nstr(x, digits)),
    }
    _emit_json(record, args.out)
    return 0


def _cmd_mode(args) -> int:
    model = _model_from_args(args)
    digits = _digits(args)
    bits = _bits(digits)
    dist = _solve(model, args.xmax)
    x, value = dist.mode(bits)
    record = {
        "metadata": _metadata(args, model, digits, case=dist.solution.case_label),
        "mode": {"approx": _nstr(x, digits)},
        "density_at_mode": {"approx": _nstr(value, digits)},
    }
    _emit_json(record, args.out)
    return 0


def _cmd_moments(args) -> int:
    model = _model_from_args(args)
    digits = _digits(args)
    delay = model.delay_moments()
    system = model.system_size_moments()

    def frac(value: Fraction) -> dict:
        return _dual(_fraction_str(value), value.numerator / value.denominator)

    record = {
        "metadata": _metadata(args, model, digits),
        "utilization": frac(model.utilization),
        "atom": frac(model.idle_probability),
        "waiting_time": {
            "mean": frac(delay.mean),
            "second_moment": frac(delay.second_moment),
            "variance": frac(delay.variance),
        },
        "queue_length": {
            "mean": frac(system.mean),
            "second_factorial_moment": frac(system.second_factorial_moment),
            "variance": frac(system.variance),
        },
    }
    _emit_json(record, args.out)
    return 0


def _cmd_tail(args) -> int:
    model = _model_from_args(args)
    digits = _digits(args)
    bits = _bits(digits)
    tail = solve_tail_asymptote(model, bits)
    exact_rate = None
    if isinstance(model.service, Exponential):
        exact_rate = _fraction_str(model.service.rate - model.arrival_rate)
    record = {
        "metadata": _metadata(args, model, digits),
        "decay_rate": _dual(exact_rate, _nstr(tail.decay_rate, digits)),
        "prefactor": _dual(
            _fraction_str(model.utilization)
            if isinstance(model.service, Exponential)
            else None,
            _nstr(tail.prefactor, digits),
        ),
    }
    if tail.tau is not None:
        record["tau"] = {"approx": _nstr(tail.tau, digits)}
    _emit_json(record, args.out)
    return 0


def _cmd_qlen(args) -> int:
    model = _model_from_args(args)
    digits = _digits(args)
    bits = _bits(digits)
    top = int(args.levels)
    if top < 0:
        raise ValueError("-L/--levels must be nonnegative")
    qld = QueueLengthDistribution(model)
    series = pgf_series_exact(model, top + 1)
    rows = []
    with mp.workprec(bits):
        for level in range(top + 1):
            rows.append(
                (
                    level,
                    series[level].exact_str(),
                    _nstr(qld.prob(level, bits), digits),
                )
            )
    mean, variance = qld.mean(), qld.variance()
    meta = _metadata(args, model, digits)
    if (args.format or "csv") == "json":
        _emit_json(
            {
                "metadata": meta,
                "probabilities": [
                    {"level": lv, "exact": ex, "approx": ap} for lv, ex, ap in rows
                ],
                "mean": _dual(_fraction_str(mean), mean.numerator / mean.denominator),
                "variance": _dual(
                    _fraction_str(variance),
                    variance.numerator / variance.denominator,
                ),
            },
            args.out,
        )
        return 0
    with _Output(args.out) as fh:
        fh.write("# " + json.dumps(meta) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["level", "exact", "probability"])
        writer.writerows(rows)
        writer.writerow([])
        writer.writerow(["mean", str(mean), _nstr(mpf(mean.numerator) / mean.denominator, digits)])
        writer.writerow(
            ["variance", str(variance), _nstr(mpf(variance.numerator) / variance.denominator, digits)]
        )
    _write_sidecar(args.out, meta)
    return 0


def _cmd_simulate(args) -> int:
    model = _model_from_args(args)
    digits = _digits(args)
    runs = replicate_waiting(
        model,
        int(args.customers),
        int(args.replications),
        seed=int(args.seed),
    )
    replications = [
        {
            "mean": run.mean,
            "se_mean": run.se_mean,
            "zero_fraction": run.zero_fraction,
            "customers_after_warmup": int(run.waits.size),
            "warmup_customers": run.warmup_customers,
        }
        for run in runs
    ]
    pooled_mean = sum(r["mean"] for r in replications) / len(replications)
    delay = model.delay_moments()
    record = {
        "metadata": _metadata(
            args,
            model,
            digits,
            seed=int(args.seed),
            customers=int(args.customers),
            replications=int(args.replications),
        ),
        "replications": replications,
        "pooled_mean": pooled_mean,
        "exact": {
            "mean": _dual(
                _fraction_str(delay.mean), delay.mean.numerator / delay.mean.denominator
            ),
            "zero_probability": _dual(
                _fraction_str(model.idle_probability),
                model.idle_probability.numerator / model.idle_probability.denominator,
            ),
        },
    }
    _emit_json(record, args.out)
    return 0


def _cmd_verify(args) -> int:
    names = args.checks.split(",") if args.checks else None
    results = run_checks(names)
    if args.format == "json":
        _emit_json(
            {
                "results": [
                    {
                        "name": r.name,
                        "passed": r.passed,
                        "detail": r.detail,
                        "seconds": round(r.seconds, 3),
                    }
                    for r in results
                ],
                "all_passed": all(r.passed for r in results),
            },
            args.out,
        )
        return 0 if all(r.passed for r in results) else 1
    width = max(len(r.name) for r in results)
    with _Output(args.out) as fh:
        for r in results:
            status = "PASS" if r.passed else "FAIL"
            fh.write(f"{r.name:<{width}}  {status}  {r.seconds:8.2f}s  {r.detail}\n")
        n_pass = sum(r.passed for r in results)
        fh.write(f"{n_pass}/{len(results)} checks passed\n")
    return 0 if all(r.passed for r in results) else 1


_FIGURE_MODELS = [
    ("density-uniform-positive.csv", lambda: Uniform(Fraction(1, 12), Fraction(7, 12))),
    ("density-uniform-zero.csv", lambda: Uniform(0, Fraction(2, 3))),
    ("density-deterministic.csv", lambda: Deterministic(Fraction(1, 3))),
]


def _cmd_figures(args) -> int:
    digits = _digits(args)
    bits = _bits(digits)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    x_max = as_fraction(args.xmax)
    written = []
    for filename, make_service in _FIGURE_MODELS:
        model = QueueModel(2, make_service())
        solution = solve_waiting_density(model, x_max=x_max)
        atom = model.idle_probability
        meta = _metadata(
            args,
            model,
            digits,
            case=solution.case_label,
            grid_step=str(GRID_STEP),
            atom={
                "exact": _fraction_str(atom),
                "approx": atom.numerator / atom.denominator,
            },
        )
        path = os.path.join(out_dir, filename)
        rows = _density_rows(solution, min(x_max, solution.upper_limit), bits, digits)
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(meta) + "\n")
            writer = csv.writer(fh)
            writer.writerow(["x", "density"])
            writer.writerows(rows)
        _write_sidecar(path, meta)
        written.append(path)
    print("\n".join(written))
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mg1exact",
        description="Exact waiting-time and queue-length analysis of "
        "single-server Poisson-arrival queues.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str, model: bool = True):
        p = sub.add_parser(name, help=help_text)
        if model:
            _add_model_arguments(p)
        _add_common_arguments(p)
        return p

    p = command("density", "density values on a uniform grid (CSV)")
    p.add_argument("--xmax", default="4", help="solve/tabulate out to here")
    p.set_defaults(func=_cmd_density)

    p = command("cdf", "cumulative probability at a point (JSON)")
    p.add_argument("--at", required=True, metavar="X", help="evaluation point")
    p.add_argument("--xmax", default="4", help="solved range (extended to X)")
    p.set_defaults(func=_cmd_cdf)

    p = command("quantile", "smallest x with P(W <= x) >= p (JSON)")
    p.add_argument(
        "-p",
        "--probability",
        required=True,
        help="target probability in [0, 1)",
    )
    p.add_argument("--xmax", default="4", help="solved range")
    p.set_defaults(func=_cmd_quantile)

    p = command("mode", "location and height of the density maximum (JSON)")
    p.add_argument("--xmax", default="4", help="solved range")
    p.set_defaults(func=_cmd_mode)

    p = command("moments", "exact waiting-time and queue-length moments (JSON)")
    p.set_defaults(func=_cmd_moments)

    p = command("tail", "exponential tail decay rate and prefactor (JSON)")
    p.set_defaults(func=_cmd_tail)

    p = command("qlen", "number-in-system probabilities (CSV table)")
    p.add_argument(
        "-L",
        "--levels",
        default=5,
        type=int,
        help="highest level to tabulate (inclusive)",
    )
    p.set_defaults(func=_cmd_qlen)

    p = command("simulate", "empirical replication summary (JSON)")
    p.add_argument("--customers", default=1_000_000, type=int)
    p.add_argument("--replications", default=1, type=int)
    p.add_argument("--seed", default=0, type=int)
    p.set_defaults(func=_cmd_simulate)

    p = command("verify", "run the cross-validation suite", model=False)
    p.add_argument(
        "--checks",
        default=None,
        metavar="NAMES",
        help="comma-separated subset of: " + ", ".join(CHECK_NAMES),
    )
    p.set_defaults(func=_cmd_verify)

    p = command("figures", "density CSVs for the documented examples", model=False)
    p.add_argument("--xmax", default="4", help="tabulated range")
    p.set_defaults(func=_cmd_figures)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MG1Error, ValueError, OverflowError) as exc:
        error = {
            "code": _error_code(exc),
            "message": str(exc),
            "context": {"command": args.command},
        }
        print(json.dumps(error), file=sys.stderr)
        return 1


def _error_code(exc: Exception) -> str:
    name = type(exc).__name__
    out = []
    for i, ch in enumerate(name):
        if ch.isupper() and i > 0:
            out.append("-")
        out.append(ch.lower())
    return "".join(out)


if __name__ == "__main__":
    sys.exit(main())
