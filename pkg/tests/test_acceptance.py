"""End-to-end validation gates.

Each test runs one named check from :mod:`mg1exact.verify` against the
shared solver context.  Together they pin every promise the package
makes: exact symbolic output, cancellation-safe evaluation, agreement
between the recursive solver and three independent oracles (closed
forms, numerical transform inversion, discrete-event simulation), and
the tail/normalization identities.  Tolerances live inside the checks
and are part of the contract; see each check's docstring for the exact
bound.
"""

from mg1exact.verify import run_checks


def _run(name: str, ctx) -> None:
    result = run_checks([name], ctx)[0]
    assert result.passed, f"{result.name}: {result.detail}"


def test_symbolic_density_fragments_are_exact(ctx):
    # First two density pieces of both uniform-service cases equal the
    # hand-derived reference expressions coefficient-for-coefficient.
    _run("reference-density-fragments", ctx)


def test_term_count_grows_quadratically(ctx):
    # Piece n of the positive-lower uniform case has n(n+5)/2 terms,
    # n = 1..35.
    _run("term-count-law", ctx)


def test_reference_distribution_constants(ctx):
    # Mean 19/48 and variance 1883/6912 exactly (and via numeric
    # integration to 1e-6); mode at 0.17405980 +/- 1e-8 matching its
    # closed form to 1e-20; median 0.21673428 +/- 1e-8.
    _run("reference-distribution-constants", ctx)


def test_evaluation_survives_catastrophic_cancellation(ctx):
    # Density at x = 2 (348 stored terms, internal magnitudes ~1e55)
    # is identical at 64- and 128-bit target precision to 1e-15
    # relative, and the two largest stored coefficients match their
    # reference values.
    _run("cancellation-stability", ctx)


def test_deterministic_solver_matches_closed_form(ctx):
    # Recursive solution for constant service equals the closed-form
    # alternating-series density at 100 random points per piece,
    # pieces 0..10, to 1e-30.
    _run("deterministic-matches-erlang", ctx)


def test_boundary_jumps_and_continuity(ctx):
    # Constant service: value jump at the service time equals
    # -lambda(1-rho) exactly.  Zero-lower uniform: derivative jump at
    # the upper endpoint equals lambda(1-rho)/b exactly.  Everywhere
    # else the pieces join continuously (exact, zero tolerance).
    _run("boundary-jumps", ctx)


def test_queue_length_uniform_service(ctx):
    # Number-in-system probabilities for uniform service: p_0..p_5
    # match the reference decimals to 1e-6, p_1 equals its exact
    # closed form, mean 35/24 and variance 4547/1728 exactly.
    _run("queue-length-uniform", ctx)


def test_queue_length_deterministic_service(ctx):
    # Constant service: six exact exponential-combination expressions
    # match term-for-term, decimals to 1e-6, mean 4/3, variance 56/27.
    _run("queue-length-deterministic", ctx)


def test_exponential_service_reference(ctx):
    # Exponential service sanity anchor: mean 2/3, variance 8/9 exact;
    # median ln(4/3) to 1e-10.
    _run("exponential-reference", ctx)


def test_delay_equation_residuals_vanish(ctx):
    # Substituting the solved pieces back into the governing
    # integro-differential equation leaves a residual that is
    # symbolically zero (and < 1e-30 at 200 random points per piece).
    _run("delay-equation-residuals", ctx)


def test_numerical_transform_inversion_agrees(ctx):
    # Independent numerical inversion of the waiting-time transform
    # matches the exact density to 1e-6 at 40 grid points per finite
    # case; the exponential-service self-test closes to 1e-8.
    _run("transform-inversion-agreement", ctx)


def test_simulation_agrees(ctx):
    # 8 x 1e6-customer replications per model: sample mean within 4
    # standard errors, KS statistic inside the 99% band in >= 7 of 8.
    _run("simulation-agreement", ctx)


def test_tail_asymptotics(ctx):
    # Constant service: tau solves tau*exp(-rho(tau-1)) = 1 to 1e-12
    # and survival matches the asymptote within 5% at x = 4; uniform
    # service: empirically fitted decay rate equals the adjustment-
    # coefficient root to 3 significant figures.
    _run("tail-asymptotics", ctx)


def test_total_probability_is_one(ctx):
    # atom + integral of the density + tail correction = 1 +/- 1e-6
    # for all four service families.
    _run("normalization", ctx)
