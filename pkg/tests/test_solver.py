"""The recursive segment solver, across all three finite service
families and at general (not just the documented) parameter values."""

import random
from fractions import Fraction

import pytest
from mpmath import mp, mpf

from mg1exact.errors import DomainError, GridError
from mg1exact.expoly import TermSum
from mg1exact.model import Deterministic, Exponential, QueueModel, Uniform
from mg1exact.solver import (
    deterministic_closed_segment,
    segment_grid,
    solve_waiting_density,
)
from mg1exact.verify import VerificationContext, _delay_equation_residual

# a parameter set sharing nothing with the documented examples
GENERAL_MODELS = [
    QueueModel(1, Uniform(Fraction(1, 2), Fraction(3, 4))),
    QueueModel(Fraction(3, 2), Uniform(0, Fraction(1, 2))),
    QueueModel(Fraction(5, 2), Deterministic(Fraction(1, 4))),
]


class TestGrid:
    def test_gcd_grid_for_uniform(self):
        m = QueueModel(2, Uniform(Fraction(1, 12), Fraction(7, 12)))
        assert segment_grid(m) == (Fraction(1, 12), 1, 7)
        m = QueueModel(1, Uniform(Fraction(1, 2), Fraction(3, 4)))
        assert segment_grid(m) == (Fraction(1, 4), 2, 3)

    def test_zero_lower_grid_is_upper_endpoint(self):
        m = QueueModel(2, Uniform(0, Fraction(2, 3)))
        assert segment_grid(m) == (Fraction(2, 3), 1, None)

    def test_deterministic_grid_is_duration(self):
        m = QueueModel(2, Deterministic(Fraction(1, 3)))
        assert segment_grid(m) == (Fraction(1, 3), 1, None)

    def test_pathological_grid_rejected(self):
        m = QueueModel(
            1,
            Uniform(Fraction(1, 1_000_003), Fraction(1, 3) + Fraction(1, 1_000_003)),
        )
        with pytest.raises(GridError):
            segment_grid(m)

    def test_x_max_required_for_finite_service(self):
        with pytest.raises(DomainError):
            solve_waiting_density(QueueModel(2, Deterministic(Fraction(1, 3))))


class TestStructure:
    def test_case_labels(self):
        assert (
            solve_waiting_density(
                QueueModel(2, Uniform(Fraction(1, 12), Fraction(7, 12))), x_max=1
            ).case_label
            == "uniform-positive-lower"
        )
        assert (
            solve_waiting_density(
                QueueModel(2, Uniform(0, Fraction(2, 3))), x_max=1
            ).case_label
            == "uniform-zero-lower"
        )
        assert (
            solve_waiting_density(
                QueueModel(2, Deterministic(Fraction(1, 3))), x_max=1
            ).case_label
            == "deterministic"
        )
        assert (
            solve_waiting_density(QueueModel(2, Exponential(3))).case_label
            == "exponential"
        )

    def test_density_starts_at_arrival_rate_times_atom(self):
        for m in GENERAL_MODELS:
            sol = solve_waiting_density(m, x_max=1)
            assert sol.segments[0].expr.at_point(Fraction(0)) == TermSum.constant(
                m.density_at_zero
            )

    def test_exponential_solution_is_single_unbounded_cell(self):
        sol = solve_waiting_density(QueueModel(2, Exponential(3)))
        assert len(sol.segments) == 1
        assert sol.segments[0].upper is None
        assert sol.upper_limit is None
        # lam(1-rho) e^{-(mu-lam)x}
        assert sol.segments[0].expr == TermSum.term(Fraction(2, 3), 0, -1, 0)

    def test_segment_lookup_sides(self):
        m = QueueModel(2, Deterministic(Fraction(1, 3)))
        sol = solve_waiting_density(m, x_max=2)
        third = Fraction(1, 3)
        assert sol.segment_index(third, side="right") == 1
        assert sol.segment_index(third, side="left") == 0
        with pytest.raises(DomainError):
            sol.density_value(-1)


class TestGeneralParameters:
    """The recursion is exact at arbitrary admissible parameters, not
    only at the documented showcase values."""

    @pytest.mark.parametrize("model", GENERAL_MODELS, ids=["u-pos", "u-zero", "det"])
    def test_governing_equation_residual_vanishes(self, model):
        ctx = VerificationContext()
        for n in range(6):
            resid = _delay_equation_residual(ctx, model, n)
            assert resid.is_zero(), f"piece {n} residual {resid!r}"

    @pytest.mark.parametrize("model", GENERAL_MODELS, ids=["u-pos", "u-zero", "det"])
    def test_pieces_join_by_declared_jumps(self, model):
        sol = solve_waiting_density(model, x_max=2)
        bv = model.boundary_values()
        for n in range(1, len(sol.segments)):
            x = sol.segments[n].lower
            left = sol.segments[n - 1].expr.at_point(x)
            right = sol.segments[n].expr.at_point(x)
            gap = right - left
            if bv.value_jump is not None and x == bv.value_jump[0]:
                assert gap == TermSum.constant(bv.value_jump[1])
            else:
                assert gap.is_zero()

    def test_total_mass_approaches_one(self):
        for model in GENERAL_MODELS:
            sol = solve_waiting_density(model, x_max=6)
            total = TermSum.constant(model.idle_probability)
            for seg in sol.segments:
                if seg.upper is None or seg.upper > 6:
                    break
                total = total + seg.expr.definite_integral(seg.lower, seg.upper)
            with mp.workprec(160):
                mass = total.eval_mp(0, 160)
            assert 0 < 1 - mass < 1e-3  # exponential tail remainder only


class TestDeterministicClosedForm:
    def test_recursion_equals_closed_form_symbolically(self):
        m = QueueModel(2, Deterministic(Fraction(1, 3)))
        sol = solve_waiting_density(m, n_segments=5)
        for n in range(5):
            assert sol.segments[n].expr == deterministic_closed_segment(m, n)

    def test_closed_form_general_parameters(self):
        m = QueueModel(Fraction(5, 2), Deterministic(Fraction(1, 4)))
        sol = solve_waiting_density(m, n_segments=4)
        rng = random.Random(5)
        with mp.workprec(200):
            for n in range(4):
                ref = deterministic_closed_segment(m, n)
                for _ in range(20):
                    x = sol.segments[n].lower + Fraction(
                        rng.randint(1, 999), 999
                    ) * Fraction(1, 4)
                    got = sol.segments[n].expr.eval_mp(x, 200)
                    want = ref.eval_mp(x, 200)
                    assert abs(got - want) <= mpf(2) ** -150


class TestUniformLimits:
    def test_narrow_uniform_approaches_deterministic(self):
        eps = Fraction(1, 600)
        third = Fraction(1, 3)
        narrow = solve_waiting_density(
            QueueModel(2, Uniform(third - eps, third + eps)), x_max=Fraction(3, 2)
        )
        point = solve_waiting_density(
            QueueModel(2, Deterministic(third)), x_max=Fraction(3, 2)
        )
        with mp.workprec(96):
            for x in (Fraction(1, 5), Fraction(1, 2), Fraction(9, 8)):
                a = narrow.density_value(x, 96)
                b = point.density_value(x, 96)
                assert abs(a - b) < 5e-3

    def test_term_counts_match_quadratic_law(self):
        m = QueueModel(2, Uniform(Fraction(1, 12), Fraction(7, 12)))
        sol = solve_waiting_density(m, n_segments=9)
        counts = sol.num_terms()
        assert counts[1:] == [n * (n + 5) // 2 for n in range(1, 9)]
