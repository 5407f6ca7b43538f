"""Step system assembly and the direct stepping loop.

The damped and stiffness limit cases double as end-to-end accuracy checks:
with the order pushed against 1 or 0 the solutions must track the
closed-form integer-order references.
"""

import math

import numpy as np
import pytest

from vofde import (
    AlphaSpec,
    OscillatorProblem,
    StepState,
    VelocityHistory,
    coefficient_row,
    discrete_residuals,
    solve_explicit,
)
from vofde.errors import OrderDomainError, StepFailureError
from vofde.explicit_solver import (
    StepMatrices,
    build_step,
    load_term,
    solve_step,
    step_matrices,
)
from vofde.reference import scenario


def linear_problem(alpha, h=0.01, T=1.0, a1=1.0, a2=1.0, a3=25.0, p=0.0, u0=1.0, v0=10.0):
    return OscillatorProblem.build(
        a1=a1, a2=a2, a3=a3, p=p, alpha=alpha, u0=u0, v0=v0, T=T, h=h
    )


class TestStepMatrices:
    def test_first_step_has_no_history_column(self):
        prob = linear_problem(AlphaSpec.constant(0.5))
        row = coefficient_row(1, prob.grid.h, 0.5)
        left, right = step_matrices(prob, 1, row)
        # only half of the first mean velocity is known at n = 1
        assert right[0, 1] == pytest.approx(-0.5 * 1.0 * row.c[0])
        assert right[0, 0] == 0.0 and right[0, 2] == 0.0

    def test_update_rows_depend_only_on_h(self):
        prob = linear_problem(AlphaSpec.of_time(lambda t: 0.3 + 0.4 * t))
        h = prob.grid.h
        for n in (1, 5, 50):
            row = coefficient_row(n, h, float(prob.alpha.eval(n * h, 0, 0)))
            left, right = step_matrices(prob, n, row)
            assert np.allclose(left[1], [0.25 * h * h, -h, 1.0])
            assert np.allclose(left[2], [-0.5 * h, 1.0, 0.0])
            assert np.allclose(right[1], [-0.25 * h * h, 0.0, 1.0])
            assert np.allclose(right[2], [0.5 * h, 1.0, 0.0])

    def test_governing_row_uses_coefficients_at_tn(self):
        prob = OscillatorProblem.build(
            a1=lambda t: 1.0 + t * t,
            a2=lambda t: 0.1 * math.sqrt(t),
            a3=lambda t: 10.0 + math.exp(-t),
            p=0.0,
            alpha=AlphaSpec.constant(0.5),
            u0=0.0, v0=0.0, T=1.0, h=0.1,
        )
        n = 4
        tn = 0.4
        row = coefficient_row(n, 0.1, 0.5)
        left, _ = step_matrices(prob, n, row)
        assert left[0, 0] == pytest.approx(1.0 + tn * tn)
        assert left[0, 1] == pytest.approx(0.5 * 0.1 * math.sqrt(tn) * row.c[-1])
        assert left[0, 2] == pytest.approx(10.0 + math.exp(-tn))

    def test_without_fractional_term_reduces_to_plain_integrator(self):
        prob = linear_problem(AlphaSpec.constant(0.5), a2=0.0)
        row = coefficient_row(3, prob.grid.h, 0.5)
        left, right = step_matrices(prob, 3, row)
        assert left[0, 1] == 0.0
        assert right[0, 1] == 0.0

    def test_row_node_mismatch(self):
        prob = linear_problem(AlphaSpec.constant(0.5))
        row = coefficient_row(3, prob.grid.h, 0.5)
        with pytest.raises(IndexError):
            step_matrices(prob, 4, row)


class TestLoadTerm:
    def test_first_step_load_is_the_forcing(self):
        prob = linear_problem(AlphaSpec.constant(0.5), p=lambda t: 7.0 + t)
        row = coefficient_row(1, prob.grid.h, 0.5)
        hist = VelocityHistory(prob.v0)
        assert load_term(prob, 1, row, hist) == pytest.approx(7.0 + prob.grid.h)

    def test_history_split_matches_direct_sum(self):
        # g_n must equal p_n - a2 * (full history sum minus the two terms
        # kept on the matrix side)
        prob = linear_problem(AlphaSpec.constant(0.4), a2=2.5)
        h = prob.grid.h
        rng = np.random.default_rng(42)
        vels = rng.normal(size=8)
        hist = VelocityHistory.from_endpoints(vels)
        n = 6
        row = coefficient_row(n, h, 0.4)
        means = hist.udot_mean
        full = float(row.c[: n] @ means[: n])
        kept = 0.5 * row.c[n - 1] * (vels[n - 1] + vels[n])
        kept += 0.5 * row.c[n - 2] * vels[n - 1]
        g = load_term(prob, n, row, hist)
        assert g == pytest.approx(0.0 - 2.5 * (full - kept), abs=1e-12)

    def test_history_too_short(self):
        prob = linear_problem(AlphaSpec.constant(0.5))
        row = coefficient_row(5, prob.grid.h, 0.5)
        hist = VelocityHistory.from_endpoints(np.ones(3))
        with pytest.raises(IndexError):
            load_term(prob, 5, row, hist)


class TestSolveStep:
    def test_zero_problem_fixed_point(self):
        prob = linear_problem(AlphaSpec.constant(0.5), u0=0.0, v0=0.0)
        row = coefficient_row(1, prob.grid.h, 0.5)
        mats = build_step(1, prob, row, VelocityHistory(0.0))
        state = solve_step(mats, StepState(0.0, 0.0, 0.0), step=1)
        assert state == StepState(0.0, 0.0, 0.0)

    def test_residual_of_solution(self):
        prob = linear_problem(AlphaSpec.constant(0.5))
        row = coefficient_row(1, prob.grid.h, 0.5)
        hist = VelocityHistory(prob.v0)
        mats = build_step(1, prob, row, hist)
        prev = StepState(-25.0, 10.0, 1.0)
        state = solve_step(mats, prev, step=1)
        rhs = mats.R @ np.array(prev)
        rhs[0] += mats.g
        res = mats.L @ np.array(state) - rhs
        bound = 1e-12 * (float(np.linalg.norm(mats.R @ np.array(prev))) + abs(mats.g))
        assert float(np.linalg.norm(res)) <= max(bound, 1e-15)

    def test_singular_system_reports_step(self):
        mats = StepMatrices(L=np.zeros((3, 3)), R=np.eye(3), g=0.0)
        with pytest.raises(StepFailureError) as err:
            solve_step(mats, StepState(1.0, 1.0, 1.0), step=9)
        assert err.value.step == 9


class TestSolve:
    def test_damping_limit_tracks_closed_form(self):
        scn = scenario("ex2i", 1e-2)
        trace = solve_explicit(scn.problem)
        ref = scn.limit_u(trace.t)
        peak = float(np.max(np.abs(ref)))
        assert float(np.max(np.abs(trace.u - ref))) <= 0.02 * peak

    def test_stiffness_limit_tracks_closed_form(self):
        scn = scenario("ex2ii", 1e-2)
        trace = solve_explicit(scn.problem)
        ref = scn.limit_u(trace.t)
        peak = float(np.max(np.abs(ref)))
        assert float(np.max(np.abs(trace.u - ref))) <= 0.02 * peak

    def test_variable_order_beats_constant_order_peak(self):
        # the decaying-order oscillator rings higher than its constant-order
        # counterpart because early weights still look like low order
        peak = {}
        for name in ("ex2iii_c", "ex2iii_d"):
            scn = scenario(name, 1e-2)
            trace = solve_explicit(scn.problem)
            peak[name] = float(np.max(trace.u))
        assert peak["ex2iii_d"] > peak["ex2iii_c"]

    def test_manufactured_time_varying_coefficients(self):
        scn = scenario("ex5", 1e-2)
        trace = solve_explicit(scn.problem)
        exact = np.exp(trace.t)
        rel = float(np.max(np.abs(trace.u - exact)) / np.max(np.abs(exact)))
        assert rel <= 0.01

    def test_update_relations_hold_exactly(self):
        scn = scenario("ex2i", 1e-2, T=1.0)
        trace = solve_explicit(scn.problem)
        h = scn.grid.h
        qs = trace.uddot
        vel_gap = trace.udot[1:] - trace.udot[:-1] - 0.5 * h * (qs[1:] + qs[:-1])
        disp_gap = (
            trace.u[1:]
            - trace.u[:-1]
            - h * trace.udot[1:]
            + 0.25 * h * h * (qs[1:] + qs[:-1])
        )
        scale_v = np.maximum(1.0, np.abs(trace.udot[1:]))
        scale_u = np.maximum(1.0, np.abs(trace.u[1:]))
        assert float(np.max(np.abs(vel_gap) / scale_v)) < 1e-12
        assert float(np.max(np.abs(disp_gap) / scale_u)) < 1e-12

    def test_discrete_equation_residual(self):
        for name in ("ex2i", "ex2iii_d"):
            scn = scenario(name, 1e-2, T=2.0)
            trace = solve_explicit(scn.problem)
            res = discrete_residuals(scn.problem, trace)
            assert float(np.max(np.abs(res))) < 1e-9

    def test_deterministic(self):
        scn = scenario("ex2i", 1e-2, T=1.0)
        a = solve_explicit(scn.problem)
        b = solve_explicit(scn.problem)
        assert np.array_equal(a.u, b.u)
        assert np.array_equal(a.udot, b.udot)
        assert np.array_equal(a.uddot, b.uddot)

    def test_horizon_shorter_than_step(self):
        prob = linear_problem(AlphaSpec.constant(0.5), h=0.01, T=0.004)
        trace = solve_explicit(prob)
        assert trace.t.shape == (2,)

    def test_spectral_radius_recording(self):
        scn = scenario("ex2i", 1e-2, T=1.0)
        trace = solve_explicit(scn.problem, record_spectral_radius=True)
        assert trace.rho is not None
        assert trace.rho.shape == (scn.grid.N,)
        assert float(np.max(trace.rho)) <= 1.0 + 1e-12

    def test_rejects_state_dependent_order(self):
        prob = linear_problem(
            AlphaSpec.of_state(lambda t, u, udot: 0.9 - 0.1 * math.tanh(abs(udot)))
        )
        with pytest.raises(ValueError):
            solve_explicit(prob)

    def test_rejects_nonlinear_restoring(self):
        prob = OscillatorProblem.build(
            a1=1.0, a2=0.2, a3=1.0, p=0.0,
            alpha=AlphaSpec.constant(0.5), u0=0.0, v0=0.0, T=1.0, h=0.1,
            f_nl=lambda u, udot: u ** 3,
        )
        with pytest.raises(ValueError):
            solve_explicit(prob)

    def test_state_reading_order_function_is_caught(self):
        # declared time-only but actually reads the velocity: the nan probe
        # must surface it as an order-domain failure at the first used node
        sneaky = AlphaSpec(
            kind=AlphaSpec.of_time(lambda t: 0.5).kind,
            eval=lambda t, u, udot: 0.5 + 0.0 * udot,
        )
        prob = linear_problem(sneaky)
        with pytest.raises(OrderDomainError):
            solve_explicit(prob)

    def test_order_out_of_range_names_node(self):
        prob = linear_problem(
            AlphaSpec.of_time(lambda t: 0.5 if t < 0.5 else 1.2), h=0.1, T=1.0
        )
        with pytest.raises(OrderDomainError) as err:
            solve_explicit(prob)
        assert err.value.node == 5
