"""Control cost tests: closed form, steering, transcription, Harnack sweep."""

import numpy as np
import pytest

from harnack_forge.control_cost import (
    ControlPath,
    ControlProblem,
    ConvergenceError,
    cost_csv,
    cost_identity_gap,
    energy_cost,
    harnack_rhs,
    hermite_control,
    log_harnack_rhs,
    steer_exact,
    transcribe_cost,
    verify_harnack_kernel,
)


def problem(s, t, x0, v0, x1, v1):
    return ControlProblem.make(s, t, x0, v0, x1, v1)


class TestEnergyCost:
    def test_unit_displacement_anchors(self):
        # W(1)^{-1} = [[12, -6], [-6, 4]], so the quarter-forms are 3 and 1
        assert energy_cost(problem(0, 1, [0], [0], [1], [0])) == pytest.approx(3.0)
        assert energy_cost(problem(0, 1, [0], [0], [0], [1])) == pytest.approx(1.0)

    def test_monomial_scaling(self):
        # pure position: 3 dx^2 / tau^3; pure velocity: dv^2 / tau
        for tau in (0.5, 1.0, 2.0):
            c = energy_cost(problem(0, tau, [0], [0], [0.7], [0]))
            assert c == pytest.approx(3 * 0.7**2 / tau**3)
            c = energy_cost(problem(0, tau, [0], [0], [0], [-1.3]))
            assert c == pytest.approx(1.3**2 / tau)

    def test_free_streaming_costs_nothing(self):
        # endpoints on the zero-control flow line
        assert energy_cost(problem(0, 2, [1], [0.5], [2.0], [0.5])) == pytest.approx(
            0.0, abs=1e-14
        )

    def test_time_translation_invariance(self):
        a = energy_cost(problem(0.0, 1.5, [0.2], [0.1], [1.0], [-0.4]))
        b = energy_cost(problem(3.0, 4.5, [0.2], [0.1], [1.0], [-0.4]))
        assert a == pytest.approx(b, rel=1e-14)

    def test_dimensions_decouple(self):
        cx = energy_cost(problem(0, 1, [0.3], [0.0], [1.0], [0.2]))
        cy = energy_cost(problem(0, 1, [-0.5], [0.4], [0.1], [0.0]))
        both = energy_cost(
            problem(0, 1, [0.3, -0.5], [0.0, 0.4], [1.0, 0.1], [0.2, 0.0])
        )
        assert both == pytest.approx(cx + cy, rel=1e-13)

    def test_gramian_vs_kernel_identity(self):
        for tau in (0.5, 1.0, 2.0):
            for n in (1, 2):
                assert cost_identity_gap(tau, n) < 1e-10

    def test_problem_validation(self):
        with pytest.raises(ValueError, match="t > s"):
            ControlProblem.make(1.0, 1.0, [0], [0], [1], [1])
        with pytest.raises(ValueError, match="shape"):
            ControlProblem.make(0.0, 1.0, [0, 0], [0], [1], [1])


class TestControlPath:
    def test_exact_segment_flow(self):
        path = ControlPath(0.0, [0.0], [0.0], [0.5, 0.5], [[2.0], [-2.0]])
        # after first segment: x = u t^2 / 2 = 0.25, v = 1
        x, v = path.state(0.5)
        assert x[0] == pytest.approx(0.25)
        assert v[0] == pytest.approx(1.0)
        ex, ev = path.endpoint()
        # second segment: x = 0.25 + 0.5*1 - 2*0.125 = 0.5, v = 0
        assert ex[0] == pytest.approx(0.5)
        assert ev[0] == pytest.approx(0.0)

    def test_state_continuity_at_knots(self):
        rng = np.random.default_rng(4)
        path = ControlPath(
            0.0, [0.1], [-0.2], np.full(5, 0.2), rng.normal(size=(5, 1))
        )
        for k in range(1, 5):
            tk = 0.2 * k
            xl, vl = path.state(tk - 1e-12)
            xr, vr = path.state(tk + 1e-12)
            assert abs(xl[0] - xr[0]) < 1e-10
            assert abs(vl[0] - vr[0]) < 1e-10

    def test_energy_formula(self):
        path = ControlPath(0.0, [0.0], [0.0], [0.5, 0.5], [[2.0], [-2.0]])
        assert path.energy() == pytest.approx(0.25 * (0.5 * 4 + 0.5 * 4))

    def test_validation(self):
        with pytest.raises(ValueError, match="durations"):
            ControlPath(0.0, [0.0], [0.0], [0.5, -0.5], [[1.0], [1.0]])
        with pytest.raises(ValueError, match="shape"):
            ControlPath(0.0, [0.0], [0.0], [0.5], [[1.0], [1.0]])


class TestSteering:
    def test_endpoint_exact_and_energy_above_optimum(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            z = rng.uniform(-2, 2, size=4)
            prob = problem(0.0, 1.0, [z[0]], [z[1]], [z[2]], [z[3]])
            path = steer_exact(prob, m=8)
            ex, ev = path.endpoint()
            assert abs(ex[0] - prob.x1[0]) < 1e-9
            assert abs(ev[0] - prob.v1[0]) < 1e-9
            # a feasible discrete path can never beat the continuous inf
            assert path.energy() >= energy_cost(prob) - 1e-12

    def test_energy_converges_with_refinement(self):
        # the endpoint correction concentrates the O(h^2) sampling drift
        # into two segments, so the excess energy decays at first order;
        # exact feasibility is the contract here, optimality is not
        prob = problem(0.0, 1.0, [0.0], [0.0], [1.0], [-1.0])
        opt = energy_cost(prob)
        e8 = steer_exact(prob, m=8).energy() - opt
        e32 = steer_exact(prob, m=32).energy() - opt
        assert e8 >= e32 >= -1e-12
        assert e8 / e32 > 3.0
        assert e32 < 0.01 * max(1.0, opt)

    def test_hermite_control_is_linear_and_optimal(self):
        # the optimal control is linear in time; its path energy equals
        # the closed form when integrated exactly (2-segment midpoint
        # sampling is exact for linear u only after endpoint correction)
        prob = problem(0.0, 1.0, [0.2], [-0.1], [0.5], [0.3])
        u0 = hermite_control(prob, 0.0)
        u1 = hermite_control(prob, 1.0)
        umid = hermite_control(prob, 0.5)
        assert umid[0] == pytest.approx(0.5 * (u0[0] + u1[0]))

    def test_rejects_single_segment(self):
        with pytest.raises(ValueError, match="2 segments"):
            steer_exact(problem(0, 1, [0], [0], [1], [1]), m=1)


class TestTranscription:
    def test_zero_h_approaches_energy_cost_from_above(self):
        # the discrete optimum exceeds the continuous inf by O(1/m^2)
        rng = np.random.default_rng(14)
        for _ in range(5):
            z = rng.uniform(-1.5, 1.5, size=4)
            prob = problem(0.0, 1.0, [z[0]], [z[1]], [z[2]], [z[3]])
            res = transcribe_cost(prob, m=16)
            opt = energy_cost(prob)
            assert res.status == "ok"
            assert -1e-12 <= res.cost - opt <= 0.02 * (1.0 + opt)

    def test_constant_h_shifts_cost_exactly(self):
        # int h = c tau for every path, so the optimizer sees the same
        # landscape shifted by -c tau; exercises quadrature + gradient
        prob = problem(0.0, 1.5, [0.1], [0.0], [0.8], [0.2])
        base = transcribe_cost(prob, m=12).cost
        shifted = transcribe_cost(
            prob,
            m=12,
            h_func=lambda X, V: np.full(np.shape(X)[0], 0.7),
            h_grad=lambda X, V: (np.zeros_like(X), np.zeros_like(V)),
        ).cost
        assert shifted == pytest.approx(base - 0.7 * 1.5, abs=1e-8)

    def test_fd_gradient_fallback_matches_analytic(self):
        def h_func(X, V):
            return -0.25 * (X[:, 0] ** 2 + V[:, 0] ** 2)

        def h_grad(X, V):
            return -0.5 * X, -0.5 * V

        prob = problem(0.0, 1.0, [0.0], [0.0], [1.0], [0.0])
        a = transcribe_cost(prob, m=12, h_func=h_func, h_grad=h_grad).cost
        b = transcribe_cost(prob, m=12, h_func=h_func).cost
        assert a == pytest.approx(b, abs=1e-7)

    def test_second_order_refinement(self):
        def h_func(X, V):
            return -0.25 * (X[:, 0] ** 2 + V[:, 0] ** 2)

        def h_grad(X, V):
            return -0.5 * X, -0.5 * V

        prob = problem(0.0, 1.0, [0.0], [0.5], [1.0], [-0.5])
        costs = {
            m: transcribe_cost(prob, m=m, h_func=h_func, h_grad=h_grad).cost
            for m in (12, 24, 48)
        }
        # feasible sets nest under doubling, so costs decrease
        assert costs[24] <= costs[12] + 1e-12
        assert costs[48] <= costs[24] + 1e-12
        shrink = (costs[12] - costs[24]) / (costs[24] - costs[48])
        assert 2.5 < shrink < 7.0

    def test_unbounded_below_detected(self):
        # the clamped-beam Rayleigh quotient bounds the energy term by
        # (4.73)^4/4 ~ 125 per unit of int x^2 on tau = 1, so h = 200 x^2
        # makes the infimum -inf; the floor must flag the dive
        def h_func(X, V):
            return 200.0 * X[:, 0] ** 2

        def h_grad(X, V):
            return 400.0 * X, np.zeros_like(V)

        prob = problem(0.0, 1.0, [0.0], [0.0], [0.0], [0.0])
        try:
            res = transcribe_cost(
                prob, m=16, h_func=h_func, h_grad=h_grad, unbounded_floor=-100.0
            )
            assert res.status == "unbounded-below"
        except ConvergenceError as err:
            assert err.best_cost < -100.0

    def test_rejects_tiny_m(self):
        with pytest.raises(ValueError, match="2 segments"):
            transcribe_cost(problem(0, 1, [0], [0], [1], [1]), m=1)


class TestHarnackSweep:
    def test_rhs_log_form(self):
        # free regime: s0 = t^4, so the prefactor is (t/s)^{-2n}
        lg = log_harnack_rhs(1.0, 2.0, cost=0.0, n=1)
        assert lg == pytest.approx(-2.0 * np.log(2.0))
        assert harnack_rhs(1.0, 2.0, cost=0.0, n=1) == pytest.approx(0.25)

    def test_potential_terms_enter(self):
        lg0 = log_harnack_rhs(1.0, 2.0, cost=0.3)
        lg1 = log_harnack_rhs(1.0, 2.0, cost=0.3, U_start=2.0, U_end=1.0)
        assert lg1 - lg0 == pytest.approx(-0.5)

    def test_kernel_inequality_holds(self):
        rep = verify_harnack_kernel(1.0, 2.0, n_pairs=200, seed=3)
        assert rep.min_ratio >= 1.0 - 1e-6
        assert rep.equality_gap < 1e-10

    def test_invalid_window_rejected(self):
        with pytest.raises(ValueError, match="0 < s < t"):
            verify_harnack_kernel(2.0, 1.0)


def test_cost_csv_header_and_vector_fields():
    prob = problem(0.0, 1.0, [0.0, 1.0], [0.0, 0.0], [1.0, 1.0], [0.0, 0.0])
    rows = [
        (0.0, 1.0, prob.x0, prob.v0, prob.x1, prob.v1, 3.0, "closed-form", 0, 0.0)
    ]
    text = cost_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == "s,t,x0,v0,x1,v1,cost,method,m,gap"
    assert "0.0;1.0" in lines[1]
