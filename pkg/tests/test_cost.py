"""Tests for the scalar cost solve, prices, and charges."""

import math

import numpy as np
import pytest

from scpm import charge, cost, make_utility, prices, solve_t
from scpm.utilities import KINDS


def random_q(rng, n, scale=4.0):
    return rng.uniform(0.0, scale, size=n)


class TestSolveT:
    def test_shape_mismatch_rejected(self):
        u = make_utility("LMSR", n_outcomes=3)
        with pytest.raises(ValueError, match="shape"):
            solve_t(u, np.zeros(2))

    def test_flat_objective_flagged(self):
        for kind in ("LMSR", "MinSCPM", "QuadraticScore"):
            u = make_utility(kind, n_outcomes=2)
            res = solve_t(u, np.array([1.0, 0.5]))
            assert res.flat_objective
            assert res.t_star == 1.0

    def test_flat_objective_cost_is_level_independent(self):
        # for a flat objective any level gives the same cost; probe a few
        u = make_utility("LMSR", b=1.5, n_outcomes=3)
        q = np.array([0.3, 1.2, 0.8])
        ref = cost(u, q)
        for t in [2.0, 5.0, 11.0]:
            assert t - u.value(t - q) == pytest.approx(ref, rel=1e-12)

    def test_log_solver_satisfies_stationarity(self):
        u = make_utility("LogSCPM", n_outcomes=3, theta=[1.0, 2.0, 0.5])
        rng = np.random.default_rng(1)
        for _ in range(50):
            q = random_q(rng, 3)
            res = solve_t(u, q)
            assert abs(1.0 - u.grad_sum(res.t_star - q)) < 1e-8
            assert res.t_star > q.max()

    @pytest.mark.parametrize("kind", ["ExponentialSCPM", "QuadSCPM"])
    def test_closed_form_matches_bisection(self, kind):
        u = make_utility(kind, b=1.7, n_outcomes=4)
        rng = np.random.default_rng(2)
        for _ in range(50):
            q = random_q(rng, 4)
            fast = solve_t(u, q)
            slow = solve_t(u, q, method="bisect")
            assert fast.cost == pytest.approx(slow.cost, abs=1e-9)
            np.testing.assert_allclose(fast.prices, slow.prices, atol=1e-8)

    def test_log_example(self):
        # theta = (1,1), q = 0: stationarity 2/t = 1 gives t = 2
        u = make_utility("LogSCPM", n_outcomes=2)
        res = solve_t(u, np.zeros(2))
        assert res.t_star == pytest.approx(2.0, abs=1e-9)
        assert res.cost == pytest.approx(2.0 - 2.0 * math.log(2.0), abs=1e-9)


class TestCostProperties:
    @pytest.mark.parametrize("kind", KINDS)
    def test_cost_is_convex_along_chords(self, kind):
        u = make_utility(kind, b=1.0, n_outcomes=3)
        rng = np.random.default_rng(7)
        for _ in range(50):
            q1 = random_q(rng, 3)
            q2 = random_q(rng, 3)
            lam = rng.uniform()
            mid = cost(u, lam * q1 + (1 - lam) * q2)
            assert mid <= lam * cost(u, q1) + (1 - lam) * cost(u, q2) + 1e-9

    @pytest.mark.parametrize("kind", [k for k in KINDS if k != "QuadraticScore"])
    def test_cost_monotone_in_q(self, kind):
        u = make_utility(kind, b=1.0, n_outcomes=3)
        rng = np.random.default_rng(9)
        for _ in range(50):
            q = random_q(rng, 3)
            dq = rng.uniform(0.0, 1.0, size=3)
            assert cost(u, q + dq) >= cost(u, q) - 1e-10

    @pytest.mark.parametrize("kind", KINDS)
    def test_prices_are_cost_gradient(self, kind):
        from scpm.oracle import finite_diff_gradient

        u = make_utility(kind, b=1.0, n_outcomes=3)
        rng = np.random.default_rng(13)
        for _ in range(10):
            q = random_q(rng, 3) + np.arange(3) * 0.37  # stay off Min kinks
            p = prices(u, q)
            p_fd = finite_diff_gradient(lambda v: cost(u, v), q, h=1e-6)
            np.testing.assert_allclose(p, p_fd, atol=1e-5)

    def test_lmsr_cost_at_origin(self):
        u = make_utility("LMSR", b=1.0, n_outcomes=2)
        assert cost(u, np.zeros(2)) == pytest.approx(math.log(2.0), rel=1e-14)

    def test_min_cost_is_max_component(self):
        u = make_utility("MinSCPM", n_outcomes=3)
        rng = np.random.default_rng(17)
        for _ in range(50):
            q = random_q(rng, 3)
            assert cost(u, q) == pytest.approx(q.max(), abs=1e-12)

    def test_quadratic_prices_can_leave_unit_box(self):
        u = make_utility("QuadraticScore", b=1.0, n_outcomes=2)
        with pytest.warns(UserWarning, match="negative prices"):
            p = prices(u, np.array([10.0, 0.0]))
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        assert p.min() < 0.0


class TestCharge:
    def test_zero_fill_costs_nothing(self):
        u = make_utility("LMSR", n_outcomes=2)
        assert charge(u, np.zeros(2), np.array([1.0, 0.0]), 0.0) == 0.0

    def test_negative_fill_rejected(self):
        u = make_utility("LMSR", n_outcomes=2)
        with pytest.raises(ValueError, match="nonnegative"):
            charge(u, np.zeros(2), np.array([1.0, 0.0]), -1.0)

    def test_bad_bundle_rejected(self):
        u = make_utility("LMSR", n_outcomes=2)
        with pytest.raises(ValueError, match="bundle"):
            charge(u, np.zeros(2), np.array([-1.0, 1.0]), 1.0)
        with pytest.raises(ValueError, match="bundle"):
            charge(u, np.zeros(2), np.zeros(2), 1.0)

    def test_charge_additive_along_path(self):
        u = make_utility("ExponentialSCPM", b=1.0, n_outcomes=3)
        q = np.array([0.2, 0.9, 0.1])
        a = np.array([1.0, 0.0, 1.0])
        whole = charge(u, q, a, 2.0)
        split = charge(u, q, a, 0.75) + charge(u, q + 0.75 * a, a, 1.25)
        assert whole == pytest.approx(split, abs=1e-10)

    def test_full_bundle_charges_face_value(self):
        # buying the all-ones bundle moves every utility's cost by exactly x
        a = np.ones(3)
        rng = np.random.default_rng(23)
        for kind in KINDS:
            u = make_utility(kind, b=1.0, n_outcomes=3)
            q = random_q(rng, 3)
            assert charge(u, q, a, 1.5) == pytest.approx(1.5, abs=1e-8)
