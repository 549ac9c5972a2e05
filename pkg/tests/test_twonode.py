"""Tests for the analytic two-node thresholds, partition and closed forms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netcournot import (
    Objective,
    TwoNodeParams,
    classify_existence,
    from_instance,
    point_to_vectors,
    threshold_f0,
    threshold_f1,
    thresholds,
    two_node_instance,
    unconstrained_equilibrium,
    verify_gne,
)


LEMMA = TwoNodeParams(a=10.0, b1=1.2, b2=1.0, c=1.0)


@st.composite
def valid_params(draw, with_f=False):
    a = draw(st.floats(0.5, 20.0))
    b2 = draw(st.floats(0.2, 3.0))
    # stay strictly inside (1, 3): ratio * b2 may round up at the edge
    ratio = draw(st.floats(1.01, 2.99))
    c = draw(st.floats(0.2, 3.0))
    f = draw(st.floats(0.01, 3.0 * a / b2)) if with_f else None
    return TwoNodeParams(a=a, b1=ratio * b2, b2=b2, c=c, f=f)


class TestParams:
    def test_rejects_ratio_out_of_range(self):
        with pytest.raises(ValueError):
            TwoNodeParams(a=1.0, b1=1.0, b2=1.0, c=1.0)
        with pytest.raises(ValueError):
            TwoNodeParams(a=1.0, b1=3.5, b2=1.0, c=1.0)

    def test_rejects_negative_capacity(self):
        with pytest.raises(ValueError):
            TwoNodeParams(a=1.0, b1=1.2, b2=1.0, c=1.0, f=-0.5)


class TestThresholds:
    def test_f0_direct_substitution(self):
        # 10*(2.2 + 1.8) / (2.64 + 7.44 + 4.4) = 40/14.48
        assert threshold_f0(LEMMA) == pytest.approx(40.0 / 14.48, rel=1e-12)

    def test_f1_direct_substitution(self):
        # 10*0.2 / (2.64 + 2.44) = 2/5.08
        assert threshold_f1(LEMMA) == pytest.approx(2.0 / 5.08, rel=1e-12)

    def test_lemma_window_contains_stated_capacity(self):
        th = thresholds(LEMMA)
        window_lo = th["small_cap"]
        window_hi = min(th["uncongested"], th["node1_demand_root"], th["f0"])
        assert window_lo < 2.0 < window_hi

    def test_f0_continuous_at_ratio_limit(self):
        # at b1/b2 -> 3 with b2 = c the correction term vanishes smoothly
        b2 = 1.0
        near = TwoNodeParams(a=10.0, b1=3.0 * b2 - 1e-9, b2=b2, c=b2)
        at = TwoNodeParams(a=10.0, b1=3.0 * b2, b2=b2, c=b2)
        assert threshold_f0(near) == pytest.approx(threshold_f0(at), rel=1e-6)

    @given(valid_params())
    @settings(max_examples=100)
    def test_thresholds_scale_linearly_in_a(self, p):
        doubled = TwoNodeParams(a=2.0 * p.a, b1=p.b1, b2=p.b2, c=p.c)
        assert threshold_f0(doubled) == pytest.approx(2.0 * threshold_f0(p), rel=1e-12)
        assert threshold_f1(doubled) == pytest.approx(2.0 * threshold_f1(p), rel=1e-12)

    def test_f1_vanishes_as_slopes_meet(self):
        p = TwoNodeParams(a=10.0, b1=1.0 + 1e-9, b2=1.0, c=1.0)
        assert threshold_f1(p) == pytest.approx(0.0, abs=1e-8)


class TestClassifyExistence:
    def test_stated_nonexistence_capacity(self):
        verdict = classify_existence(TwoNodeParams(10.0, 1.2, 1.0, 1.0, f=2.0))
        assert not verdict.exists
        assert verdict.matched_condition is None

    def test_uncongested_capacity(self):
        verdict = classify_existence(TwoNodeParams(10.0, 1.2, 1.0, 1.0, f=4.0))
        assert verdict.exists and verdict.matched_condition == 1
        q1, q2, r = verdict.equilibrium
        assert r == pytest.approx(10.0 / 3.0, rel=1e-12)
        assert q2 == pytest.approx(10.0 / 3.0, rel=1e-12)
        assert q1 == pytest.approx(18.0 / 13.2, rel=1e-12)

    def test_tiny_capacity_condition_four(self):
        verdict = classify_existence(TwoNodeParams(10.0, 1.2, 1.0, 1.0, f=0.3))
        assert verdict.exists and verdict.matched_condition == 4
        assert verdict.equilibrium is None  # deferred to the numeric search

    def test_unlimited_line_matches_condition_one(self):
        verdict = classify_existence(LEMMA)
        assert verdict.exists and verdict.matched_condition == 1

    def test_boundary_flag(self):
        th = thresholds(LEMMA)
        verdict = classify_existence(
            TwoNodeParams(10.0, 1.2, 1.0, 1.0, f=th["uncongested"])
        )
        assert verdict.boundary
        assert verdict.matched_condition == 1  # weak inequality as printed

    def test_branch_switch_is_continuous(self):
        # b1 = b2 + 2c makes the low-slope-node formula hit exactly zero
        p = TwoNodeParams(a=10.0, b1=3.0, b2=1.0, c=1.0, f=None)
        q1, _, _ = classify_existence(p).equilibrium
        assert q1 == 0.0

    def test_condition_two_capacity(self):
        # between f0 and the uncongested threshold the transfer pins at +f
        th = thresholds(LEMMA)
        f = 0.5 * (th["f0"] + th["uncongested"])
        verdict = classify_existence(TwoNodeParams(10.0, 1.2, 1.0, 1.0, f=f))
        assert verdict.exists and verdict.matched_condition == 2
        q1, q2, r = verdict.equilibrium
        assert r == pytest.approx(f)
        assert q2 == pytest.approx((10.0 + 1.0 * f) / 4.0)
        assert q1 == pytest.approx((10.0 - 1.2 * f) / 4.4)


class TestClosedFormsVerify:
    def test_condition_one_point_is_gne(self):
        p = TwoNodeParams(10.0, 1.2, 1.0, 1.0, f=4.0)
        verdict = classify_existence(p)
        net, params = two_node_instance(p)
        q, r = point_to_vectors(verdict.equilibrium)
        assert verify_gne(net, params, Objective.CONSUMER_SURPLUS, q, r, tol=1e-7)

    def test_condition_two_point_is_gne(self):
        th = thresholds(LEMMA)
        f = 0.5 * (th["f0"] + th["uncongested"])
        p = TwoNodeParams(10.0, 1.2, 1.0, 1.0, f=f)
        verdict = classify_existence(p)
        net, params = two_node_instance(p)
        q, r = point_to_vectors(verdict.equilibrium)
        assert verify_gne(net, params, Objective.CONSUMER_SURPLUS, q, r, tol=1e-7)

    def test_condition_three_point_is_gne(self):
        # regime needs a/b1 < f < a/(b2+2c), i.e. b1 > b2 + 2c: small c
        p = TwoNodeParams(a=10.0, b1=2.0, b2=1.0, c=0.3, f=5.5)
        th = thresholds(p)
        assert th["node1_demand_root"] < p.f < th["uncongested"]
        verdict = classify_existence(p)
        assert verdict.matched_condition == 3
        net, params = two_node_instance(p)
        q, r = point_to_vectors(verdict.equilibrium)
        assert q[0] == 0.0
        assert verify_gne(net, params, Objective.CONSUMER_SURPLUS, q, r, tol=1e-7)

    @given(valid_params())
    @settings(max_examples=60, deadline=None)
    def test_random_closed_forms_verify(self, p):
        verdict = classify_existence(p)
        assert verdict.exists and verdict.matched_condition == 1
        net, params = two_node_instance(p)
        q, r = point_to_vectors(verdict.equilibrium)
        assert verify_gne(net, params, Objective.CONSUMER_SURPLUS, q, r, tol=1e-7)


class TestUnconstrainedEquilibrium:
    def test_social_welfare_values(self):
        q1, q2, r = unconstrained_equilibrium(LEMMA, Objective.SOCIAL_WELFARE)
        assert r == pytest.approx(-2.0 / 14.28, rel=1e-12)
        assert q1 == pytest.approx((10.0 - 1.2 * r) / 4.4, rel=1e-12)
        assert q2 == pytest.approx((10.0 + 1.0 * r) / 4.0, rel=1e-12)
        assert r < 0

    def test_residual_welfare_values(self):
        q1, q2, r = unconstrained_equilibrium(LEMMA, Objective.RESIDUAL_SOCIAL_WELFARE)
        assert r == 0.0
        assert q1 == pytest.approx(10.0 / 4.4)
        assert q2 == pytest.approx(10.0 / 4.0)

    def test_consumer_surplus_values(self):
        q1, q2, r = unconstrained_equilibrium(LEMMA, Objective.CONSUMER_SURPLUS)
        assert r == pytest.approx(10.0 / 3.0)
        assert r > 0

    def test_rejects_finite_capacity(self):
        with pytest.raises(ValueError):
            unconstrained_equilibrium(
                TwoNodeParams(10.0, 1.2, 1.0, 1.0, f=2.0), Objective.SOCIAL_WELFARE
            )

    @given(valid_params())
    @settings(max_examples=150)
    def test_transfer_sign_pattern(self, p):
        r_soc = unconstrained_equilibrium(p, Objective.SOCIAL_WELFARE)[2]
        r_res = unconstrained_equilibrium(p, Objective.RESIDUAL_SOCIAL_WELFARE)[2]
        r_con = unconstrained_equilibrium(p, Objective.CONSUMER_SURPLUS)[2]
        assert r_soc < 0
        assert r_res == 0.0
        assert r_con > 0

    @given(valid_params())
    @settings(max_examples=100)
    def test_social_interior_stationarity(self, p):
        q1, q2, r = unconstrained_equilibrium(p, Objective.SOCIAL_WELFARE)
        lhs = p.b1 * (q1 + r)
        rhs = p.b2 * (q2 - r)
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs), abs(rhs))

    @given(valid_params(), st.floats(0.5, 4.0))
    @settings(max_examples=100)
    def test_scale_equivariance(self, p, lam):
        scaled = TwoNodeParams(a=lam * p.a, b1=p.b1, b2=p.b2, c=p.c)
        for objective in Objective:
            base = unconstrained_equilibrium(p, objective)
            big = unconstrained_equilibrium(scaled, objective)
            for x, y in zip(base, big):
                assert y == pytest.approx(lam * x, rel=1e-9, abs=1e-12)

    @given(valid_params())
    @settings(max_examples=40, deadline=None)
    def test_all_objectives_verify(self, p):
        net, params = two_node_instance(p)
        for objective in Objective:
            q, r = point_to_vectors(unconstrained_equilibrium(p, objective))
            assert verify_gne(net, params, objective, q, r, tol=1e-7)


class TestFromInstance:
    def test_recognizes_and_swaps(self):
        net, params = two_node_instance(LEMMA)
        swapped_params = type(params)(
            a=params.a[::-1], b=params.b[::-1], c=params.c[::-1]
        )
        p, swapped = from_instance(net, swapped_params)
        assert swapped and p.b1 == 1.2 and p.b2 == 1.0

    def test_rejects_asymmetric_intercepts(self):
        from netcournot import MarketParams

        net, _ = two_node_instance(LEMMA)
        params = MarketParams(a=[10.0, 9.0], b=[1.2, 1.0], c=[1.0, 1.0])
        assert from_instance(net, params) is None

    def test_point_vector_round_trip(self):
        q, r = point_to_vectors((1.0, 2.0, 0.5))
        assert np.allclose(q, [1.0, 2.0]) and np.allclose(r, [0.5, -0.5])
        q, r = point_to_vectors((1.0, 2.0, 0.5), swapped=True)
        assert np.allclose(q, [2.0, 1.0]) and np.allclose(r, [-0.5, 0.5])
