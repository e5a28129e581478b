import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tokencycle.errors import ConfigError, DomainError
from tokencycle.model import (
    EFFICIENCY_CLAMPED,
    PARTICIPATION_CLAMPED,
    ScenarioParams,
    Schedule,
    TimeGrid,
    aggregate,
    break_even_token_value,
    efficiency_at,
    environmental_benefit,
    evaluate_trajectory,
    net_benefit_closed_form,
    net_benefit_composed,
    operational_cost,
    participation_at,
    recycling_volume,
    token_revenue,
    token_value_from_market,
    utility_at,
)


def test_efficiency_examples():
    assert efficiency_at(0, ScenarioParams(eta_0=0.3, eta_growth=0.01)) == 0.3
    assert efficiency_at(10, ScenarioParams(eta_0=0.3, eta_growth=0.01)) == pytest.approx(0.4, abs=1e-15)
    eta, clamped = efficiency_at(100, ScenarioParams(eta_0=0.5, eta_growth=0.01), with_flag=True)
    assert eta == 1.0 and clamped


def test_utility_examples():
    assert utility_at(5, 7, ScenarioParams(alpha_financial=1, alpha_social=0)) == 5
    assert utility_at(4, 2, ScenarioParams(alpha_financial=0.5, alpha_social=0.5)) == 3
    assert utility_at(123.4, -5, ScenarioParams(alpha_financial=0, alpha_social=0)) == 0


def test_participation_at_zero_time_is_zero():
    for u in (0.0, 1.0, 50.0, -3.0):
        assert participation_at(0.0, u, ScenarioParams(p_max=0.9, adoption_rate=0.7)) == 0.0


def test_participation_saturates():
    p = participation_at(1.0, 1.0, ScenarioParams(p_max=0.8, adoption_rate=1e9))
    assert p == 0.8


def test_participation_against_arbitrary_precision():
    mpmath.mp.dps = 50
    expected = mpmath.mpf("0.5") * (1 - mpmath.exp(-1)) * 2
    got = participation_at(10.0, 2.0, ScenarioParams(p_max=0.5, adoption_rate=0.1))
    assert got == pytest.approx(float(expected), rel=1e-15)
    assert str(got).startswith("0.6321")


def test_participation_clamp_flag():
    p, clamped = participation_at(10.0, 100.0, ScenarioParams(p_max=1.0, adoption_rate=1.0), with_flag=True)
    assert p == 1.0 and clamped


def test_token_value_examples():
    assert token_value_from_market(100, 50) == 2.0
    assert token_value_from_market(7.25, 7.25) == 1.0
    with pytest.raises(DomainError):
        token_value_from_market(1.0, 0.0)


def test_recycling_volume_examples():
    assert recycling_volume(0.5, 1.0, 1000) == 500
    assert recycling_volume(0.0, 0.7, 1234) == 0
    assert recycling_volume(0.5, 0.5, 1000) == 250


def test_operational_cost_examples():
    assert operational_cost(1000, 0, ScenarioParams(base_cost=50000, unit_cost=0)) == 50000
    assert operational_cost(0, 0, ScenarioParams(base_cost=0)) == 0
    assert operational_cost(100, 10, ScenarioParams(base_cost=50, unit_cost=4)) == 440


def test_environmental_benefit_examples():
    assert environmental_benefit(0, ScenarioParams(env_alpha=3, carbon_credit_price=2)) == 0
    assert environmental_benefit(100, ScenarioParams(env_alpha=1, carbon_credit_price=2)) == 300
    p = ScenarioParams(env_alpha=1, carbon_credit_price=2, qualifying_fraction=0.5)
    assert environmental_benefit(100, p) == 200


def test_token_revenue_examples():
    assert token_revenue(500, 2) == 1000
    assert token_revenue(0, 9) == 0
    assert token_revenue(100, 3) == 300


EXAMPLE = ScenarioParams(env_alpha=1, carbon_credit_price=2, unit_cost=4, base_cost=50)


def test_net_benefit_composed_example():
    assert net_benefit_composed(100, 3, 10, EXAMPLE) == 160
    assert net_benefit_composed(0, 3, 0, ScenarioParams()) == 0


def test_net_benefit_closed_form_example():
    # Choose the time-varying terms so that recycled volume is exactly 100 at t=1:
    # p_max*(1-e^{-lambda})*U*eta*W with U = Tv = 3.
    lam = 1.0
    adopt = 1 - math.exp(-lam)
    params = ScenarioParams(
        p_max=1.0, adoption_rate=lam, alpha_financial=1.0, eta_0=1.0, w_0=100 / (adopt * 3),
        unit_cost=4, base_cost=50, env_alpha=1, carbon_credit_price=2,
        demand_schedule=Schedule.constant(3.0), subsidy_schedule=Schedule.constant(10.0),
    )
    assert net_benefit_closed_form(1.0, params) == pytest.approx(160, rel=1e-12)


@pytest.mark.parametrize("delta", [1.0, 100.0, -50.0])
def test_subsidy_shift_is_exact(delta):
    base = net_benefit_composed(123.0, 2.5, 40.0, EXAMPLE)
    assert net_benefit_composed(123.0, 2.5, 40.0 + delta, EXAMPLE) - base == delta


def test_closed_form_at_time_zero():
    p = ScenarioParams(base_cost=1234.5, subsidy_schedule=Schedule.constant(17.0), adoption_rate=0.4)
    assert net_benefit_closed_form(0.0, p) == -1234.5 + 17.0


@pytest.mark.parametrize(
    "ct, alpha, tc, expected", [(10, 2, 5, 3), (5, 3, 5, -3), (7.5, 2.5, 5.0, 0.0)]
)
def test_break_even(ct, alpha, tc, expected):
    assert break_even_token_value(ScenarioParams(unit_cost=ct, env_alpha=alpha, carbon_credit_price=tc)) == expected


def test_break_even_zeroes_the_margin():
    p = ScenarioParams(unit_cost=6.0, env_alpha=1.5, carbon_credit_price=2.0)
    tv = break_even_token_value(p)
    assert net_benefit_composed(1000.0, tv, 0.0, p) == 0.0


def test_zero_adoption_rate_gives_fixed_cost_trajectory():
    p = ScenarioParams(adoption_rate=0.0, base_cost=300.0, subsidy_schedule=Schedule.constant(20.0), unit_cost=2.0)
    for point in evaluate_trajectory(p, TimeGrid(0.0, 1.0, 5)):
        assert point.participation == 0.0
        assert point.net_benefit == -300.0 + 20.0


def test_single_point_grid_matches_operations():
    p = ScenarioParams(p_max=0.6, adoption_rate=0.2, alpha_financial=0.7, alpha_social=0.3, eta_0=0.4,
                       eta_growth=0.05, w_0=900.0, base_cost=100.0, unit_cost=1.5, env_alpha=0.4,
                       carbon_credit_price=2.0, qualifying_fraction=0.8,
                       demand_schedule=Schedule.constant(3.0), token_supply_schedule=Schedule.constant(2.0),
                       social_signal_schedule=Schedule.constant(1.5), subsidy_schedule=Schedule.constant(25.0))
    t = 3.0
    (point,) = evaluate_trajectory(p, TimeGrid(t, 1.0, 1))[:1]
    tv = token_value_from_market(3.0, 2.0)
    u = utility_at(tv, 1.5, p)
    r = recycling_volume(participation_at(t, u, p), efficiency_at(t, p), 900.0)
    assert point.token_value == tv
    assert point.recycling_volume == r
    assert point.net_benefit == net_benefit_composed(r, tv, 25.0, p)


def test_linear_waste_without_growth_is_constant():
    pts = evaluate_trajectory(ScenarioParams(w_0=321.0), TimeGrid(0.0, 0.5, 8))
    assert {p.waste for p in pts} == {321.0}


def test_clamp_flags_are_recorded():
    p = ScenarioParams(p_max=1.0, adoption_rate=5.0, alpha_financial=10.0, eta_0=0.9, eta_growth=0.1)
    last = evaluate_trajectory(p, TimeGrid(0.0, 1.0, 3))[-1]
    assert PARTICIPATION_CLAMPED in last.clamp_flags
    assert EFFICIENCY_CLAMPED in last.clamp_flags


def test_aggregate_modes():
    pts = evaluate_trajectory(ScenarioParams(base_cost=1.0), TimeGrid(0.0, 1.0, 3))
    assert aggregate(pts, "terminal") == pts[-1].net_benefit
    assert aggregate(pts, "sum-over-grid") == sum(p.net_benefit for p in pts)


def test_gbm_mode_needs_matching_path():
    with pytest.raises(ConfigError):
        evaluate_trajectory(ScenarioParams(), TimeGrid(0.0, 1.0, 3), "gbm", [1.0, 2.0])


def test_param_validation_names_field():
    with pytest.raises(ConfigError) as exc:
        ScenarioParams(p_max=1.5)
    assert exc.value.path == "params.p_max"
    with pytest.raises(ConfigError) as exc:
        ScenarioParams(token_supply_schedule=Schedule(((0.0, 1.0), (2.0, 0.0))))
    assert "breakpoints[1]" in exc.value.path


def test_schedule_piecewise_and_linear():
    s = Schedule(((0.0, 1.0), (2.0, 3.0)))
    assert [s(t) for t in (-1.0, 0.0, 1.9, 2.0, 5.0)] == [1.0, 1.0, 1.0, 3.0, 3.0]
    lin = Schedule(((0.0, 1.0), (2.0, 3.0)), "linear")
    assert lin(1.0) == 2.0


finite = dict(allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(
    r=st.floats(0, 1e6, **finite),
    tv=st.floats(-100, 100, **finite),
    s=st.floats(-1e5, 1e5, **finite),
    ct=st.floats(0, 50, **finite),
    cb=st.floats(0, 1e5, **finite),
    alpha=st.floats(-10, 10, **finite),
    tc=st.floats(-10, 10, **finite),
)
def test_composed_equals_margin_form(r, tv, s, ct, cb, alpha, tc):
    p = ScenarioParams(unit_cost=ct, base_cost=cb, env_alpha=alpha, carbon_credit_price=tc)
    composed = net_benefit_composed(r, tv, s, p)
    margin = r * (tv + alpha + tc - ct) - cb + s
    scale = max(1.0, abs(r) * (abs(tv) + abs(alpha) + abs(tc) + ct) + cb + abs(s))
    assert abs(composed - margin) <= 1e-12 * scale


@settings(max_examples=200, deadline=None)
@given(t=st.floats(0, 200, **finite), eta0=st.floats(0, 1), g=st.floats(-0.1, 0.1))
def test_efficiency_in_unit_interval(t, eta0, g):
    assert 0.0 <= efficiency_at(t, ScenarioParams(eta_0=eta0, eta_growth=g)) <= 1.0


@settings(max_examples=200, deadline=None)
@given(t=st.floats(0, 100, **finite), u=st.floats(-1e3, 1e3, **finite), pmax=st.floats(0, 1),
       lam=st.floats(0, 10, **finite))
def test_participation_in_unit_interval(t, u, pmax, lam):
    assert 0.0 <= participation_at(t, u, ScenarioParams(p_max=pmax, adoption_rate=lam)) <= 1.0
