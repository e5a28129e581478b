"""Analytic net-benefit partials, finite-difference checks and parameter sweeps.

Two net-benefit functions are differentiated:

``margin`` mode
    Recycled volume is held at its base value (the token value feeding the
    utility is frozen) and every recycled unit earns the carbon credit. This
    is the form whose partials are the simple volume expressions below.
``composed`` mode
    The composed model net benefit at the same frozen volume; the carbon
    credit then applies only to the qualifying share.

The total derivative in the token value, which also moves participation
through the utility, is available numerically via ``full`` mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

from .errors import DomainError, UsageError
from .model import (
    ScenarioParams,
    Schedule,
    efficiency_at,
    market_token_value,
    net_benefit_composed,
    participation_at,
    recycling_volume,
    utility_at,
    waste_linear,
)
from .montecarlo import MonteCarloScenario, MonteCarloSummary, run_monte_carlo
from .stochastic import DistributionSpec

MODES = ("margin", "composed", "full")
PARAMETERS = ("token_value", "unit_cost", "carbon_credit_price", "subsidy")
SWEEPABLE = ("unit_cost", "carbon_credit_price", "env_alpha", "subsidy", "token_value_mean")


def central_difference(f: Callable[[float], float], x: float, h: float | None = None) -> float:
    if h is None:
        h = max(1e-6, 1e-6 * abs(x))
    if not h > 0:
        raise UsageError(f"step must be > 0, got {h!r}")
    hi, lo = f(x + h), f(x - h)
    if not (math.isfinite(hi) and math.isfinite(lo)):
        raise DomainError(f"non-finite function value near x={x!r}")
    return (hi - lo) / (2 * h)


def recycled_at(t: float, params: ScenarioParams, token_value: float | None = None) -> float:
    """Recycled volume on the linear waste path, with clamped rates."""
    tv = market_token_value(t, params) if token_value is None else token_value
    u = utility_at(tv, params.social_signal_schedule(t), params)
    return recycling_volume(participation_at(t, u, params), efficiency_at(t, params), waste_linear(t, params))


def net_benefit_at(
    t: float,
    params: ScenarioParams,
    mode: str = "margin",
    token_value: float | None = None,
    unit_cost: float | None = None,
    carbon_credit_price: float | None = None,
    subsidy: float | None = None,
) -> float:
    """Net benefit at time ``t`` with optional overrides of the four inputs."""
    if mode not in MODES:
        raise UsageError(f"mode must be one of {MODES}, got {mode!r}")
    changes = {}
    if unit_cost is not None:
        changes["unit_cost"] = unit_cost
    if carbon_credit_price is not None:
        changes["carbon_credit_price"] = carbon_credit_price
    p = replace(params, **changes) if changes else params
    tv = market_token_value(t, params) if token_value is None else token_value
    s = params.subsidy_schedule(t) if subsidy is None else subsidy
    r = recycled_at(t, params, tv if mode == "full" else None)
    if mode == "margin":
        return r * (tv + p.env_alpha + p.carbon_credit_price - p.unit_cost) - p.base_cost + s
    return net_benefit_composed(r, tv, s, p)


def partial_wrt_token_value(t: float, params: ScenarioParams) -> float:
    return recycled_at(t, params)


def partial_wrt_unit_cost(t: float, params: ScenarioParams) -> float:
    return -recycled_at(t, params)


def partial_wrt_carbon_credit(t: float, params: ScenarioParams, mode: str = "margin") -> float:
    r = recycled_at(t, params)
    return r if mode == "margin" else params.qualifying_fraction * r


def partial_wrt_subsidy(t: float, params: ScenarioParams) -> float:
    return 1.0


@dataclass(frozen=True)
class SensitivityReport:
    parameter: str
    mode: str
    analytic: float
    finite_difference: float
    relative_error: float
    t: float
    params: ScenarioParams

    def row(self) -> dict:
        return {
            "parameter": self.parameter,
            "mode": self.mode,
            "analytic": self.analytic,
            "finite_difference": self.finite_difference,
            "relative_error": self.relative_error,
        }


def _base_value(name: str, t: float, params: ScenarioParams) -> float:
    if name == "token_value":
        return market_token_value(t, params)
    if name == "subsidy":
        return params.subsidy_schedule(t)
    return getattr(params, name)


def check_partial(name: str, t: float, params: ScenarioParams, mode: str = "margin") -> SensitivityReport:
    analytic = {
        "token_value": lambda: partial_wrt_token_value(t, params),
        "unit_cost": lambda: partial_wrt_unit_cost(t, params),
        "carbon_credit_price": lambda: partial_wrt_carbon_credit(t, params, mode),
        "subsidy": lambda: partial_wrt_subsidy(t, params),
    }[name]()
    x0 = _base_value(name, t, params)

    def f(x):
        return net_benefit_at(t, params, mode, **{name: x})

    h = None
    if name == "subsidy":
        # Net benefit is exactly linear in the subsidy, so a step of the order
        # of the function value removes rounding error without adding bias.
        h = 2.0 ** math.ceil(math.log2(max(1.0, abs(f(x0)), abs(x0))))
    fd = central_difference(f, x0, h)
    return SensitivityReport(
        parameter=name,
        mode=mode,
        analytic=analytic,
        finite_difference=fd,
        relative_error=abs(analytic - fd) / max(1.0, abs(analytic)),
        t=t,
        params=params,
    )


def sensitivity_table(t: float, params: ScenarioParams) -> list[SensitivityReport]:
    """All four partials in margin mode, plus the carbon-credit partial in composed mode."""
    rows = [check_partial(name, t, params, "margin") for name in PARAMETERS]
    rows.append(check_partial("carbon_credit_price", t, params, "composed"))
    return rows


def total_derivative_token_value(t: float, params: ScenarioParams) -> float:
    """d(net benefit)/d(token value) including the participation response."""
    return central_difference(
        lambda x: net_benefit_at(t, params, "full", token_value=x), market_token_value(t, params)
    )


# --- sweeps ------------------------------------------------------------------


def apply_parameter(scenario: MonteCarloScenario, parameter: str, value: float) -> MonteCarloScenario:
    """Scenario with one sweepable scalar set to ``value``.

    For inputs that are sampled, the distribution is moved to the new mean.
    """
    if parameter not in SWEEPABLE:
        raise UsageError(f"unknown sweep parameter {parameter!r}; valid names are {', '.join(SWEEPABLE)}")
    params = scenario.params
    inputs = dict(scenario.stochastic_inputs)
    if parameter in ("unit_cost", "env_alpha"):
        params = replace(params, **{parameter: value})
    elif parameter == "subsidy":
        params = replace(params, subsidy_schedule=Schedule.constant(value))
    elif parameter == "carbon_credit_price":
        if parameter in inputs:
            inputs[parameter] = inputs[parameter].with_mean(value)
        else:
            params = replace(params, carbon_credit_price=value)
    else:
        spec = inputs.get("token_value")
        inputs["token_value"] = spec.with_mean(value) if spec is not None else DistributionSpec.constant(value)
    return replace(scenario, params=params, stochastic_inputs=inputs)


def sweep(
    scenario: MonteCarloScenario,
    parameter: str,
    values: Sequence[float],
    n_trials: int,
    seed: int,
    workers: int = 1,
) -> list[tuple[float, MonteCarloSummary]]:
    """One Monte Carlo run per value, all on the same master seed."""
    scenarios = [apply_parameter(scenario, parameter, float(v)) for v in values]
    return [(float(v), run_monte_carlo(s, n_trials, seed, workers)[1]) for v, s in zip(values, scenarios)]
