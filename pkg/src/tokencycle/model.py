"""Deterministic recycling-incentive model: domain types and equations.

All quantities are in abstract units. Participation and efficiency are
clamped to [0, 1] wherever they act as rates; the closed-form net benefit is
the one place the raw (unclamped) expression is kept, so that it can serve as
an algebraic cross-check of the composed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DomainError

PARTICIPATION_CLAMPED = "participation_clamped"
EFFICIENCY_CLAMPED = "efficiency_clamped"
NEGATIVE_OP_COST = "negative_op_cost"

WASTE_MODES = ("linear", "gbm")
AGGREGATIONS = ("terminal", "sum-over-grid")
INTERPOLATIONS = ("piecewise-constant", "linear")


def _clamp01(x: float) -> tuple[float, bool]:
    if x < 0.0:
        return 0.0, True
    if x > 1.0:
        return 1.0, True
    return x, False


@dataclass(frozen=True)
class Schedule:
    """Time-indexed exogenous input (demand, supply, social signal, subsidy).

    Outside the breakpoint range the nearest endpoint value is returned.
    Piecewise-constant schedules hold each value until the next breakpoint.
    """

    breakpoints: tuple[tuple[float, float], ...]
    interpolation: str = "piecewise-constant"

    def __post_init__(self):
        bps = tuple((float(t), float(v)) for t, v in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        if not bps:
            raise ConfigError("breakpoints", "schedule needs at least one breakpoint")
        if self.interpolation not in INTERPOLATIONS:
            raise ConfigError("interpolation", f"must be one of {INTERPOLATIONS}, got {self.interpolation!r}")
        for i in range(1, len(bps)):
            if not bps[i][0] > bps[i - 1][0]:
                raise ConfigError(f"breakpoints[{i}]", "breakpoint times must be strictly increasing")
        for i, (t, v) in enumerate(bps):
            if not (math.isfinite(t) and math.isfinite(v)):
                raise ConfigError(f"breakpoints[{i}]", "breakpoint time and value must be finite")

    @classmethod
    def constant(cls, value: float) -> "Schedule":
        return cls(((0.0, value),))

    def values_on(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        ts = np.array([t for t, _ in self.breakpoints])
        vs = np.array([v for _, v in self.breakpoints])
        if self.interpolation == "linear":
            return np.interp(times, ts, vs)
        idx = np.searchsorted(ts, times, side="right") - 1
        return vs[np.clip(idx, 0, len(vs) - 1)]

    def __call__(self, t: float) -> float:
        return float(self.values_on([t])[0])


@dataclass(frozen=True)
class TimeGrid:
    t_start: float = 0.0
    dt: float = 1.0
    n_steps: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError("dt", f"must be > 0, got {self.dt!r}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ConfigError("n_steps", f"must be a positive integer, got {self.n_steps!r}")
        if not math.isfinite(self.t_start):
            raise ConfigError("t_start", "must be finite")

    def __len__(self) -> int:
        return int(self.n_steps) + 1

    def times(self) -> np.ndarray:
        return self.t_start + np.arange(len(self), dtype=float) * self.dt

    @property
    def t_end(self) -> float:
        return float(self.times()[-1])


@dataclass(frozen=True)
class ScenarioParams:
    p_max: float = 0.8
    adoption_rate: float = 0.1
    alpha_financial: float = 1.0
    alpha_social: float = 0.0
    eta_0: float = 0.5
    eta_growth: float = 0.0
    w_0: float = 1000.0
    waste_drift: float = 0.0
    waste_volatility: float = 0.0
    waste_linear_growth: float = 0.0
    base_cost: float = 0.0
    unit_cost: float = 0.0
    env_alpha: float = 0.0
    carbon_credit_price: float = 0.0
    qualifying_fraction: float = 1.0
    subsidy_schedule: Schedule = field(default_factory=lambda: Schedule.constant(0.0))
    demand_schedule: Schedule = field(default_factory=lambda: Schedule.constant(1.0))
    token_supply_schedule: Schedule = field(default_factory=lambda: Schedule.constant(1.0))
    social_signal_schedule: Schedule = field(default_factory=lambda: Schedule.constant(0.0))

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Schedule):
                continue
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"params.{f.name}", f"must be a finite number, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        for name in ("p_max", "eta_0", "qualifying_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"params.{name}", f"must lie in [0, 1], got {v!r}")
        for name in ("adoption_rate", "waste_volatility", "base_cost", "unit_cost"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"params.{name}", f"must be >= 0, got {getattr(self, name)!r}")
        if not self.w_0 > 0.0:
            raise ConfigError("params.w_0", f"must be > 0, got {self.w_0!r}")
        for i, (_, v) in enumerate(self.token_supply_schedule.breakpoints):
            if not v > 0.0:
                raise ConfigError(
                    f"params.token_supply_schedule.breakpoints[{i}]",
                    f"token supply must be > 0, got {v!r}",
                )


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    efficiency: float
    waste: float
    utility: float
    participation: float
    token_value: float
    recycling_volume: float
    op_cost: float
    env_benefit: float
    token_revenue: float
    net_benefit: float
    clamp_flags: frozenset = frozenset()


# --- single equations -------------------------------------------------------


def efficiency_at(t: float, params: ScenarioParams, with_flag: bool = False):
    eta, clamped = _clamp01(params.eta_0 + params.eta_growth * t)
    return (eta, clamped) if with_flag else eta


def adoption_factor(t: float, params: ScenarioParams) -> float:
    """The saturating adoption term ``1 - exp(-lambda t)``."""
    return 1.0 - math.exp(-params.adoption_rate * t)


def utility_at(token_value: float, social_signal: float, params: ScenarioParams) -> float:
    return params.alpha_financial * token_value + params.alpha_social * social_signal


def participation_raw(t: float, utility: float, params: ScenarioParams) -> float:
    return params.p_max * adoption_factor(t, params) * utility


def participation_at(t: float, utility: float, params: ScenarioParams, with_flag: bool = False):
    p, clamped = _clamp01(participation_raw(t, utility, params))
    return (p, clamped) if with_flag else p


def token_value_from_market(demand: float, supply: float, t: float | None = None) -> float:
    if not supply > 0.0:
        raise DomainError(f"token supply must be > 0, got {supply!r}", t)
    return demand / supply


def recycling_volume(participation: float, efficiency: float, waste: float) -> float:
    return participation * efficiency * waste


def operational_cost(recycled: float, subsidy: float, params: ScenarioParams) -> float:
    return params.base_cost + params.unit_cost * recycled - subsidy


def environmental_benefit(recycled: float, params: ScenarioParams) -> float:
    qualifying = params.qualifying_fraction * recycled
    return params.env_alpha * recycled + params.carbon_credit_price * qualifying


def token_revenue(recycled: float, token_value: float) -> float:
    return recycled * token_value


def net_benefit_composed(recycled: float, token_value: float, subsidy: float, params: ScenarioParams) -> float:
    """Token revenue plus environmental benefit minus operational cost.

    The subsidy enters once, through the operational cost.
    """
    revenue = token_revenue(recycled, token_value)
    env = environmental_benefit(recycled, params)
    return revenue + env - operational_cost(recycled, subsidy, params)


def waste_linear(t: float, params: ScenarioParams) -> float:
    return params.w_0 + params.waste_linear_growth * t


def market_token_value(t: float, params: ScenarioParams) -> float:
    return token_value_from_market(params.demand_schedule(t), params.token_supply_schedule(t), t)


def net_benefit_closed_form(t: float, params: ScenarioParams) -> float:
    """Single-expression net benefit with linear waste, raw participation and
    unclamped efficiency; every recycled unit qualifies for carbon credits."""
    tv = market_token_value(t, params)
    utility = utility_at(tv, params.social_signal_schedule(t), params)
    volume = (
        params.p_max
        * (1.0 - math.exp(-params.adoption_rate * t))
        * utility
        * (params.eta_0 + params.eta_growth * t)
        * (params.w_0 + params.waste_linear_growth * t)
    )
    margin = tv + params.env_alpha + params.carbon_credit_price - params.unit_cost
    return volume * margin - params.base_cost + params.subsidy_schedule(t)


def break_even_token_value(params: ScenarioParams) -> float:
    """Token value at which the per-unit margin vanishes.

    Negative values mean environmental benefit and carbon credits alone cover
    the unit cost.
    """
    return params.unit_cost - params.env_alpha - params.carbon_credit_price


# --- trajectories ----------------------------------------------------------


@dataclass(frozen=True)
class GridInputs:
    """Per-grid-point quantities that do not vary between Monte Carlo trials."""

    times: np.ndarray
    adoption: np.ndarray
    efficiency: np.ndarray
    efficiency_clamped: np.ndarray
    market_token_value: np.ndarray
    social_signal: np.ndarray
    subsidy: np.ndarray
    waste_linear: np.ndarray


def grid_inputs(params: ScenarioParams, grid: TimeGrid) -> GridInputs:
    times = grid.times()
    demand = params.demand_schedule.values_on(times)
    supply = params.token_supply_schedule.values_on(times)
    eff = [efficiency_at(float(t), params, with_flag=True) for t in times]
    return GridInputs(
        times=times,
        adoption=np.array([adoption_factor(float(t), params) for t in times]),
        efficiency=np.array([e for e, _ in eff]),
        efficiency_clamped=np.array([c for _, c in eff], dtype=bool),
        market_token_value=np.array(
            [token_value_from_market(float(d), float(s), float(t)) for d, s, t in zip(demand, supply, times)]
        ),
        social_signal=params.social_signal_schedule.values_on(times),
        subsidy=params.subsidy_schedule.values_on(times),
        waste_linear=np.array([waste_linear(float(t), params) for t in times]),
    )


def evaluate_trajectory(
    params: ScenarioParams,
    grid: TimeGrid,
    waste_mode: str = "linear",
    waste_path: Sequence[float] | None = None,
    token_value: float | None = None,
) -> list[TrajectoryPoint]:
    """Evaluate the full equation chain at every grid point.

    ``token_value`` overrides the market price D/S for the whole trajectory.
    In ``gbm`` mode ``waste_path`` supplies the waste volume per grid point.
    """
    if waste_mode not in WASTE_MODES:
        raise ConfigError("waste_mode", f"must be one of {WASTE_MODES}, got {waste_mode!r}")
    if waste_mode == "gbm":
        if waste_path is None or len(waste_path) != len(grid):
            got = None if waste_path is None else len(waste_path)
            raise ConfigError("waste_path", f"gbm mode needs a path of length {len(grid)}, got {got}")
    gi = grid_inputs(params, grid)
    points = []
    for k, t in enumerate(gi.times):
        t = float(t)
        flags = set()
        eta = float(gi.efficiency[k])
        if gi.efficiency_clamped[k]:
            flags.add(EFFICIENCY_CLAMPED)
        tv = float(gi.market_token_value[k]) if token_value is None else token_value
        u = utility_at(tv, float(gi.social_signal[k]), params)
        p, p_clamped = _clamp01(params.p_max * float(gi.adoption[k]) * u)
        if p_clamped:
            flags.add(PARTICIPATION_CLAMPED)
        w = float(waste_path[k]) if waste_mode == "gbm" else float(gi.waste_linear[k])
        r = recycling_volume(p, eta, w)
        subsidy = float(gi.subsidy[k])
        cost = operational_cost(r, subsidy, params)
        if cost < 0.0:
            flags.add(NEGATIVE_OP_COST)
        env = environmental_benefit(r, params)
        rev = token_revenue(r, tv)
        points.append(
            TrajectoryPoint(
                t=t,
                efficiency=eta,
                waste=w,
                utility=u,
                participation=p,
                token_value=tv,
                recycling_volume=r,
                op_cost=cost,
                env_benefit=env,
                token_revenue=rev,
                net_benefit=(rev + env) - cost,
                clamp_flags=frozenset(flags),
            )
        )
    return points


def aggregate(points: Iterable[TrajectoryPoint], how: str = "terminal", attr: str = "net_benefit") -> float:
    """Collapse a trajectory to one number: the last point, or a sequential sum."""
    points = list(points)
    if how == "terminal":
        return getattr(points[-1], attr)
    if how == "sum-over-grid":
        total = 0.0
        for p in points:
            total += getattr(p, attr)
        return total
    raise ConfigError("horizon_aggregation", f"must be one of {AGGREGATIONS}, got {how!r}")
