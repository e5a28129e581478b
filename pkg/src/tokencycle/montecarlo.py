"""Seeded Monte Carlo trials over the trajectory model, and their summaries.

Trial ``i`` of a run draws everything from ``derive_stream(master_seed, i)``,
so per-trial results do not depend on how trials are split across workers.
Each stochastic input is sampled once per trial; the GBM waste path is the
only randomness inside a trial.
"""

from __future__ import annotations

import math
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import ConfigError, DomainError, TrialError, UsageError
from .model import AGGREGATIONS, WASTE_MODES, ScenarioParams, TimeGrid, grid_inputs
from .stochastic import DistributionSpec, RandomStream, derive_stream, draw, gbm_step_coefficients

# Stochastic input name -> ScenarioParams field it replaces (None: the token
# value, which otherwise comes from the demand/supply schedules).
INPUT_TARGETS = {
    "token_value": None,
    "participation_base": "p_max",
    "base_cost": "base_cost",
    "carbon_credit_price": "carbon_credit_price",
}
INPUT_ORDER = tuple(INPUT_TARGETS)

# Applied when the config gives no clamp of its own.
DEFAULT_CLAMPS = {
    "participation_base": (0.0, 1.0),
    "base_cost": (0.0, math.inf),
    "carbon_credit_price": (0.0, math.inf),
}

PERCENTILES = {"p5": 0.05, "p50": 0.50, "p95": 0.95}


@dataclass(frozen=True)
class MonteCarloScenario:
    params: ScenarioParams
    grid: TimeGrid
    waste_mode: str = "linear"
    stochastic_inputs: Mapping[str, DistributionSpec] = field(default_factory=dict)
    horizon_aggregation: str = "terminal"
    histogram_bins: int = 50

    def __post_init__(self):
        if self.waste_mode not in WASTE_MODES:
            raise ConfigError("waste_mode", f"must be one of {WASTE_MODES}, got {self.waste_mode!r}")
        if self.horizon_aggregation not in AGGREGATIONS:
            raise ConfigError(
                "horizon_aggregation", f"must be one of {AGGREGATIONS}, got {self.horizon_aggregation!r}"
            )
        if int(self.histogram_bins) != self.histogram_bins or self.histogram_bins < 1:
            raise ConfigError("histogram_bins", f"must be a positive integer, got {self.histogram_bins!r}")
        inputs = {}
        for name, spec in dict(self.stochastic_inputs).items():
            if name not in INPUT_TARGETS:
                raise ConfigError(
                    f"stochastic_inputs.{name}", f"unknown input; valid names are {sorted(INPUT_TARGETS)}"
                )
            if spec.clamp is None and name in DEFAULT_CLAMPS:
                spec = replace(spec, clamp=DEFAULT_CLAMPS[name])
            inputs[name] = spec
        object.__setattr__(self, "stochastic_inputs", {k: inputs[k] for k in INPUT_ORDER if k in inputs})


@dataclass(frozen=True)
class TrialOutcome:
    trial_index: int
    net_benefit: float
    recycling_volume: float
    token_revenue: float
    op_cost: float
    env_benefit: float
    sampled_values: dict = field(default_factory=dict)
    clamp_count: int = 0
    negative_cost_points: int = 0


@dataclass(frozen=True)
class MonteCarloSummary:
    n: int
    mean: float
    sample_std: float
    std_defined: bool
    min: float
    max: float
    p5: float
    p50: float
    p95: float
    histogram: tuple
    total_clamp_events: int = 0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "sample_std": self.sample_std,
            "std_defined": self.std_defined,
            "min": self.min,
            "max": self.max,
            "p5": self.p5,
            "p50": self.p50,
            "p95": self.p95,
            "total_clamp_events": self.total_clamp_events,
            "histogram": [list(b) for b in self.histogram],
        }


# --- statistics --------------------------------------------------------------


def percentile_sorted(xs: np.ndarray, p: float) -> float:
    """Linear interpolation between order statistics at rank ``(n - 1) p``."""
    n = len(xs)
    h = (n - 1) * p
    lo = math.floor(h)
    if lo >= n - 1:
        return float(xs[n - 1])
    frac = h - lo
    return float(xs[lo] + frac * (xs[lo + 1] - xs[lo]))


def _net_values(outcomes) -> np.ndarray:
    if len(outcomes) and isinstance(outcomes[0], TrialOutcome):
        return np.array([o.net_benefit for o in outcomes], dtype=float)
    return np.asarray(outcomes, dtype=float)


def histogram(outcomes, n_bins: int = 50) -> list[tuple[float, float, int]]:
    """Equal-width bins over [min, max]; the maximum falls in the last bin."""
    values = _net_values(outcomes)
    if values.size == 0:
        raise UsageError("histogram of an empty sample")
    if n_bins < 1:
        raise UsageError(f"n_bins must be >= 1, got {n_bins}")
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        return [(lo, hi, int(values.size) if j == 0 else 0) for j in range(n_bins)]
    width = (hi - lo) / n_bins
    edges = lo + np.arange(n_bins + 1, dtype=float) * width
    edges[-1] = hi
    counts = _kernels.histogram_counts(values, edges)
    return [(float(edges[j]), float(edges[j + 1]), int(counts[j])) for j in range(n_bins)]


def summarize(outcomes, n_bins: int = 50) -> MonteCarloSummary:
    """Mean, sample std (n - 1), extremes, p5/p50/p95 and a histogram."""
    values = _net_values(outcomes)
    n = int(values.size)
    if n == 0:
        raise UsageError("cannot summarize an empty set of outcomes")
    # Shifted sums: a constant sample gives its value and zero spread exactly.
    shift = float(values[0])
    mean = shift + math.fsum(values - shift) / n
    if n > 1:
        std = math.sqrt(math.fsum((values - mean) ** 2) / (n - 1))
    else:
        std = 0.0
    xs = np.sort(values)
    clamps = 0
    if n and isinstance(outcomes[0], TrialOutcome):
        clamps = sum(o.clamp_count for o in outcomes)
    return MonteCarloSummary(
        n=n,
        mean=mean,
        sample_std=std,
        std_defined=n > 1,
        min=float(xs[0]),
        max=float(xs[-1]),
        histogram=tuple(histogram(values, n_bins)),
        total_clamp_events=int(clamps),
        **{name: percentile_sorted(xs, p) for name, p in PERCENTILES.items()},
    )


# --- trials ------------------------------------------------------------------


@dataclass
class _Batch:
    indices: np.ndarray
    components: np.ndarray  # (n, 5), columns per _kernels
    sampled: np.ndarray  # (n, len(inputs))
    clamps: np.ndarray
    neg_cost: np.ndarray


def _simulate(scenario: MonteCarloScenario, master_seed: int, indices: Sequence[int]) -> _Batch:
    params = scenario.params
    gi = grid_inputs(params, scenario.grid)
    n = len(indices)
    names = list(scenario.stochastic_inputs)
    specs = [scenario.stochastic_inputs[k] for k in names]

    p_max = np.full(n, params.p_max)
    base_cost = np.full(n, params.base_cost)
    carbon = np.full(n, params.carbon_credit_price)
    tv_override = np.full(n, np.nan)
    columns = {"participation_base": p_max, "base_cost": base_cost,
               "carbon_credit_price": carbon, "token_value": tv_override}
    sampled = np.empty((n, len(names)))
    sample_clamps = np.zeros(n, dtype=np.int64)

    gbm = scenario.waste_mode == "gbm"
    if gbm:
        z = np.empty((n, scenario.grid.n_steps))
    for row, idx in enumerate(indices):
        stream = derive_stream(master_seed, int(idx))
        for j, (name, spec) in enumerate(zip(names, specs)):
            try:
                x, clamped = draw(spec, None if spec.kind == "constant" else stream.generator(name))
            except OverflowError:
                raise TrialError(int(idx), DomainError(f"{name} draw overflowed")) from None
            sampled[row, j] = x
            columns[name][row] = x
            sample_clamps[row] += clamped
        if gbm:
            z[row] = stream.generator("waste").standard_normal(scenario.grid.n_steps)

    if gbm:
        step_drift, step_vol = gbm_step_coefficients(params.waste_drift, params.waste_volatility, scenario.grid.dt)
        waste = _kernels.gbm_paths(params.w_0, step_drift, step_vol, z)
    else:
        waste = gi.waste_linear.reshape(1, -1)

    how = _kernels.TERMINAL if scenario.horizon_aggregation == "terminal" else _kernels.SUM_OVER_GRID
    comps, clamps, neg_cost = _kernels.trajectory_batch(
        gi.adoption, gi.efficiency, gi.efficiency_clamped, gi.market_token_value,
        gi.social_signal, gi.subsidy, np.ascontiguousarray(waste),
        p_max, base_cost, carbon, tv_override,
        params.alpha_financial, params.alpha_social, params.unit_cost,
        params.env_alpha, params.qualifying_fraction, how,
    )
    bad = ~np.isfinite(comps[:, 0])
    if bad.any():
        i = int(np.argmax(bad))
        raise TrialError(int(indices[i]), DomainError("non-finite net benefit"))
    return _Batch(np.asarray(indices, dtype=np.int64), comps, sampled, clamps + sample_clamps, neg_cost)


def _outcomes(scenario: MonteCarloScenario, batch: _Batch) -> list[TrialOutcome]:
    names = list(scenario.stochastic_inputs)
    out = []
    for row, idx in enumerate(batch.indices):
        c = batch.components[row]
        out.append(
            TrialOutcome(
                trial_index=int(idx),
                net_benefit=float(c[_kernels.NET_BENEFIT]),
                recycling_volume=float(c[_kernels.RECYCLING_VOLUME]),
                token_revenue=float(c[_kernels.TOKEN_REVENUE]),
                op_cost=float(c[_kernels.OP_COST]),
                env_benefit=float(c[_kernels.ENV_BENEFIT]),
                sampled_values={k: float(batch.sampled[row, j]) for j, k in enumerate(names)},
                clamp_count=int(batch.clamps[row]),
                negative_cost_points=int(batch.neg_cost[row]),
            )
        )
    return out


def run_trial(scenario: MonteCarloScenario, stream: RandomStream) -> TrialOutcome:
    try:
        batch = _simulate(scenario, stream.master_seed, [stream.stream_index])
    except DomainError as e:
        raise TrialError(stream.stream_index, e) from e
    return _outcomes(scenario, batch)[0]


def _simulate_chunk(args):
    scenario, master_seed, lo, hi = args
    return _simulate(scenario, master_seed, range(lo, hi))


def default_workers() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def _chunks(n_trials: int, workers: int) -> list[tuple[int, int]]:
    n_chunks = min(n_trials, workers)
    bounds = [round(i * n_trials / n_chunks) for i in range(n_chunks + 1)]
    return [(bounds[i], bounds[i + 1]) for i in range(n_chunks)]


def simulate_batch(scenario: MonteCarloScenario, n_trials: int, master_seed: int, workers: int = 1) -> _Batch:
    if n_trials < 1:
        raise UsageError(f"n_trials must be >= 1, got {n_trials}")
    if workers < 1:
        raise UsageError(f"workers must be >= 1, got {workers}")
    derive_stream(master_seed, 0)  # validates the seed before forking
    chunks = _chunks(n_trials, workers)
    if len(chunks) == 1:
        parts = [_simulate(scenario, master_seed, range(n_trials))]
    else:
        _kernels.warmup()
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=len(chunks), mp_context=ctx) as pool:
            parts = list(pool.map(_simulate_chunk, [(scenario, master_seed, lo, hi) for lo, hi in chunks]))
    order = np.argsort(np.concatenate([p.indices for p in parts]), kind="stable")
    return _Batch(
        indices=np.concatenate([p.indices for p in parts])[order],
        components=np.concatenate([p.components for p in parts])[order],
        sampled=np.concatenate([p.sampled for p in parts])[order],
        clamps=np.concatenate([p.clamps for p in parts])[order],
        neg_cost=np.concatenate([p.neg_cost for p in parts])[order],
    )


def run_monte_carlo(
    scenario: MonteCarloScenario, n_trials: int, master_seed: int, workers: int = 1
) -> tuple[list[TrialOutcome], MonteCarloSummary]:
    batch = simulate_batch(scenario, n_trials, master_seed, workers)
    outcomes = _outcomes(scenario, batch)
    return outcomes, summarize(outcomes, scenario.histogram_bins)
