"""Simulation engine for a tokenized recycling incentive model."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CalibrationError,
    ConfigError,
    DomainError,
    TokencycleError,
    TrialError,
    UsageError,
)
from .model import ScenarioParams, Schedule, TimeGrid, evaluate_trajectory  # noqa: E402
from .montecarlo import MonteCarloScenario, run_monte_carlo, summarize  # noqa: E402
from .stochastic import DistributionSpec, derive_stream, gbm_path, sample  # noqa: E402

__all__ = [
    "CalibrationError",
    "ConfigError",
    "DistributionSpec",
    "DomainError",
    "MonteCarloScenario",
    "ScenarioParams",
    "Schedule",
    "TimeGrid",
    "TokencycleError",
    "TrialError",
    "UsageError",
    "derive_stream",
    "evaluate_trajectory",
    "gbm_path",
    "run_monte_carlo",
    "sample",
    "summarize",
]
