"""Regenerate the reference scenario files in ``scenarios/`` (canonical form)."""

from pathlib import Path

from tokencycle.comparison import SubsidyComparativeConfig, TokenizedComparativeConfig
from tokencycle.model import ScenarioParams, Schedule, TimeGrid
from tokencycle.montecarlo import MonteCarloScenario
from tokencycle.scenario import ScenarioFile, SweepSpec, dumps_scenario
from tokencycle.stochastic import DistributionSpec, lognormal_from_natural_moments

OUT = Path(__file__).resolve().parent.parent / "scenarios"

HEADLINE_PARAMS = ScenarioParams(
    p_max=0.5, adoption_rate=0.3, alpha_financial=0.6, alpha_social=0.4,
    eta_0=0.4, eta_growth=0.02, w_0=10000.0, waste_drift=0.03, waste_volatility=0.02,
    base_cost=4000.0, unit_cost=1.2, env_alpha=0.5, carbon_credit_price=1.5,
    subsidy_schedule=Schedule.constant(1500.0), social_signal_schedule=Schedule.constant(1.0),
)
HEADLINE_GRID = TimeGrid(0.0, 1.0, 10)
HEADLINE_INPUTS = {
    "token_value": lognormal_from_natural_moments(1.0, 0.08),
    "participation_base": DistributionSpec("scaled-beta", a=1.0, b=1.2, lo=0.22, hi=1.0),
    "base_cost": DistributionSpec("normal", mean=4000.0, sd=80.0),
    "carbon_credit_price": DistributionSpec("normal", mean=1.5, sd=0.075),
}


def headline() -> ScenarioFile:
    sc = MonteCarloScenario(HEADLINE_PARAMS, HEADLINE_GRID, "gbm", HEADLINE_INPUTS, "terminal")
    meta = {
        "description": "Ten-period municipal programme with GBM waste growth; terminal net benefit.",
        "provenance": "DERIVED: reconstructed. The source statistics publish only the outcome "
        "distribution (mean, spread, min, max), not the inputs; these parameters were chosen so "
        "that 10,000 trials land inside the reported min/max envelope with a positive 5th percentile.",
    }
    return ScenarioFile("1.0", "monte-carlo", sc, meta)


def deterministic() -> ScenarioFile:
    sc = MonteCarloScenario(HEADLINE_PARAMS, HEADLINE_GRID, "linear", {}, "terminal")
    meta = {"description": "Headline parameters on the linear waste path, no randomness.",
            "provenance": "illustrative"}
    return ScenarioFile("1.0", "deterministic", sc, meta)


def sweep() -> ScenarioFile:
    sc = MonteCarloScenario(HEADLINE_PARAMS, HEADLINE_GRID, "gbm", HEADLINE_INPUTS, "terminal")
    meta = {"description": "Headline scenario swept over the carbon-credit price.",
            "provenance": "illustrative"}
    return ScenarioFile("1.0", "sweep", SweepSpec(sc, "carbon_credit_price", (0.0, 1.5, 3.0, 4.5)), meta)


def subsidy() -> ScenarioFile:
    meta = {"description": "Fixed-reward subsidy programme: participation 0.5, volume 1000, reward 10/unit, "
                           "operating cost normal(50000, 1000).",
            "provenance": "stated parameters"}
    return ScenarioFile("1.0", "comparison", SubsidyComparativeConfig(), meta)


def tokenized_degenerate() -> ScenarioFile:
    cfg = TokenizedComparativeConfig(mean_multiplier=1.0)
    meta = {"description": "Tokenized model with a constant token value of 15 and fixed participation; "
                           "mean net benefit -40000 in expectation.",
            "provenance": "boundary case for calibration"}
    return ScenarioFile("1.0", "comparison", cfg, meta)


def tokenized_equal() -> ScenarioFile:
    # Token reward equal to the subsidy reward and no carbon credit: both models coincide.
    cfg = TokenizedComparativeConfig(base_token_value=10.0, mean_multiplier=1.0, carbon_credit_per_unit=0.0)
    meta = {"description": "Tokenized model built to coincide with subsidy.scenario trial by trial.",
            "provenance": "equivalence check"}
    return ScenarioFile("1.0", "comparison", cfg, meta)


def tokenized_base() -> ScenarioFile:
    cfg = TokenizedComparativeConfig(multiplier_mode="log-location")
    meta = {"description": "Tokenized model before calibration (token sd and elasticity at zero).",
            "provenance": "stated parameters; token multiplier read as a log-space location"}
    return ScenarioFile("1.0", "comparison", cfg, meta)


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    for name, fn in [("headline", headline), ("deterministic", deterministic), ("sweep_carbon", sweep),
                     ("subsidy", subsidy), ("tokenized_degenerate", tokenized_degenerate),
                     ("tokenized_equal", tokenized_equal), ("tokenized_uncalibrated", tokenized_base)]:
        (OUT / f"{name}.scenario").write_text(dumps_scenario(fn()), encoding="utf-8")
        print("wrote", name)


def tokenized_calibrated() -> ScenarioFile:
    """Tokenized model carrying the committed calibration (run `tokencycle calibrate` first)."""
    import json

    from tokencycle.scenario import parse_scenario

    cal = json.loads((OUT / "comparative.calibration").read_text(encoding="utf-8"))
    doc = {"schema_version": "1.0", "kind": "comparison", "model": "tokenized", "config": cal["calibrated_config"],
           "metadata": {"description": "Tokenized model with calibrated token sd and participation elasticity.",
                        "provenance": f"DERIVED: comparative.calibration (target {cal['target_mean']!r}, "
                                      f"seed {cal['seed']}, {cal['n_trials']} trials)"}}
    return parse_scenario(doc)


if __name__ == "__main__" and (OUT / "comparative.calibration").exists():
    (OUT / "tokenized.scenario").write_text(dumps_scenario(tokenized_calibrated()), encoding="utf-8")
    print("wrote tokenized")
