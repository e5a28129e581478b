"""Command-line entry point: ``tokencycle run|compare|sensitivity|sweep|calibrate|validate``.

Exit codes: 0 success, 2 missing input, 3 invalid config or usage,
4 I/O failure, 5 runtime trial failure, 6 calibration failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .comparison import (
    DEFAULT_BETA_BOUNDS,
    DEFAULT_SD_BOUNDS,
    SubsidyComparativeConfig,
    TokenizedComparativeConfig,
    calibrate_tokenized,
    paired_histogram,
    run_comparison,
)
from .errors import CalibrationError, ConfigError, TokencycleError, UsageError
from .model import aggregate, evaluate_trajectory
from .montecarlo import default_workers, run_monte_carlo
from .report import (
    HISTOGRAM_HEADER,
    PAIRED_HEADER,
    SWEEP_HEADER,
    TRAJECTORY_HEADER,
    format_summary,
    trajectory_rows,
    trial_rows,
    trials_header,
    utc_now,
    write_csv,
    write_json,
    write_manifest,
)
from .scenario import ScenarioFile, SweepSpec, comparative_to_obj, load_scenario
from .sensitivity import SWEEPABLE, sensitivity_table, sweep
from .stochastic import derive_stream, gbm_path

log = logging.getLogger("tokencycle")

DEFAULT_TRIALS = 10_000
DEFAULT_SEED = 0


def _simulation(sf: ScenarioFile, path) -> object:
    if sf.kind in ("deterministic", "monte-carlo"):
        return sf.body
    if sf.kind == "sweep":
        return sf.body.scenario
    raise UsageError(f"{path}: expected a deterministic, monte-carlo or sweep scenario, got kind {sf.kind!r}")


def cmd_run(args) -> int:
    started = utc_now()
    sf = load_scenario(args.scenario)
    out = Path(args.out)
    if sf.kind == "deterministic":
        sc = sf.body
        path = None
        if sc.waste_mode == "gbm":
            path = gbm_path(sc.params.w_0, sc.params.waste_drift, sc.params.waste_volatility, sc.grid,
                            derive_stream(args.seed, 0))
        points = evaluate_trajectory(sc.params, sc.grid, sc.waste_mode, path)
        value = aggregate(points, sc.horizon_aggregation)
        summary = {
            "kind": "deterministic",
            "horizon_aggregation": sc.horizon_aggregation,
            "net_benefit": value,
            "points": len(points),
            "clamp_events": sum(len(p.clamp_flags) for p in points),
        }
        files = [write_csv(out / "trajectory.csv", TRAJECTORY_HEADER, trajectory_rows(points)),
                 write_json(out / "summary.json", summary)]
        print(f"deterministic net benefit ({sc.horizon_aggregation}): {value:.6g}")
        write_manifest(out, "run", [args.scenario], files, started, master_seed=args.seed, n_trials=1, workers=1)
        return 0
    if sf.kind != "monte-carlo":
        raise UsageError(f"run expects a deterministic or monte-carlo scenario, got kind {sf.kind!r}")
    sc = sf.body
    outcomes, summary = run_monte_carlo(sc, args.trials, args.seed, args.workers)
    names = list(sc.stochastic_inputs)
    doc = {"kind": "monte-carlo", "master_seed": args.seed, "n_trials": args.trials,
           "horizon_aggregation": sc.horizon_aggregation, "summary": summary.to_dict()}
    files = [
        write_csv(out / "trials.csv", trials_header(names), trial_rows(outcomes, names)),
        write_json(out / "summary.json", doc),
        write_csv(out / "histogram.csv", HISTOGRAM_HEADER, summary.histogram),
    ]
    print(format_summary(summary))
    write_manifest(out, "run", [args.scenario], files, started,
                   master_seed=args.seed, n_trials=args.trials, workers=args.workers)
    return 0


def cmd_compare(args) -> int:
    started = utc_now()
    tok = load_scenario(args.tokenized)
    sub = load_scenario(args.subsidy)
    if not isinstance(tok.body, TokenizedComparativeConfig):
        raise ConfigError("model", f"{args.tokenized}: expected a tokenized comparison scenario")
    if not isinstance(sub.body, SubsidyComparativeConfig):
        raise ConfigError("model", f"{args.subsidy}: expected a subsidy comparison scenario")
    report, paired = run_comparison(tok.body, sub.body, args.trials, args.seed)
    out = Path(args.out)
    a = [o.net_benefit for o in paired.tokenized]
    b = [o.net_benefit for o in paired.subsidy]
    doc = {"kind": "comparison", "master_seed": args.seed, "n_trials": args.trials, **report.to_dict()}
    files = [
        write_csv(out / "paired.csv", PAIRED_HEADER, ([r[k] for k in PAIRED_HEADER] for r in paired.rows())),
        write_json(out / "comparison.json", doc),
        write_csv(out / "histogram.csv", ["bin_lo", "bin_hi", "tokenized", "subsidy"], paired_histogram(a, b)),
    ]
    print(format_summary(report.tokenized, "tokenized net benefit"))
    print(format_summary(report.subsidy, "subsidy net benefit"))
    print(f"mean delta (tokenized - subsidy): {report.mean_delta:.6g}")
    print(f"P(tokenized > subsidy): {report.probability_tokenized_exceeds_subsidy:.4f}")
    write_manifest(out, "compare", [args.tokenized, args.subsidy], files, started,
                   master_seed=args.seed, n_trials=args.trials, workers=1)
    return 0


def cmd_sensitivity(args) -> int:
    started = utc_now()
    sf = load_scenario(args.scenario)
    sc = _simulation(sf, args.scenario)
    t = sc.grid.t_end if args.at_time is None else args.at_time
    if t < 0:
        raise UsageError(f"--at-time must be >= 0, got {t}")
    rows = sensitivity_table(t, sc.params)
    out = Path(args.out)
    header = ["parameter", "mode", "analytic", "finite_difference", "relative_error"]
    files = [write_csv(out / "sensitivity.csv", header, ([r.row()[k] for k in header] for r in rows))]
    print(f"net-benefit sensitivities at t={t:g}")
    print(f"  {'parameter':<22}{'mode':<10}{'analytic':>16}{'finite diff':>16}{'rel err':>12}")
    for r in rows:
        print(f"  {r.parameter:<22}{r.mode:<10}{r.analytic:>16.8g}{r.finite_difference:>16.8g}"
              f"{r.relative_error:>12.2e}")
    write_manifest(out, "sensitivity", [args.scenario], files, started, at_time=t)
    return 0


def _parse_values(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--values must be a comma-separated list of numbers, got {text!r}") from None
    if not values:
        raise UsageError("--values is empty")
    return values


def cmd_sweep(args) -> int:
    started = utc_now()
    sf = load_scenario(args.scenario)
    sc = _simulation(sf, args.scenario)
    parameter = args.param
    values = _parse_values(args.values) if args.values else None
    if isinstance(sf.body, SweepSpec):
        parameter = parameter or sf.body.parameter
        values = values or list(sf.body.values)
    if parameter is None or values is None:
        raise UsageError("sweep needs --param and --values (or a sweep scenario that provides them)")
    if parameter not in SWEEPABLE:
        raise UsageError(f"unknown sweep parameter {parameter!r}; valid names are {', '.join(SWEEPABLE)}")
    table = sweep(sc, parameter, values, args.trials, args.seed, args.workers)
    out = Path(args.out)
    files = [write_csv(out / "sweep.csv", SWEEP_HEADER,
                       ([v, s.mean, s.sample_std, s.p5, s.p95] for v, s in table))]
    print(f"sweep over {parameter}")
    print(f"  {'value':>14}{'mean':>16}{'std':>16}{'p5':>16}{'p95':>16}")
    for v, s in table:
        print(f"  {v:>14.6g}{s.mean:>16.8g}{s.sample_std:>16.8g}{s.p5:>16.8g}{s.p95:>16.8g}")
    write_manifest(out, "sweep", [args.scenario], files, started, master_seed=args.seed,
                   n_trials=args.trials, workers=args.workers, parameter=parameter, values=values)
    return 0


def cmd_calibrate(args) -> int:
    started = utc_now()
    inputs = []
    if args.config:
        sf = load_scenario(args.config)
        if not isinstance(sf.body, TokenizedComparativeConfig):
            raise ConfigError("model", f"{args.config}: expected a tokenized comparison scenario")
        base = sf.body
        inputs.append(args.config)
    else:
        base = TokenizedComparativeConfig()
    sd_bounds = DEFAULT_SD_BOUNDS[base.multiplier_mode]
    doc = {
        "schema_version": "1.0",
        "kind": "calibration",
        "metadata": {
            "description": "Tokenized comparative model: (token_sd, elasticity) fitted to a target mean net benefit.",
            "provenance": "derived: grid-then-refine search on common random numbers; see trace",
        },
        "target_mean": args.target,
        "n_trials": args.trials,
        "seed": args.seed,
        "search": {"token_sd_bounds": list(sd_bounds), "elasticity_bounds": list(DEFAULT_BETA_BOUNDS),
                   "tolerance": args.tolerance},
        "base_config": comparative_to_obj(base),
    }
    out = Path(args.out)
    try:
        result = calibrate_tokenized(base, args.target, args.trials, args.seed, tolerance=args.tolerance)
    except CalibrationError as e:
        doc.update(status="unreachable", best_residual=e.best_residual,
                   best={k: v for k, v in e.best.items() if k != "trace"}, trace=e.best.get("trace", []))
        files = [write_json(out / "comparative.calibration", doc)]
        write_manifest(out, "calibrate", inputs, files, started, master_seed=args.seed, n_trials=args.trials)
        raise
    doc.update(
        status="ok",
        token_sd=result.token_sd,
        elasticity=result.elasticity,
        achieved_mean=result.achieved_mean,
        residual=result.residual,
        calibrated_config=comparative_to_obj(result.config),
        trace=result.trace,
    )
    files = [write_json(out / "comparative.calibration", doc)]
    print(f"token_sd={result.token_sd!r} elasticity={result.elasticity!r}")
    print(f"achieved mean {result.achieved_mean:.6g} vs target {args.target:.6g} (residual {result.residual:.6g})")
    write_manifest(out, "calibrate", inputs, files, started, master_seed=args.seed, n_trials=args.trials)
    return 0


def cmd_validate(args) -> int:
    sf = load_scenario(args.scenario)
    extra = f" ({sf.model})" if sf.model else ""
    print(f"ok: {args.scenario} is a valid {sf.kind}{extra} scenario (schema {sf.schema_version})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tokencycle", description="Tokenized recycling incentive simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trials=True):
        if trials:
            p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--out", default="out")

    p = sub.add_parser("run", help="run a deterministic or Monte Carlo scenario")
    p.add_argument("scenario")
    common(p)
    p.add_argument("--workers", type=int, default=default_workers())
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="tokenized versus subsidy comparison")
    p.add_argument("tokenized")
    p.add_argument("subsidy")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sensitivity", help="analytic partials against finite differences")
    p.add_argument("scenario")
    p.add_argument("--at-time", type=float, default=None, help="evaluation time (default: end of grid)")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over one parameter")
    p.add_argument("scenario")
    p.add_argument("--param", default=None, help=f"one of: {', '.join(SWEEPABLE)}")
    p.add_argument("--values", default=None, help="comma-separated values")
    common(p)
    p.add_argument("--workers", type=int, default=default_workers())
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", help="fit the tokenized model's token sd and elasticity to a target mean")
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--config", default=None, help="tokenized comparison scenario to start from")
    p.add_argument("--tolerance", type=float, default=0.01, help="allowed |residual| / |target|")
    common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except TokencycleError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
