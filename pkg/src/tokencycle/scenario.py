"""Scenario files: parsing, validation and canonical serialization.

A scenario file is a JSON object::

    {
      "schema_version": "1.0",
      "kind": "deterministic" | "monte-carlo" | "comparison" | "sweep",
      "metadata": {...free-form...},
      ...kind-specific fields...
    }

``deterministic``, ``monte-carlo`` and ``sweep`` files carry ``params``,
``grid``, ``waste_mode`` and ``horizon_aggregation``; ``monte-carlo`` and
``sweep`` add ``stochastic_inputs`` and ``histogram_bins``; ``sweep`` adds
``parameter`` and ``values``. ``comparison`` files carry ``model``
(``tokenized`` or ``subsidy``) and ``config``.

Schedules are either a number (constant) or
``{"breakpoints": [[t, v], ...], "interpolation": "piecewise-constant"}``.

The canonical form writes every field explicitly with sorted keys, so
``dumps(load(dumps(x)))`` is byte-identical to ``dumps(x)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .comparison import SubsidyComparativeConfig, TokenizedComparativeConfig
from .errors import ConfigError, TokencycleError
from .model import ScenarioParams, Schedule, TimeGrid
from .montecarlo import MonteCarloScenario
from .sensitivity import SWEEPABLE
from .stochastic import DistributionSpec

SCHEMA_VERSIONS = ("1.0",)
KINDS = ("deterministic", "monte-carlo", "comparison", "sweep")
TOP_LEVEL = ("schema_version", "kind", "metadata")

_SIM_FIELDS = ("params", "grid", "waste_mode", "horizon_aggregation")
_MC_FIELDS = _SIM_FIELDS + ("stochastic_inputs", "histogram_bins")
_KIND_FIELDS = {
    "deterministic": _SIM_FIELDS,
    "monte-carlo": _MC_FIELDS,
    "sweep": _MC_FIELDS + ("parameter", "values"),
    "comparison": ("model", "config"),
}


class MissingInputError(TokencycleError):
    exit_code = 2


@dataclass(frozen=True)
class SweepSpec:
    scenario: MonteCarloScenario
    parameter: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class ScenarioFile:
    schema_version: str
    kind: str
    body: Any
    metadata: dict = field(default_factory=dict)

    @property
    def model(self) -> str | None:
        if isinstance(self.body, TokenizedComparativeConfig):
            return "tokenized"
        if isinstance(self.body, SubsidyComparativeConfig):
            return "subsidy"
        return None


# --- parsing -----------------------------------------------------------------


def _prefixed(prefix: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError as e:
        path = f"{prefix}.{e.path}" if e.path else prefix
        raise ConfigError(path, e.message) from None
    except TypeError as e:
        raise ConfigError(prefix, str(e)) from None


def _require_object(path: str, value) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(path, f"must be an object, got {type(value).__name__}")
    return value


def _number(path: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(path, f"must be a finite number, got {value!r}")
    return float(value)


def _parse_schedule(path: str, value) -> Schedule:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return Schedule.constant(_number(path, value))
    obj = _require_object(path, value)
    unknown = set(obj) - {"breakpoints", "interpolation"}
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown field")
    bps = obj.get("breakpoints")
    if not isinstance(bps, list):
        raise ConfigError(f"{path}.breakpoints", "must be a list of [time, value] pairs")
    pairs = []
    for i, bp in enumerate(bps):
        if not isinstance(bp, (list, tuple)) or len(bp) != 2:
            raise ConfigError(f"{path}.breakpoints[{i}]", "must be a [time, value] pair")
        pairs.append((_number(f"{path}.breakpoints[{i}]", bp[0]), _number(f"{path}.breakpoints[{i}]", bp[1])))
    return _prefixed(path, Schedule, tuple(pairs), obj.get("interpolation", "piecewise-constant"))


_PARAM_FIELDS = {f.name for f in fields(ScenarioParams)}


def _parse_params(value) -> ScenarioParams:
    obj = _require_object("params", value)
    kwargs = {}
    for key, v in obj.items():
        if key not in _PARAM_FIELDS:
            raise ConfigError(f"params.{key}", "unknown parameter")
        if key.endswith("_schedule"):
            kwargs[key] = _parse_schedule(f"params.{key}", v)
        else:
            kwargs[key] = v
    return ScenarioParams(**kwargs)


def _parse_grid(value) -> TimeGrid:
    obj = _require_object("grid", value)
    unknown = set(obj) - {"t_start", "dt", "n_steps"}
    if unknown:
        raise ConfigError(f"grid.{sorted(unknown)[0]}", "unknown field")
    kwargs = {k: _number(f"grid.{k}", v) for k, v in obj.items()}
    if "n_steps" in kwargs:
        if kwargs["n_steps"] != int(kwargs["n_steps"]):
            raise ConfigError("grid.n_steps", f"must be an integer, got {obj['n_steps']!r}")
        kwargs["n_steps"] = int(kwargs["n_steps"])
    return _prefixed("grid", TimeGrid, **kwargs)


def _parse_simulation(doc: dict, kind: str) -> MonteCarloScenario:
    if "params" not in doc:
        raise ConfigError("params", "missing")
    if "grid" not in doc:
        raise ConfigError("grid", "missing")
    inputs = {}
    if kind != "deterministic":
        raw = _require_object("stochastic_inputs", doc.get("stochastic_inputs", {}))
        for name, spec in raw.items():
            inputs[name] = DistributionSpec.from_dict(spec, f"stochastic_inputs.{name}")
    return MonteCarloScenario(
        params=_parse_params(doc["params"]),
        grid=_parse_grid(doc["grid"]),
        waste_mode=doc.get("waste_mode", "linear"),
        stochastic_inputs=inputs,
        horizon_aggregation=doc.get("horizon_aggregation", "terminal"),
        histogram_bins=doc.get("histogram_bins", 50),
    )


def _parse_comparison(doc: dict):
    model = doc.get("model")
    config = _require_object("config", doc.get("config", {}))
    if model == "subsidy":
        allowed = {f.name for f in fields(SubsidyComparativeConfig)}
        cls = SubsidyComparativeConfig
    elif model == "tokenized":
        allowed = {f.name for f in fields(TokenizedComparativeConfig)}
        cls = TokenizedComparativeConfig
    else:
        raise ConfigError("model", f"must be 'tokenized' or 'subsidy', got {model!r}")
    kwargs = {}
    for key, v in config.items():
        if key not in allowed:
            raise ConfigError(f"config.{key}", "unknown field")
        if key == "token_value_dist":
            kwargs[key] = None if v is None else DistributionSpec.from_dict(v, "config.token_value_dist")
        elif key == "multiplier_mode":
            kwargs[key] = v
        else:
            kwargs[key] = _number(f"config.{key}", v)
    return _prefixed("config", cls, **kwargs)


def parse_scenario(doc) -> ScenarioFile:
    doc = _require_object("", doc)
    version = doc.get("schema_version")
    if version not in SCHEMA_VERSIONS:
        raise ConfigError("schema_version", f"unrecognised schema version {version!r}; supported: {SCHEMA_VERSIONS}")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ConfigError("kind", f"must be one of {KINDS}, got {kind!r}")
    allowed = set(TOP_LEVEL) | set(_KIND_FIELDS[kind])
    for key in doc:
        if key not in allowed:
            raise ConfigError(key, f"unknown field for kind {kind!r}")
    metadata = _require_object("metadata", doc.get("metadata", {}))
    if kind == "comparison":
        body = _parse_comparison(doc)
    else:
        body = _parse_simulation(doc, kind)
        if kind == "sweep":
            parameter = doc.get("parameter")
            if parameter not in SWEEPABLE:
                raise ConfigError("parameter", f"must be one of {SWEEPABLE}, got {parameter!r}")
            values = doc.get("values")
            if not isinstance(values, list) or not values:
                raise ConfigError("values", "must be a non-empty list of numbers")
            body = SweepSpec(body, parameter, tuple(_number(f"values[{i}]", v) for i, v in enumerate(values)))
    return ScenarioFile(version, kind, body, metadata)


def load_scenario(path) -> ScenarioFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingInputError(f"scenario file not found: {path}") from None
    except OSError as e:
        raise MissingInputError(f"cannot read scenario file {path}: {e}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("", f"{path}: not valid JSON ({e})") from None
    return parse_scenario(doc)


# --- serialization -------------------------------------------------------------


def schedule_to_obj(s: Schedule) -> dict:
    return {"breakpoints": [[t, v] for t, v in s.breakpoints], "interpolation": s.interpolation}


def params_to_obj(p: ScenarioParams) -> dict:
    out = {}
    for f in fields(ScenarioParams):
        v = getattr(p, f.name)
        out[f.name] = schedule_to_obj(v) if isinstance(v, Schedule) else v
    return out


def _simulation_to_obj(sc: MonteCarloScenario, kind: str) -> dict:
    out = {
        "params": params_to_obj(sc.params),
        "grid": {"t_start": sc.grid.t_start, "dt": sc.grid.dt, "n_steps": int(sc.grid.n_steps)},
        "waste_mode": sc.waste_mode,
        "horizon_aggregation": sc.horizon_aggregation,
    }
    if kind != "deterministic":
        out["stochastic_inputs"] = {k: v.to_dict() for k, v in sc.stochastic_inputs.items()}
        out["histogram_bins"] = int(sc.histogram_bins)
    return out


def comparative_to_obj(cfg) -> dict:
    out = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, DistributionSpec):
            v = v.to_dict()
        out[f.name] = v
    return out


def scenario_to_obj(sf: ScenarioFile) -> dict:
    doc = {"schema_version": sf.schema_version, "kind": sf.kind, "metadata": sf.metadata}
    if sf.kind == "comparison":
        doc["model"] = sf.model
        doc["config"] = comparative_to_obj(sf.body)
    elif sf.kind == "sweep":
        doc.update(_simulation_to_obj(sf.body.scenario, sf.kind))
        doc["parameter"] = sf.body.parameter
        doc["values"] = list(sf.body.values)
    else:
        doc.update(_simulation_to_obj(sf.body, sf.kind))
    return doc


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def dumps_scenario(sf: ScenarioFile) -> str:
    return dumps_canonical(scenario_to_obj(sf))
