"""Distributions, reproducible random streams and the GBM waste process.

Streams
-------
A :class:`RandomStream` is identified by ``(master_seed, stream_index)``.
Each named *channel* of a stream ("token_value", "waste", ...) is an
independent Philox4x64-10 generator keyed by the 128-bit integer::

    key = stream_index << 96 | crc32(channel) << 64 | master_seed

with the counter starting at zero. Philox is counter-based, so the key fully
determines the sequence on every platform, and distinct keys give
independent sequences. Drawing from one channel never shifts another, which
is what makes common-random-number comparisons line up.

Normal and lognormal variates are produced as transforms of one standard
normal draw (``mean + sd * z`` and ``exp(log_mean + log_sd * z)``).
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError
from .model import TimeGrid

KINDS = ("constant", "normal", "lognormal", "beta", "scaled-beta")

_REQUIRED = {
    "constant": ("value",),
    "normal": ("mean", "sd"),
    "lognormal": ("log_mean", "log_sd"),
    "beta": ("a", "b"),
    "scaled-beta": ("a", "b", "lo", "hi"),
}

MAX_SEED = 2**64
MAX_STREAM_INDEX = 2**32
DEFAULT_CHANNEL = "main"


@dataclass(frozen=True)
class DistributionSpec:
    kind: str
    value: float | None = None
    mean: float | None = None
    sd: float | None = None
    log_mean: float | None = None
    log_sd: float | None = None
    a: float | None = None
    b: float | None = None
    lo: float | None = None
    hi: float | None = None
    clamp: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError("kind", f"must be one of {KINDS}, got {self.kind!r}")
        required = _REQUIRED[self.kind]
        for name in ("value", "mean", "sd", "log_mean", "log_sd", "a", "b", "lo", "hi"):
            v = getattr(self, name)
            if name in required:
                if v is None:
                    raise ConfigError(name, f"required for kind {self.kind!r}")
                if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                    raise ConfigError(name, f"must be a finite number, got {v!r}")
                object.__setattr__(self, name, float(v))
            elif v is not None:
                raise ConfigError(name, f"not a parameter of kind {self.kind!r}")
        if self.kind == "normal" and self.sd < 0:
            raise ConfigError("sd", f"must be >= 0, got {self.sd!r}")
        if self.kind == "lognormal" and self.log_sd < 0:
            raise ConfigError("log_sd", f"must be >= 0, got {self.log_sd!r}")
        if self.kind in ("beta", "scaled-beta"):
            for name in ("a", "b"):
                if not getattr(self, name) > 0:
                    raise ConfigError(name, f"must be > 0, got {getattr(self, name)!r}")
        if self.kind == "scaled-beta" and not self.lo <= self.hi:
            raise ConfigError("hi", f"scaled-beta needs lo <= hi, got lo={self.lo!r} hi={self.hi!r}")
        if self.clamp is not None:
            lo, hi = self.clamp
            lo = -math.inf if lo is None else float(lo)
            hi = math.inf if hi is None else float(hi)
            if math.isnan(lo) or math.isnan(hi) or not lo <= hi:
                raise ConfigError("clamp", f"needs lo <= hi, got {self.clamp!r}")
            object.__setattr__(self, "clamp", (lo, hi))

    @classmethod
    def constant(cls, value: float) -> "DistributionSpec":
        return cls("constant", value=value)

    def natural_mean(self) -> float:
        """Mean of the unclamped distribution."""
        if self.kind == "constant":
            return self.value
        if self.kind == "normal":
            return self.mean
        if self.kind == "lognormal":
            return math.exp(self.log_mean + self.log_sd**2 / 2)
        beta_mean = self.a / (self.a + self.b)
        if self.kind == "beta":
            return beta_mean
        return self.lo + (self.hi - self.lo) * beta_mean

    def natural_sd(self) -> float:
        if self.kind == "constant":
            return 0.0
        if self.kind == "normal":
            return self.sd
        if self.kind == "lognormal":
            s2 = self.log_sd**2
            return math.sqrt(math.expm1(s2)) * math.exp(self.log_mean + s2 / 2)
        a, b = self.a, self.b
        sd = math.sqrt(a * b / ((a + b) ** 2 * (a + b + 1)))
        return sd if self.kind == "beta" else sd * (self.hi - self.lo)

    def with_mean(self, mean: float) -> "DistributionSpec":
        """Same shape and spread, relocated to a new natural-space mean.

        Lognormals keep their natural sd; scaled betas shift their support.
        """
        if self.kind == "constant":
            return _replace(self, value=mean)
        if self.kind == "normal":
            return _replace(self, mean=mean)
        if self.kind == "lognormal":
            moved = lognormal_from_natural_moments(mean, self.natural_sd())
            return _replace(self, log_mean=moved.log_mean, log_sd=moved.log_sd)
        if self.kind == "scaled-beta":
            shift = mean - self.natural_mean()
            return _replace(self, lo=self.lo + shift, hi=self.hi + shift)
        raise ConfigError("kind", "a plain beta distribution cannot be relocated; use scaled-beta")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for name in _REQUIRED[self.kind]:
            d[name] = getattr(self, name)
        if self.clamp is not None:
            d["clamp"] = [None if math.isinf(x) else x for x in self.clamp]
        return d

    @classmethod
    def from_dict(cls, d: dict, path: str = "") -> "DistributionSpec":
        """Parse the tagged-object form. Lognormals may be given in natural
        space as ``{"kind": "lognormal", "mean": m, "sd": s}``."""
        prefix = f"{path}." if path else ""
        if not isinstance(d, dict):
            raise ConfigError(path, "distribution must be an object")
        d = dict(d)
        kind = d.pop("kind", None)
        if kind is None:
            raise ConfigError(f"{prefix}kind", "missing")
        clamp = d.pop("clamp", None)
        if clamp is not None and (not isinstance(clamp, (list, tuple)) or len(clamp) != 2):
            raise ConfigError(f"{prefix}clamp", "must be a two-element list [lo, hi]")
        try:
            if kind == "lognormal" and ("mean" in d or "sd" in d):
                if "log_mean" in d or "log_sd" in d:
                    raise ConfigError("mean", "give either natural (mean, sd) or log (log_mean, log_sd), not both")
                nat = lognormal_from_natural_moments(d.pop("mean", None), d.pop("sd", 0.0))
                d["log_mean"], d["log_sd"] = nat.log_mean, nat.log_sd
            allowed = set(_REQUIRED.get(kind, ()))
            for key in d:
                if key not in allowed:
                    raise ConfigError(key, f"unknown field for kind {kind!r}")
            return cls(kind, clamp=tuple(clamp) if clamp is not None else None, **d)
        except ConfigError as e:
            raise ConfigError(f"{prefix}{e.path}", e.message) from None


def _replace(spec: DistributionSpec, **changes) -> DistributionSpec:
    d = {name: getattr(spec, name) for name in _REQUIRED[spec.kind]}
    d.update(changes)
    return DistributionSpec(spec.kind, clamp=spec.clamp, **d)


def lognormal_from_natural_moments(natural_mean: float, natural_sd: float) -> DistributionSpec:
    if natural_mean is None or not natural_mean > 0 or not math.isfinite(natural_mean):
        raise ConfigError("mean", f"lognormal natural mean must be > 0, got {natural_mean!r}")
    if natural_sd is None or not natural_sd >= 0 or not math.isfinite(natural_sd):
        raise ConfigError("sd", f"lognormal natural sd must be >= 0, got {natural_sd!r}")
    s2 = math.log1p((natural_sd / natural_mean) ** 2)
    return DistributionSpec("lognormal", log_mean=math.log(natural_mean) - s2 / 2, log_sd=math.sqrt(s2))


# --- streams -----------------------------------------------------------------


def channel_id(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


@dataclass
class RandomStream:
    """Per-trial source of randomness. Owned by one worker at a time."""

    master_seed: int
    stream_index: int
    _generators: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.master_seed, bool) or not isinstance(self.master_seed, (int, np.integer)):
            raise ConfigError("seed", f"must be an integer, got {self.master_seed!r}")
        if not 0 <= self.master_seed < MAX_SEED:
            raise ConfigError("seed", f"must lie in [0, 2**64), got {self.master_seed!r}")
        if not 0 <= self.stream_index < MAX_STREAM_INDEX:
            raise ConfigError("stream_index", f"must lie in [0, 2**32), got {self.stream_index!r}")
        self.master_seed = int(self.master_seed)
        self.stream_index = int(self.stream_index)

    def key(self, channel: str = DEFAULT_CHANNEL) -> int:
        return (self.stream_index << 96) | (channel_id(channel) << 64) | self.master_seed

    def generator(self, channel: str = DEFAULT_CHANNEL) -> np.random.Generator:
        gen = self._generators.get(channel)
        if gen is None:
            gen = np.random.Generator(np.random.Philox(key=self.key(channel)))
            self._generators[channel] = gen
        return gen


def derive_stream(master_seed: int, trial_index: int) -> RandomStream:
    if trial_index < 0:
        raise ConfigError("trial_index", f"must be >= 0, got {trial_index!r}")
    return RandomStream(master_seed, trial_index)


# --- sampling ----------------------------------------------------------------


def _apply_clamp(spec: DistributionSpec, x: float) -> tuple[float, bool]:
    if spec.clamp is not None:
        lo, hi = spec.clamp
        if x < lo:
            return lo, True
        if x > hi:
            return hi, True
    return x, False


def from_standard_normal(spec: DistributionSpec, z: float) -> tuple[float, bool]:
    """Map a standard normal draw onto a normal or lognormal spec (then clamp)."""
    if spec.kind == "normal":
        return _apply_clamp(spec, spec.mean + spec.sd * z)
    if spec.kind == "lognormal":
        return _apply_clamp(spec, math.exp(spec.log_mean + spec.log_sd * z))
    raise ConfigError("kind", f"{spec.kind!r} is not a transform of a standard normal")


def draw(spec: DistributionSpec, rng: np.random.Generator) -> tuple[float, bool]:
    """One variate and whether the clamp changed it. Constants consume no randomness."""
    kind = spec.kind
    if kind in ("normal", "lognormal"):
        return from_standard_normal(spec, float(rng.standard_normal()))
    if kind == "constant":
        x = spec.value
    elif kind == "beta":
        x = float(rng.beta(spec.a, spec.b))
    else:
        x = spec.lo + (spec.hi - spec.lo) * float(rng.beta(spec.a, spec.b))
    return _apply_clamp(spec, x)


def sample(spec: DistributionSpec, stream: RandomStream, channel: str = DEFAULT_CHANNEL) -> float:
    return draw(spec, stream.generator(channel))[0]


def gbm_step_coefficients(drift: float, volatility: float, dt: float) -> tuple[float, float]:
    """Per-step log drift and log volatility of the exact GBM solution."""
    return (drift - 0.5 * volatility * volatility) * dt, volatility * math.sqrt(dt)


def gbm_path(
    w0: float,
    drift: float,
    volatility: float,
    grid: TimeGrid,
    stream: RandomStream,
    channel: str = "waste",
) -> np.ndarray:
    """Waste path on ``grid`` stepping ``W <- W * exp((nu - xi^2/2) dt + xi sqrt(dt) z)``."""
    if not w0 > 0:
        raise ConfigError("w_0", f"must be > 0, got {w0!r}")
    if not volatility >= 0:
        raise ConfigError("waste_volatility", f"must be >= 0, got {volatility!r}")
    z = stream.generator(channel).standard_normal(grid.n_steps)
    step_drift, step_vol = gbm_step_coefficients(drift, volatility, grid.dt)
    return _kernels.gbm_paths(float(w0), step_drift, step_vol, z.reshape(1, -1))[0]
