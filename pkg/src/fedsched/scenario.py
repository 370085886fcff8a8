"""Scenario setup: experiment configuration, UE population synthesis, channel draws.

All randomness flows from a single master seed through named substreams
(see :func:`substream`), so populations, per-round channel realizations and
per-window evolution are reproducible and independent of evaluation order.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

# UE hardware constants used when a profile does not override them.
DEFAULT_CYCLES_PER_BIT = 20.0
DEFAULT_CPU_FREQ_HZ = 2.0e9
DEFAULT_CAPACITANCE = 2.0e-28
DEFAULT_DISTANCE_RANGE_M = (5.0, 50.0)

# Distance-dependent path loss in dB: PATH_LOSS_OFFSET_DB + 20 log10(d / 1 m).
PATH_LOSS_OFFSET_DB = 99.3

_U64 = (1 << 64) - 1


class ConfigError(ValueError):
    """Raised for invalid configuration; the message names the offending field."""


def substream(seed: int, label: str, *indices: int) -> np.random.Generator:
    """Derive an independent named random stream from the master seed.

    The stream is keyed by (seed, label, *indices); streams with different
    keys are statistically independent, and the same key always reproduces
    the same sequence regardless of how many other streams were consumed.
    """
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 8], "little") for i in (0, 8)]
    entropy = [int(seed) & _U64, *words, *(int(i) & _U64 for i in indices)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass
class DataParams:
    """Synthetic dataset and surrogate-training settings.

    Per-UE data sizes follow a Zipf-like law scaled so they sum to exactly
    ``total_data_bits``; bits map to sample counts through ``bits_per_sample``.
    """

    feature_dim: int = 16
    classes: int = 10
    zipf_exponent: float = 1.0
    non_iid_alpha: float = 0.5
    total_data_bits: int = 376_320_000
    bits_per_sample: int = 6272
    cluster_radius: float = 3.0
    learning_rate: float = 0.1

    def validate(self) -> None:
        if self.feature_dim < 1:
            raise ConfigError("data_params.feature_dim must be >= 1")
        if self.classes < 2:
            raise ConfigError("data_params.classes must be >= 2")
        if self.zipf_exponent < 0:
            raise ConfigError("data_params.zipf_exponent must be >= 0")
        if self.non_iid_alpha <= 0:
            raise ConfigError("data_params.non_iid_alpha must be > 0")
        if self.total_data_bits < 1:
            raise ConfigError("data_params.total_data_bits must be >= 1")
        if self.bits_per_sample < 1:
            raise ConfigError("data_params.bits_per_sample must be >= 1")
        if self.cluster_radius <= 0:
            raise ConfigError("data_params.cluster_radius must be > 0")
        if self.learning_rate <= 0:
            raise ConfigError("data_params.learning_rate must be > 0")


@dataclass
class ScenarioConfig:
    """Full experiment description; defaults mirror the reference setup."""

    K: int = 100
    N: int = 25
    T_rounds: int = 100
    total_bandwidth_hz: float = 10e6
    noise_w: float = 1e-8
    rate_threshold_bps: float = 5e5
    model_size_bits: int = 692_800
    zeta: float = 5.0
    beta: float = 0.7
    kappa: int = 1
    measure: str = "sl"
    window_len: int | None = None
    seed: int = 0
    de_params: "DeParams" = field(default_factory=lambda: _default_de_params())
    data_params: DataParams = field(default_factory=DataParams)

    def __post_init__(self) -> None:
        if self.window_len is None:
            self.window_len = self.K

    def validate(self) -> None:
        if self.K < 1:
            raise ConfigError("K must be >= 1")
        if not 1 <= self.N <= self.K:
            raise ConfigError("N must satisfy 1 <= N <= K")
        if self.T_rounds < 0:
            raise ConfigError("T_rounds must be >= 0")
        if self.total_bandwidth_hz <= 0:
            raise ConfigError("total_bandwidth_hz must be > 0")
        if self.noise_w <= 0:
            raise ConfigError("noise_w must be > 0")
        if self.rate_threshold_bps <= 0:
            raise ConfigError("rate_threshold_bps must be > 0")
        if self.model_size_bits < 1:
            raise ConfigError("model_size_bits must be >= 1")
        if self.zeta < 0:
            raise ConfigError("zeta must be >= 0")
        if not 0 < self.beta < 1:
            raise ConfigError("beta must lie in (0, 1)")
        if self.kappa < 1:
            raise ConfigError("kappa must be >= 1")
        if self.measure not in ("staleness", "loss", "sl"):
            raise ConfigError("measure must be one of 'staleness', 'loss', 'sl'")
        if not self.N <= self.window_len <= self.K:
            raise ConfigError("window_len must satisfy N <= window_len <= K")
        if not 0 <= int(self.seed) <= _U64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        self.de_params.validate()
        self.data_params.validate()

    @property
    def subchannel_bandwidth_hz(self) -> float:
        return self.total_bandwidth_hz / self.N

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        from .de import DeParams  # late import to keep module load order flat

        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config field: {sorted(unknown)[0]!r}")
        kwargs = dict(raw)
        if "de_params" in kwargs and kwargs["de_params"] is not None:
            kwargs["de_params"] = _nested(DeParams, kwargs["de_params"], "de_params")
        if "data_params" in kwargs and kwargs["data_params"] is not None:
            kwargs["data_params"] = _nested(DataParams, kwargs["data_params"], "data_params")
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path: str) -> "ScenarioConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
        return cls.from_dict(raw)


def _default_de_params():
    from .de import DeParams

    return DeParams()


def _nested(cls, raw, name):
    if not isinstance(raw, dict):
        raise ConfigError(f"{name} must be a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config field: {name}.{sorted(unknown)[0]}")
    return cls(**raw)


@dataclass(frozen=True)
class UeProfile:
    """Static per-UE attributes fixed for the whole experiment."""

    ue_id: int
    data_size_bits: int
    distance_m: float
    cycles_per_bit: float = DEFAULT_CYCLES_PER_BIT
    cpu_freq_hz: float = DEFAULT_CPU_FREQ_HZ
    capacitance: float = DEFAULT_CAPACITANCE


@dataclass(frozen=True)
class ChannelRealization:
    """One round's channel state: per-UE power gains plus shared link constants."""

    gains: np.ndarray
    subchannel_bandwidth_hz: float
    noise_w: float
    rate_threshold_bps: float


def zipf_sizes(total_bits: int, k: int, exponent: float) -> np.ndarray:
    """Integer sizes proportional to 1/rank**exponent, summing to total_bits exactly.

    Shares are floored and the leftover bits are assigned to the largest share,
    so the returned vector is non-increasing.
    """
    ranks = np.arange(1, k + 1, dtype=float)
    weights = ranks**-exponent
    shares = weights / weights.sum()
    sizes = np.floor(total_bits * shares).astype(np.int64)
    sizes[0] += total_bits - sizes.sum()
    if sizes.min() < 1:
        raise ConfigError(
            "data_params.total_data_bits too small: some UE would receive zero bits"
        )
    return sizes


def generate_population(
    config: ScenarioConfig,
    rng: np.random.Generator | None = None,
    *,
    cycles_per_bit: float = DEFAULT_CYCLES_PER_BIT,
    cpu_freq_hz: float = DEFAULT_CPU_FREQ_HZ,
    capacitance: float = DEFAULT_CAPACITANCE,
    distance_range_m: tuple[float, float] = DEFAULT_DISTANCE_RANGE_M,
) -> list[UeProfile]:
    """Synthesize the UE population for a scenario.

    Data sizes follow :func:`zipf_sizes` and are assigned to UE ids by a random
    permutation; distances are uniform over ``distance_range_m``. With no
    explicit ``rng`` the draw is keyed by (config.seed, "population").
    """
    config.validate()
    if rng is None:
        rng = substream(config.seed, "population")
    lo, hi = distance_range_m
    if not 0 < lo <= hi:
        raise ConfigError("distance_range_m must satisfy 0 < low <= high")
    sizes = zipf_sizes(config.data_params.total_data_bits, config.K, config.data_params.zipf_exponent)
    data_bits = np.empty(config.K, dtype=np.int64)
    data_bits[rng.permutation(config.K)] = sizes
    distances = rng.uniform(lo, hi, size=config.K)
    return [
        UeProfile(
            ue_id=k,
            data_size_bits=int(data_bits[k]),
            distance_m=float(distances[k]),
            cycles_per_bit=cycles_per_bit,
            cpu_freq_hz=cpu_freq_hz,
            capacitance=capacitance,
        )
        for k in range(config.K)
    ]


def path_gain_linear(distance_m) -> np.ndarray:
    """Linear power gain of the deterministic path-loss component."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance_m must be > 0")
    loss_db = PATH_LOSS_OFFSET_DB + 20.0 * np.log10(d)
    return 10.0 ** (-loss_db / 10.0)


def draw_channels(
    config: ScenarioConfig,
    profiles: list[UeProfile],
    round_index: int,
    rng: np.random.Generator | None = None,
) -> ChannelRealization:
    """Draw one round's channel gains: Rayleigh power fading times path loss.

    The power fade is exponential with unit mean. With no explicit ``rng`` the
    draw is keyed by (config.seed, "channels", round_index), so a given
    (seed, round) pair always yields the same realization.
    """
    if round_index < 0:
        raise ValueError("round_index must be >= 0")
    if len(profiles) != config.K:
        raise ValueError("profiles length does not match config.K")
    if rng is None:
        rng = substream(config.seed, "channels", round_index)
    distances = np.array([p.distance_m for p in profiles], dtype=float)
    fade = rng.standard_exponential(config.K)
    gains = fade * path_gain_linear(distances)
    return ChannelRealization(
        gains=gains,
        subchannel_bandwidth_hz=config.subchannel_bandwidth_hz,
        noise_w=config.noise_w,
        rate_threshold_bps=config.rate_threshold_bps,
    )
