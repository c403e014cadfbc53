"""Configuration objects and the defaults < config file < flags resolution.

Every object is frozen; ``to_dict`` output is what gets written to
``resolved_config.json`` and embedded in checkpoints.
"""

from __future__ import annotations

import math
import os
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from temppnet.errors import DataValidationError
from temppnet.evidence.stable_json import read_json

ABLATIONS = ("none", "no_t0", "last_severity", "avg_severity")
DEFAULT_CHANNELS = (256, 512, 256, 128, 128)
DEFAULT_OUTPUT_ROOT = "runs"


def _env(name: str, default: str | None = None) -> str | None:
    value = os.environ.get(name)
    if value is None:
        return default
    value = value.strip()
    return value if value else default


def output_root() -> Path:
    return Path(_env("TEMPPNET_OUTPUT_ROOT", DEFAULT_OUTPUT_ROOT) or DEFAULT_OUTPUT_ROOT)


def validate_ablation(flag: str) -> str:
    if flag not in ABLATIONS:
        raise DataValidationError(
            f"Unknown ablation {flag!r}; expected one of: {', '.join(ABLATIONS)}"
        )
    return flag


@dataclass(frozen=True, slots=True)
class ModelConfig:
    channels: tuple[int, ...] = DEFAULT_CHANNELS
    kernel_size: int = 8
    segment_length: int = 300
    n_symptoms: int = 8
    n_trends_per_class: int = 5
    n_d: int = 64
    gamma: float = -1e-4
    horizon_days: float = 5.0
    window_days: float = 14.0
    lambda_s: float = 0.1
    lambda_t: float = 0.1
    init_scale: float = 0.1
    final_bn_scale: float = 0.05
    omega_min: float = 2.0 * math.pi / 28.0
    omega_max: float = 2.0 * math.pi / 0.5

    def __post_init__(self) -> None:
        if not self.channels or any(c <= 0 for c in self.channels):
            raise DataValidationError(f"channels must be positive, got {self.channels}")
        if self.kernel_size < 1:
            raise DataValidationError("kernel_size must be >= 1")
        if self.gamma >= 0:
            raise DataValidationError(f"gamma must be strictly negative, got {self.gamma}")
        if self.n_symptoms < 1 or self.n_trends_per_class < 1 or self.n_d < 1:
            raise DataValidationError("n_symptoms, n_trends_per_class and n_d must be >= 1")
        if self.horizon_days <= 0 or self.window_days <= 0:
            raise DataValidationError("horizon_days and window_days must be positive")
        if not 0 < self.omega_min <= self.omega_max:
            raise DataValidationError("omega range must satisfy 0 < omega_min <= omega_max")

    @property
    def n_e(self) -> int:
        return self.channels[-1]

    @property
    def n_trends(self) -> int:
        return 2 * self.n_trends_per_class

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["channels"] = list(self.channels)
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ModelConfig:
        values = dict(data)
        if "channels" in values:
            values["channels"] = tuple(int(c) for c in values["channels"])
        return cls(**_known(cls, values))


@dataclass(frozen=True, slots=True)
class TrainConfig:
    epochs: int = 50
    seed: int = 0
    ablation: str = "none"
    patience: int = 10
    split: tuple[float, float, float] = (0.6, 0.2, 0.2)
    batch_size: int = 32
    lr: float = 1e-3
    augment: bool = True
    rate_hz: int = 10

    def __post_init__(self) -> None:
        validate_ablation(self.ablation)
        if self.epochs < 0:
            raise DataValidationError("epochs must be >= 0")
        if self.batch_size < 1:
            raise DataValidationError("batch_size must be >= 1")
        if len(self.split) != 3 or any(s < 0 for s in self.split):
            raise DataValidationError(f"split must be three non-negative ratios, got {self.split}")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise DataValidationError(f"split ratios must sum to 1, got {self.split}")

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["split"] = list(self.split)
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> TrainConfig:
        values = dict(data)
        if "split" in values:
            values["split"] = tuple(float(s) for s in values["split"])
        return cls(**_known(cls, values))


@dataclass(frozen=True, slots=True)
class GaitFeatureConfig:
    min_peak_separation: int = 3
    include_rest: bool = False

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, slots=True)
class GeneratorConfig:
    n_patients: int = 200
    balance: float = 0.5
    seed: int = 0
    # Highest sweep rate and longest sweep window.
    rate_hz: int = 20
    window_days: float = 28.0
    min_tests: int = 3
    max_tests: int = 8
    steps_per_walk: int = 20
    rest_seconds: float = 30.0
    with_quaternions: bool = False

    def __post_init__(self) -> None:
        if self.n_patients < 2:
            raise DataValidationError("n_patients must be >= 2")
        if not 0.0 < self.balance < 1.0:
            raise DataValidationError("balance must lie strictly between 0 and 1")
        if not 1 <= self.min_tests <= self.max_tests:
            raise DataValidationError("tests per patient must satisfy 1 <= min_tests <= max_tests")
        if self.rate_hz < 1 or self.window_days <= 0:
            raise DataValidationError("rate_hz and window_days must be positive")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, slots=True)
class SuiteConfig:
    ablations: tuple[str, ...] = ABLATIONS
    window_weeks: tuple[int, ...] = (2, 4)
    rates_hz: tuple[int, ...] = (10, 20)
    runs: int = 1

    def __post_init__(self) -> None:
        for flag in self.ablations:
            validate_ablation(flag)
        if self.runs < 1:
            raise DataValidationError("runs must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "ablations": list(self.ablations),
            "window_weeks": list(self.window_weeks),
            "rates_hz": list(self.rates_hz),
            "runs": self.runs,
        }


@dataclass(frozen=True, slots=True)
class RunConfig:
    """Flat, fully resolved settings for one CLI invocation."""

    command: str
    data: str | None = None
    out: str | None = None
    config: str | None = None
    seed: int = 0
    epochs: int = 50
    patients: int = 200
    balance: float = 0.5
    window_days: float = 14.0
    rate_hz: int = 10
    corpus_window_days: float = 28.0
    corpus_rate_hz: int = 20
    ablation: str = "none"
    precision: float | None = None
    recall: float | None = None
    patient: str | None = None
    checkpoint: str | None = None
    channels: tuple[int, ...] = DEFAULT_CHANNELS
    runs: int = 1
    include_rest: bool = False
    with_quaternions: bool = False
    log_level: str | None = None
    log_file: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["channels"] = list(self.channels)
        return data

    def out_dir(self) -> Path:
        if self.out:
            return Path(self.out)
        return output_root() / self.command

    def model_config(self) -> ModelConfig:
        overrides = {
            k: v for k, v in self.extra.items() if k in {f.name for f in fields(ModelConfig)}
        }
        return ModelConfig.from_dict(
            {"channels": self.channels, "window_days": self.window_days, **overrides}
        )

    def train_config(self) -> TrainConfig:
        overrides = {
            k: v for k, v in self.extra.items() if k in {f.name for f in fields(TrainConfig)}
        }
        base = {
            "epochs": self.epochs,
            "seed": self.seed,
            "ablation": self.ablation,
            "rate_hz": self.rate_hz,
        }
        return TrainConfig.from_dict({**base, **overrides})

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(
            n_patients=self.patients,
            balance=self.balance,
            seed=self.seed,
            rate_hz=self.corpus_rate_hz,
            window_days=self.corpus_window_days,
            with_quaternions=self.with_quaternions,
        )


def _known(cls: type, values: Mapping[str, Any]) -> dict[str, Any]:
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - names)
    if unknown:
        raise DataValidationError(f"Unknown {cls.__name__} keys: {', '.join(unknown)}")
    return dict(values)


def parse_channels(text: str) -> tuple[int, ...]:
    try:
        channels = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise DataValidationError(
            f"--channels expects a comma list of integers, got {text!r}"
        ) from None
    if not channels:
        raise DataValidationError("--channels must name at least one width")
    return channels


def resolve_run_config(command: str, flags: Mapping[str, Any]) -> RunConfig:
    """Merge built-in defaults, the optional ``--config`` JSON file and explicit flags.

    ``flags`` holds only values the user actually passed (None means "not given").
    Keys in the file that are not RunConfig fields are kept in ``extra`` and feed the
    model and training configs.
    """

    run_fields = {f.name for f in fields(RunConfig)} - {"command", "extra"}
    merged: dict[str, Any] = {}
    extra: dict[str, Any] = {}

    config_path = flags.get("config")
    if config_path:
        path = Path(config_path)
        if not path.is_file():
            raise DataValidationError(f"Config file not found: {path}")
        try:
            file_values = read_json(path)
        except ValueError as exc:
            raise DataValidationError(f"Config file is not valid JSON: {path}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise DataValidationError(f"Config file must hold a flat JSON object: {path}")
        for key, value in file_values.items():
            if isinstance(value, dict):
                raise DataValidationError(f"Config key {key!r} must not be nested")
            if key in run_fields:
                merged[key] = value
            else:
                extra[key] = value

    for key, value in flags.items():
        if key in run_fields and value is not None:
            merged[key] = value

    if "channels" in merged:
        raw = merged["channels"]
        merged["channels"] = parse_channels(raw) if isinstance(raw, str) else tuple(raw)
    if "ablation" in merged:
        validate_ablation(str(merged["ablation"]))
    if "log_level" not in merged:
        merged["log_level"] = _env("TEMPPNET_LOG_LEVEL")

    return replace(RunConfig(command=command), **merged, extra=extra)
