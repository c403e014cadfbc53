from __future__ import annotations

import copy

import numpy as np

from temppnet.config import GeneratorConfig, ModelConfig
from temppnet.sensors.records import PatientRecord, WalkingTest
from temppnet.synth.generator import generate_records

# Five conv blocks keep the default patch count (5 per segment, 15 per test)
# while the encoder stays a few hundred parameters wide.
SMALL_CHANNELS: tuple[int, ...] = (4, 4, 4, 4, 4)

SMALL_MODEL_SETTINGS: dict = {
    "channels": SMALL_CHANNELS,
    "n_symptoms": 2,
    "n_trends_per_class": 1,
    "n_d": 4,
}

TINY_GENERATOR_SETTINGS: dict = {
    "n_patients": 6,
    "balance": 0.5,
    "seed": 7,
    "min_tests": 1,
    "max_tests": 3,
    "rate_hz": 10,
    "window_days": 14.0,
}


def small_model_config(**overrides) -> ModelConfig:
    """Return a small ModelConfig; keyword arguments override the shared settings."""

    values = copy.deepcopy(SMALL_MODEL_SETTINGS)
    values.update(overrides)
    return ModelConfig(**values)


def cosine_walk(n: int, freq_hz: float = 1.0, rate_hz: int = 10, offset: float = 0.0) -> np.ndarray:
    """(n, 3) samples; x is a cosine so peaks land on whole samples, z rides on gravity."""

    t = np.arange(n) / rate_hz
    wave = np.cos(2.0 * np.pi * freq_hz * t)
    return np.stack([offset + wave, 0.5 * wave, 1.0 + 0.25 * wave], axis=1)


def walking_test(
    t_days: float = 0.0, *, rate_hz: int = 10, length: int = 120, seed: int = 0
) -> WalkingTest:
    rng = np.random.default_rng(seed)
    segments = (
        cosine_walk(length, 1.6, rate_hz) + rng.normal(0.0, 0.05, (length, 3)),
        cosine_walk(length, 1.4, rate_hz) + rng.normal(0.0, 0.05, (length, 3)),
        np.tile([0.0, 0.0, 1.0], (length // 2, 1)) + rng.normal(0.0, 0.01, (length // 2, 3)),
    )
    return WalkingTest(t_days, segments, rate_hz)


def patient_record(
    patient_id: str = "P0001",
    label: int = 1,
    times: tuple[float, ...] = (0.0, 2.0, 5.0),
    *,
    seed: int = 0,
    rate_hz: int = 10,
) -> PatientRecord:
    tests = tuple(
        walking_test(t, rate_hz=rate_hz, seed=seed * 100 + i) for i, t in enumerate(times)
    )
    return PatientRecord(patient_id, tests, label)


def tiny_generator_config(**overrides) -> GeneratorConfig:
    values = copy.deepcopy(TINY_GENERATOR_SETTINGS)
    values.update(overrides)
    return GeneratorConfig(**values)


def tiny_corpus(**overrides) -> list[PatientRecord]:
    """A freshly generated synthetic corpus (both classes, up to three tests each)."""

    return generate_records(tiny_generator_config(**overrides))
