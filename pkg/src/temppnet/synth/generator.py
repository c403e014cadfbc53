"""Synthetic walking-test corpora with planted, class-dependent gait trends.

Each patient walks with a personal gait profile. A severity trajectory over the
observation window slows the step frequency and shrinks the stride amplitude.
Both classes start from the same severity band, so a single test does not reveal
the label: depressed patients follow rising trajectories, non-depressed ones
falling or flat.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np

from temppnet.config import GeneratorConfig
from temppnet.errors import DataValidationError
from temppnet.evidence.hash_utils import sha256_file
from temppnet.evidence.stable_json import write_json, write_jsonl
from temppnet.sensors.corpus import record_rows
from temppnet.sensors.quaternion import quaternion_to_rotation, sample_random_quaternion
from temppnet.sensors.records import SEGMENT_NAMES, PatientRecord, WalkingTest

logger = logging.getLogger(__name__)

GENERATOR_VERSION = "0.1.0"
GRAVITY_G = 1.0
TRAJECTORY_KINDS = ("rise", "rise_with_dips", "fall", "flat_fluctuate")
DEPRESSED_KINDS = ("rise", "rise_with_dips")
NON_DEPRESSED_KINDS = ("fall", "flat_fluctuate")
CORPUS_NAME = "corpus.jsonl"
MANIFEST_SUFFIX = ".manifest.json"
START_BAND = (0.3, 0.6)
RISE_BAND = (0.3, 0.4)
FALL_BAND = (0.2, 0.3)


@dataclass(frozen=True, slots=True)
class GaitProfile:
    step_hz: float = 1.8
    stride_amplitude_g: float = 0.3
    bounce_amplitude_g: float = 0.25
    noise_g: float = 0.03
    # Fractional reduction at severity 1.
    frequency_drop: float = 0.5
    amplitude_drop: float = 0.4

    def __post_init__(self) -> None:
        if self.step_hz <= 0:
            raise DataValidationError(f"step_hz must be positive, got {self.step_hz}")
        if min(self.stride_amplitude_g, self.bounce_amplitude_g, self.noise_g) < 0:
            raise DataValidationError("amplitudes and noise must be >= 0")
        if not 0 < self.frequency_drop < 1 or not 0 <= self.amplitude_drop < 1:
            raise DataValidationError("frequency_drop must lie in (0, 1), amplitude_drop in [0, 1)")

    def step_frequency(self, severity: float) -> float:
        return self.step_hz * (1.0 - self.frequency_drop * severity)

    def amplitude_scale(self, severity: float) -> float:
        return 1.0 - self.amplitude_drop * severity

    def speed_proxy(self, severity: float) -> float:
        """Cadence times stride amplitude."""

        return self.step_frequency(severity) * self.stride_amplitude_g * self.amplitude_scale(
            severity
        )


@dataclass(frozen=True, slots=True)
class SeverityTrajectory:
    kind: str
    start: float
    end: float
    span_days: float = 14.0
    dip_depth: float = 0.0
    dip_period_days: float = 4.0
    noise: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in TRAJECTORY_KINDS:
            raise DataValidationError(
                f"Unknown trajectory kind {self.kind!r}; expected one of {TRAJECTORY_KINDS}"
            )
        if self.span_days <= 0 or self.dip_period_days <= 0:
            raise DataValidationError("span_days and dip_period_days must be positive")
        if self.kind in DEPRESSED_KINDS and self.end - self.dip_depth <= self.start:
            raise DataValidationError(f"{self.kind} must end above its start")
        if self.kind == "fall" and self.end >= self.start:
            raise DataValidationError("fall must end below its start")

    @property
    def depressed(self) -> bool:
        return self.kind in DEPRESSED_KINDS

    def __call__(self, t: float | np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        frac = np.clip(t / self.span_days, 0.0, 1.0)
        if self.kind == "flat_fluctuate":
            value = self.start + self.noise * np.sin(2.0 * np.pi * t / self.dip_period_days)
        else:
            value = self.start + (self.end - self.start) * frac
            if self.kind == "rise_with_dips":
                dips = np.sin(np.pi * t / self.dip_period_days) ** 2
                value = value - self.dip_depth * frac * dips
        return np.clip(value, 0.0, 1.0)


def sample_profile(rng: np.random.Generator) -> GaitProfile:
    """Per-patient gait whose spread overlaps the cadence change severity causes."""

    return GaitProfile(
        step_hz=float(rng.uniform(1.5, 2.1)),
        stride_amplitude_g=float(rng.uniform(0.2, 0.4)),
        bounce_amplitude_g=float(rng.uniform(0.15, 0.35)),
    )


def sample_trajectory(
    label: int, rng: np.random.Generator, span_days: float = 14.0
) -> SeverityTrajectory:
    """Both classes start inside ``START_BAND``; only the direction over the window differs.

    Depressed patients climb by ``RISE_BAND``; the others fall by ``FALL_BAND`` or
    fluctuate around their starting level.
    """

    start = float(rng.uniform(*START_BAND))
    period = float(rng.uniform(3, 6))
    if label == 1:
        kind = str(rng.choice(DEPRESSED_KINDS))
        end = start + float(rng.uniform(*RISE_BAND))
        dip = float(rng.uniform(0.05, 0.15)) if kind == "rise_with_dips" else 0.0
        return SeverityTrajectory(
            kind, start, end, span_days, dip_depth=dip, dip_period_days=period
        )
    kind = str(rng.choice(NON_DEPRESSED_KINDS))
    if kind == "fall":
        end = max(start - float(rng.uniform(*FALL_BAND)), 0.0)
        return SeverityTrajectory(kind, start, end, span_days)
    return SeverityTrajectory(kind, start, start, span_days, dip_period_days=period, noise=0.05)


def synthesize_walk(
    profile: GaitProfile,
    severity: float,
    rng: np.random.Generator,
    *,
    rate_hz: int,
    steps: int,
    direction: float = 1.0,
) -> np.ndarray:
    """(L, 3) global-frame walk: forward sway on x, lateral sway at half cadence on y,
    vertical bounce around gravity on z."""

    freq = profile.step_frequency(severity)
    scale = profile.amplitude_scale(severity)
    n = max(int(round(steps / freq * rate_hz)), 3)
    t = np.arange(n) / rate_hz
    phase = rng.uniform(0.0, 2.0 * np.pi)
    arg = 2.0 * np.pi * freq * t + phase
    samples = np.stack(
        [
            direction * profile.stride_amplitude_g * scale * np.sin(arg + np.pi / 2),
            0.5 * profile.stride_amplitude_g * scale * np.sin(arg / 2.0),
            GRAVITY_G + profile.bounce_amplitude_g * scale * np.sin(arg),
        ],
        axis=1,
    )
    return samples + rng.normal(0.0, profile.noise_g, samples.shape)


def synthesize_rest(
    profile: GaitProfile, rng: np.random.Generator, *, rate_hz: int, seconds: float
) -> np.ndarray:
    n = max(int(round(seconds * rate_hz)), 1)
    samples = np.zeros((n, 3))
    samples[:, 2] = GRAVITY_G
    return samples + rng.normal(0.0, 0.3 * profile.noise_g, samples.shape)


def generate_patient(
    label: int,
    profile: GaitProfile,
    trajectory: SeverityTrajectory,
    rng: np.random.Generator,
    *,
    patient_id: str = "P0000",
    config: GeneratorConfig | None = None,
) -> PatientRecord:
    """One patient with min_tests..max_tests tests drawn uniformly inside the window.

    Severity is read off the trajectory at each test's day within the window;
    the stored times are re-based so the first test sits at day 0.
    """

    cfg = config or GeneratorConfig()
    if trajectory.depressed != bool(label):
        raise DataValidationError(
            f"{patient_id}: {trajectory.kind} trajectory is inconsistent with label {label}"
        )
    n_tests = int(rng.integers(cfg.min_tests, cfg.max_tests + 1))
    while True:
        days = np.sort(rng.uniform(0.0, cfg.window_days, n_tests))
        if np.all(np.diff(days) > 0):
            break

    tests = []
    for day in days:
        severity = float(trajectory(day))
        segments = (
            synthesize_walk(
                profile, severity, rng, rate_hz=cfg.rate_hz, steps=cfg.steps_per_walk
            ),
            synthesize_walk(
                profile,
                severity,
                rng,
                rate_hz=cfg.rate_hz,
                steps=cfg.steps_per_walk,
                direction=-1.0,
            ),
            synthesize_rest(profile, rng, rate_hz=cfg.rate_hz, seconds=cfg.rest_seconds),
        )
        tests.append(WalkingTest(float(day - days[0]), segments, cfg.rate_hz))
    return PatientRecord(patient_id, tuple(tests), int(label))


def class_labels(config: GeneratorConfig, rng: np.random.Generator) -> np.ndarray:
    """round(n * balance) positives, clipped so both classes appear, in shuffled order."""

    n_pos = int(round(config.n_patients * config.balance))
    n_pos = min(max(n_pos, 1), config.n_patients - 1)
    labels = np.array([1] * n_pos + [0] * (config.n_patients - n_pos))
    return labels[rng.permutation(labels.size)]


def generate_records(config: GeneratorConfig) -> list[PatientRecord]:
    root = np.random.SeedSequence(config.seed)
    master_seq, *patient_seqs = root.spawn(config.n_patients + 1)
    labels = class_labels(config, np.random.default_rng(master_seq))
    width = max(4, len(str(config.n_patients)))
    records = []
    for index, (label, seq) in enumerate(zip(labels, patient_seqs, strict=True)):
        rng = np.random.default_rng(seq)
        records.append(
            generate_patient(
                int(label),
                sample_profile(rng),
                sample_trajectory(int(label), rng, config.window_days),
                rng,
                patient_id=f"P{index + 1:0{width}d}",
                config=config,
            )
        )
    return records


def quaternion_rows(record: PatientRecord, rng: np.random.Generator) -> list[dict[str, Any]]:
    """Corpus rows in a per-test random device frame with the matching quaternions."""

    rows = []
    for row, test in zip(record_rows(record), record.tests, strict=True):
        q = sample_random_quaternion(rng)
        rotation = quaternion_to_rotation(q)
        for name, segment in zip(SEGMENT_NAMES, test.segments, strict=True):
            row[name] = (segment @ rotation).tolist()
        row["quaternions"] = {
            name: [q.tolist()] * segment.shape[0]
            for name, segment in zip(SEGMENT_NAMES, test.segments, strict=True)
        }
        rows.append(row)
    return rows


@dataclass(frozen=True, slots=True)
class GeneratedCorpus:
    records: list[PatientRecord]
    corpus_path: Path
    manifest_path: Path


def generate_corpus(config: GeneratorConfig, out_path: str | Path) -> GeneratedCorpus:
    """Write the corpus JSONL and ``<name>.manifest.json`` with the generator settings."""

    records = generate_records(config)
    path = Path(out_path)
    rows: list[dict[str, Any]] = []
    frame_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0xF4A3]))
    for record in records:
        if config.with_quaternions:
            rows.extend(quaternion_rows(record, frame_rng))
        else:
            rows.extend(record_rows(record))
    write_jsonl(path, rows, make_parents=True)

    n_pos = sum(r.label for r in records)
    manifest = {
        "generator_version": GENERATOR_VERSION,
        "config": config.to_dict(),
        "profile_defaults": asdict(GaitProfile()),
        "n_patients": len(records),
        "n_depressed": n_pos,
        "n_non_depressed": len(records) - n_pos,
        "n_tests": sum(len(r.tests) for r in records),
        "corpus_file": path.name,
        "corpus_sha256": sha256_file(path),
    }
    manifest_path = write_json(path.with_name(path.name + MANIFEST_SUFFIX), manifest)
    logger.info("Generated %d patients (%d depressed) into %s", len(records), n_pos, path)
    return GeneratedCorpus(records=records, corpus_path=path, manifest_path=manifest_path)
