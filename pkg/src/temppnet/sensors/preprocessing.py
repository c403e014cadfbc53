from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from temppnet.errors import DataValidationError
from temppnet.sensors.quaternion import (
    UNIT_TOLERANCE,
    quaternion_to_rotation,
    rotation_matrices,
    sample_random_quaternion,
)
from temppnet.sensors.records import PatientRecord, WalkingTest

logger = logging.getLogger(__name__)

SEGMENT_COLUMNS = 300
NATIVE_RATE_HZ = 100
MODEL_RATE_HZ = 10
SURVEY_MAX = 24
# Scores strictly above 24 * 4 / 27 (about 3) count as depressed.
SURVEY_THRESHOLD = 3


@dataclass(frozen=True, slots=True)
class GlobalFrameResult:
    samples: np.ndarray
    dropped: int


def to_global_frame(accel_local: np.ndarray, quaternions: np.ndarray) -> GlobalFrameResult:
    """Rotate each local-frame sample by the rotation of its own quaternion.

    Samples whose quaternion is missing (any NaN) or further than 1e-3 from unit norm
    are dropped; the rest are normalized before use.
    """

    accel = np.asarray(accel_local, dtype=np.float64).reshape(-1, 3)
    quats = np.asarray(quaternions, dtype=np.float64).reshape(-1, 4)
    if accel.shape[0] != quats.shape[0]:
        raise DataValidationError(
            f"to_global_frame: {accel.shape[0]} samples but {quats.shape[0]} quaternions"
        )
    norms = np.linalg.norm(quats, axis=1)
    keep = np.all(np.isfinite(quats), axis=1) & (np.abs(norms - 1.0) <= UNIT_TOLERANCE)
    dropped = int(accel.shape[0] - keep.sum())
    if dropped:
        logger.warning("Dropped %d samples with missing or non-unit quaternions", dropped)
    unit = quats[keep] / norms[keep, None]
    rotated = np.einsum("lij,lj->li", rotation_matrices(unit), accel[keep])
    return GlobalFrameResult(samples=rotated, dropped=dropped)


def resample(
    segment: np.ndarray, from_hz: int = NATIVE_RATE_HZ, to_hz: int = MODEL_RATE_HZ
) -> np.ndarray:
    """Block mean over ``from_hz // to_hz`` samples; a trailing partial block is averaged as-is."""

    if to_hz <= 0 or from_hz <= 0 or from_hz % to_hz:
        raise DataValidationError(f"resample: {from_hz} Hz is not divisible by {to_hz} Hz")
    seg = np.asarray(segment, dtype=np.float64).reshape(-1, 3)
    factor = from_hz // to_hz
    if seg.shape[0] == 0 or factor == 1:
        return seg.copy()
    starts = np.arange(0, seg.shape[0], factor)
    sums = np.add.reduceat(seg, starts, axis=0)
    counts = np.diff(np.append(starts, seg.shape[0]))
    return sums / counts[:, None]


def shape_segment(segment: np.ndarray, columns: int = SEGMENT_COLUMNS) -> np.ndarray:
    """(L, 3) samples to a (3, columns) matrix: right zero-padding or truncation."""

    seg = np.asarray(segment, dtype=np.float64).reshape(-1, 3)
    out = np.zeros((3, columns), dtype=np.float64)
    n = min(seg.shape[0], columns)
    out[:, :n] = seg[:n].T
    return out


def prepare_test(test: WalkingTest, rate_hz: int = MODEL_RATE_HZ) -> np.ndarray:
    """Resample and shape all three segments into a (3, 3, 300) array."""

    if rate_hz > test.rate_hz:
        raise DataValidationError(f"cannot upsample a {test.rate_hz} Hz test to {rate_hz} Hz")
    return np.stack([shape_segment(resample(seg, test.rate_hz, rate_hz)) for seg in test.segments])


def rotate_test(test: WalkingTest, rotation: np.ndarray) -> WalkingTest:
    r = np.asarray(rotation, dtype=np.float64)
    return test.with_segments(tuple(seg @ r.T for seg in test.segments))


def augment_rotation(
    test: WalkingTest, rng: np.random.Generator, *, quaternion: np.ndarray | None = None
) -> WalkingTest:
    """Apply one random rotation to every sample of all three segments (training only)."""

    q = sample_random_quaternion(rng) if quaternion is None else quaternion
    return rotate_test(test, quaternion_to_rotation(q))


def label_from_survey(score: int) -> int:
    if isinstance(score, bool) or int(score) != score:
        raise DataValidationError(f"survey score must be an integer, got {score!r}")
    if not 0 <= score <= SURVEY_MAX:
        raise DataValidationError(f"survey score must lie in [0, {SURVEY_MAX}], got {score}")
    return 1 if score > SURVEY_THRESHOLD else 0


def apply_observation_window(record: PatientRecord, window_days: float) -> PatientRecord:
    """Keep the tests within ``window_days`` before the last test and re-base to day 0."""

    if window_days <= 0:
        raise DataValidationError(f"window_days must be positive, got {window_days}")
    end = record.span_days
    kept = [t for t in record.tests if end - t.test_time_days <= window_days]
    origin = kept[0].test_time_days
    return record.with_tests(tuple(t.with_time(t.test_time_days - origin) for t in kept))


def rotate_prepared(prepared: np.ndarray, rotation: np.ndarray) -> np.ndarray:
    """Rotate a (3, 3, columns) prepared test.

    Block-mean resampling and zero padding are linear per axis, so this equals
    preparing the rotated raw test.
    """

    return np.einsum("ij,sjl->sil", np.asarray(rotation, dtype=np.float64), prepared)
