from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from temppnet.errors import DataValidationError

SEGMENT_NAMES = ("outbound", "return", "rest")


def _as_segment(values: object, *, where: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.size == 0:
        arr = arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise DataValidationError(f"{where}: expected (L, 3) samples, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataValidationError(f"{where}: samples must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, slots=True, eq=False)
class WalkingTest:
    """One walking test: outbound, return and rest segments of global-frame acceleration."""

    test_time_days: float
    segments: tuple[np.ndarray, np.ndarray, np.ndarray]
    rate_hz: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.test_time_days) or self.test_time_days < 0:
            raise DataValidationError(
                f"test_time_days must be finite and >= 0, got {self.test_time_days}"
            )
        if len(self.segments) != 3:
            raise DataValidationError(
                f"a walking test has exactly 3 segments, got {len(self.segments)}"
            )
        if int(self.rate_hz) != self.rate_hz or self.rate_hz <= 0:
            raise DataValidationError(f"rate_hz must be a positive integer, got {self.rate_hz}")
        segments = tuple(
            _as_segment(seg, where=f"segment {name!r}")
            for name, seg in zip(SEGMENT_NAMES, self.segments, strict=True)
        )
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "test_time_days", float(self.test_time_days))
        object.__setattr__(self, "rate_hz", int(self.rate_hz))

    @property
    def outbound(self) -> np.ndarray:
        return self.segments[0]

    @property
    def return_walk(self) -> np.ndarray:
        return self.segments[1]

    @property
    def rest(self) -> np.ndarray:
        return self.segments[2]

    @property
    def lengths(self) -> tuple[int, int, int]:
        return tuple(int(s.shape[0]) for s in self.segments)  # type: ignore[return-value]

    def with_time(self, test_time_days: float) -> WalkingTest:
        return WalkingTest(test_time_days, self.segments, self.rate_hz)

    def with_segments(
        self, segments: tuple[np.ndarray, ...], rate_hz: int | None = None
    ) -> WalkingTest:
        return WalkingTest(
            self.test_time_days,
            tuple(segments),  # type: ignore[arg-type]
            self.rate_hz if rate_hz is None else rate_hz,
        )


@dataclass(frozen=True, slots=True, eq=False)
class PatientRecord:
    patient_id: str
    tests: tuple[WalkingTest, ...]
    label: int

    def __post_init__(self) -> None:
        if not self.patient_id:
            raise DataValidationError("patient_id must be a non-empty string")
        if self.label not in (0, 1):
            raise DataValidationError(f"{self.patient_id}: label must be 0 or 1, got {self.label}")
        tests = tuple(self.tests)
        if not tests:
            raise DataValidationError(f"{self.patient_id}: at least one walking test is required")
        times = [t.test_time_days for t in tests]
        if times[0] != 0.0:
            raise DataValidationError(f"{self.patient_id}: first test must be at day 0")
        if any(b <= a for a, b in zip(times, times[1:], strict=False)):
            raise DataValidationError(f"{self.patient_id}: test times must be strictly increasing")
        object.__setattr__(self, "tests", tests)
        object.__setattr__(self, "label", int(self.label))

    @property
    def timepoints(self) -> np.ndarray:
        return np.array([t.test_time_days for t in self.tests], dtype=np.float64)

    @property
    def span_days(self) -> float:
        return self.tests[-1].test_time_days

    def with_tests(self, tests: tuple[WalkingTest, ...]) -> PatientRecord:
        return PatientRecord(self.patient_id, tests, self.label)
