from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy.signal import find_peaks

from temppnet.config import GaitFeatureConfig
from temppnet.errors import DataValidationError
from temppnet.evidence.hash_utils import fingerprint_payload
from temppnet.sensors.records import PatientRecord, WalkingTest

METHOD_VERSION = "0.1.0"

FEATURE_NAMES: tuple[str, ...] = (
    "u_x", "u_y", "u_z",
    "sigma_x", "sigma_y", "sigma_z",
    "u_v", "sigma_v",
    "alpha_x", "alpha_y", "alpha_z",
    "beta_x", "beta_y", "beta_z",
    "alpha_d", "beta_d",
    "V_x", "V_y", "V_z", "V_v",
)  # fmt: skip


@dataclass(frozen=True, slots=True)
class FeatureVector:
    u_x: float
    u_y: float
    u_z: float
    sigma_x: float
    sigma_y: float
    sigma_z: float
    u_v: float
    sigma_v: float
    alpha_x: float
    alpha_y: float
    alpha_z: float
    beta_x: float
    beta_y: float
    beta_z: float
    alpha_d: float
    beta_d: float
    V_x: float
    V_y: float
    V_z: float
    V_v: float
    # Axes whose stride variability fell back to 0 for lack of peaks.
    low_peak_axes: tuple[str, ...] = field(default=())

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=np.float64)

    def to_row(self) -> dict[str, Any]:
        row = {name: getattr(self, name) for name in FEATURE_NAMES}
        row["low_peak_axes"] = ";".join(self.low_peak_axes)
        return row


@dataclass(frozen=True, slots=True)
class StrideSummary:
    """Peak-based stride statistics; ``speed_proxy`` is mean magnitude times cadence,
    not a calibrated walking speed."""

    peak_count: int
    stride_interval_mean_s: float
    stride_interval_std_s: float
    cadence_hz: float
    speed_proxy: float

    def to_dict(self) -> dict[str, float | int]:
        return asdict(self)


def fingerprint_feature_config(config: GaitFeatureConfig) -> str:
    payload: dict[str, Any] = {**config.to_dict(), "method_version": METHOD_VERSION}
    return fingerprint_payload(payload)


def detect_peaks(series: np.ndarray, min_separation: int = 3) -> list[int]:
    """Strict local maxima above the series mean, at least ``min_separation`` samples apart.

    Conflicting candidates are resolved greedily: larger value first, ties to the lower index.
    """

    x = np.asarray(series, dtype=np.float64).reshape(-1)
    if x.size < 3:
        return []
    threshold = float(x.mean())
    candidates, _ = find_peaks(x)
    strict = [
        int(i) for i in candidates if x[i] > x[i - 1] and x[i] > x[i + 1] and x[i] > threshold
    ]
    accepted: list[int] = []
    for i in sorted(strict, key=lambda j: (-x[j], j)):
        if all(abs(i - j) >= min_separation for j in accepted):
            accepted.append(i)
    return sorted(accepted)


def stride_time_variability(peak_times: np.ndarray) -> float | None:
    """Sample std (divisor Q - 2) of consecutive peak intervals; None for fewer than 3 peaks."""

    t = np.asarray(peak_times, dtype=np.float64)
    if t.size < 3:
        return None
    return float(np.std(np.diff(t), ddof=1))


def _sample_std(values: np.ndarray, axis: int = 0) -> np.ndarray:
    return np.std(values, axis=axis, ddof=1)


def extract_features(
    samples: np.ndarray, rate_hz: int = 10, min_separation: int = 3
) -> FeatureVector:
    v = np.asarray(samples, dtype=np.float64).reshape(-1, 3)
    if v.shape[0] < 3:
        raise DataValidationError(f"feature extraction needs >= 3 samples, got {v.shape[0]}")

    u = v.mean(axis=0)
    sigma = _sample_std(v)
    mag = np.linalg.norm(v, axis=1)
    d = np.diff(v, axis=0)
    alpha = d.mean(axis=0)
    beta = _sample_std(d)
    d_mag = np.linalg.norm(d, axis=1)

    variability: dict[str, float] = {}
    low: list[str] = []
    for axis_name, series in (("x", v[:, 0]), ("y", v[:, 1]), ("z", v[:, 2]), ("v", mag)):
        peaks = np.array(detect_peaks(series, min_separation), dtype=np.float64)
        value = stride_time_variability(peaks / rate_hz)
        if value is None:
            low.append(axis_name)
            value = 0.0
        variability[axis_name] = value

    return FeatureVector(
        u_x=float(u[0]),
        u_y=float(u[1]),
        u_z=float(u[2]),
        sigma_x=float(sigma[0]),
        sigma_y=float(sigma[1]),
        sigma_z=float(sigma[2]),
        u_v=float(mag.mean()),
        sigma_v=float(_sample_std(mag)),
        alpha_x=float(alpha[0]),
        alpha_y=float(alpha[1]),
        alpha_z=float(alpha[2]),
        beta_x=float(beta[0]),
        beta_y=float(beta[1]),
        beta_z=float(beta[2]),
        alpha_d=float(d_mag.mean()),
        beta_d=float(_sample_std(d_mag)),
        V_x=variability["x"],
        V_y=variability["y"],
        V_z=variability["z"],
        V_v=variability["v"],
        low_peak_axes=tuple(low),
    )


def walking_samples(test: WalkingTest, include_rest: bool = False) -> np.ndarray:
    parts = list(test.segments if include_rest else test.segments[:2])
    return np.concatenate(parts, axis=0)


def extract_test_features(
    test: WalkingTest, config: GaitFeatureConfig | None = None
) -> FeatureVector:
    """Features over outbound + return (and rest when configured), at the test's own rate."""

    cfg = config or GaitFeatureConfig()
    return extract_features(
        walking_samples(test, cfg.include_rest), test.rate_hz, cfg.min_peak_separation
    )


def stride_interval_summary(
    samples: np.ndarray, rate_hz: int = 10, min_separation: int = 3
) -> StrideSummary:
    v = np.asarray(samples, dtype=np.float64).reshape(-1, 3)
    mag = np.linalg.norm(v, axis=1)
    peaks = np.array(detect_peaks(mag, min_separation), dtype=np.float64) / rate_hz
    if peaks.size < 2:
        return StrideSummary(int(peaks.size), 0.0, 0.0, 0.0, 0.0)
    intervals = np.diff(peaks)
    mean_interval = float(intervals.mean())
    cadence = 1.0 / mean_interval
    return StrideSummary(
        peak_count=int(peaks.size),
        stride_interval_mean_s=mean_interval,
        stride_interval_std_s=float(intervals.std(ddof=1)) if intervals.size > 1 else 0.0,
        cadence_hz=cadence,
        speed_proxy=float(mag.mean()) * cadence,
    )


def patient_feature_matrix(
    records: list[PatientRecord], config: GaitFeatureConfig | None = None
) -> np.ndarray:
    """One row per patient: the mean of its per-test feature vectors."""

    return np.stack(
        [
            np.mean([extract_test_features(t, config).as_array() for t in r.tests], axis=0)
            for r in records
        ]
    )
