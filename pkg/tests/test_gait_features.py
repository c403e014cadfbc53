from __future__ import annotations

import math
from itertools import pairwise

import numpy as np
import pytest

from temppnet.config import GaitFeatureConfig
from temppnet.errors import DataValidationError
from temppnet.methods.gait_features import (
    FEATURE_NAMES,
    detect_peaks,
    extract_features,
    extract_test_features,
    fingerprint_feature_config,
    patient_feature_matrix,
    stride_interval_summary,
    stride_time_variability,
)
from temppnet.sensors.preprocessing import augment_rotation
from temppnet.sensors.records import WalkingTest
from tests.fixtures import cosine_walk, patient_record, tiny_corpus, walking_test


def test_peaks_resolve_conflicts_by_value_then_separation() -> None:
    series = np.array([0.0, 1.0, 0.0, 3.0, 0.0, 2.0, 0.0])

    assert detect_peaks(series, min_separation=3) == [3]
    assert detect_peaks(series, min_separation=2) == [1, 3, 5]


def test_plateaus_and_short_series_have_no_peaks() -> None:
    assert detect_peaks(np.array([0.0, 2.0, 2.0, 0.0, 0.0])) == []
    assert detect_peaks(np.array([1.0, 2.0])) == []


def test_cosine_peaks_land_on_every_period() -> None:
    series = cosine_walk(100)[:, 0]

    peaks = detect_peaks(series)

    assert peaks == [10, 20, 30, 40, 50, 60, 70, 80, 90]
    assert stride_time_variability(np.array(peaks) / 10.0) == pytest.approx(0.0, abs=1e-12)


def test_stride_variability_uses_sample_std_of_intervals() -> None:
    assert stride_time_variability(np.array([0.0, 1.0, 2.5, 3.0])) == pytest.approx(0.5)
    assert stride_time_variability(np.array([0.0, 1.0])) is None


def test_features_of_a_linear_ramp() -> None:
    samples = np.zeros((4, 3))
    samples[:, 0] = [0.0, 1.0, 2.0, 3.0]

    features = extract_features(samples)

    assert features.u_x == pytest.approx(1.5)
    assert features.sigma_x == pytest.approx(np.sqrt(5.0 / 3.0))
    assert features.u_v == pytest.approx(1.5)
    assert features.alpha_x == pytest.approx(1.0)
    assert features.beta_x == pytest.approx(0.0)
    assert features.alpha_d == pytest.approx(1.0)
    assert features.low_peak_axes == ("x", "y", "z", "v")
    assert features.V_x == 0.0


def test_feature_vector_order_matches_names() -> None:
    features = extract_features(cosine_walk(60))
    vector = features.as_array()

    assert vector.shape == (len(FEATURE_NAMES),) == (20,)
    assert vector[FEATURE_NAMES.index("u_z")] == features.u_z
    assert list(features.to_row())[: len(FEATURE_NAMES)] == list(FEATURE_NAMES)


def test_too_few_samples_are_rejected() -> None:
    with pytest.raises(DataValidationError, match=">= 3 samples"):
        extract_features(np.zeros((2, 3)))


def test_rest_segment_is_excluded_unless_configured() -> None:
    walk = cosine_walk(50)
    rest = np.tile([0.0, 0.0, 50.0], (50, 1))
    test = WalkingTest(0.0, (walk, walk, rest), 10)

    default = extract_test_features(test)
    with_rest = extract_test_features(test, GaitFeatureConfig(include_rest=True))

    assert default.u_z == pytest.approx(walk[:, 2].mean())
    assert with_rest.u_z > default.u_z


def test_stride_summary_of_a_clean_cosine() -> None:
    samples = np.zeros((100, 3))
    samples[:, 0] = 2.0 + cosine_walk(100)[:, 0]

    summary = stride_interval_summary(samples)

    assert summary.peak_count == 9
    assert summary.cadence_hz == pytest.approx(1.0)
    assert summary.stride_interval_std_s == pytest.approx(0.0, abs=1e-12)
    assert summary.speed_proxy == pytest.approx(2.0, abs=1e-9)


def test_patient_feature_matrix_averages_tests() -> None:
    record = patient_record(times=(0.0, 1.0))
    matrix = patient_feature_matrix([record, *tiny_corpus()[:2]])

    expected = np.mean([extract_test_features(t).as_array() for t in record.tests], axis=0)
    assert matrix.shape == (3, 20)
    np.testing.assert_allclose(matrix[0], expected)


def test_config_fingerprint_is_stable_and_sensitive() -> None:
    base = fingerprint_feature_config(GaitFeatureConfig())

    assert base == fingerprint_feature_config(GaitFeatureConfig())
    assert base != fingerprint_feature_config(GaitFeatureConfig(include_rest=True))


MAGNITUDE_FEATURES = ("u_v", "sigma_v", "alpha_d", "beta_d", "V_v")


@pytest.mark.parametrize("seed", range(5))
def test_magnitude_features_ignore_the_device_orientation(seed: int) -> None:
    test = walking_test(seed=seed)
    rotated = augment_rotation(test, np.random.default_rng(100 + seed))

    plain = extract_test_features(test).to_row()
    turned = extract_test_features(rotated).to_row()

    for name in MAGNITUDE_FEATURES:
        assert turned[name] == pytest.approx(plain[name], abs=1e-9), name


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def _sample_std(values: list[float]) -> float:
    centre = _mean(values)
    return math.sqrt(sum((x - centre) ** 2 for x in values) / (len(values) - 1))


def _slow_peaks(series: list[float], min_separation: int) -> list[int]:
    threshold = _mean(series)
    strict = [
        i
        for i in range(1, len(series) - 1)
        if series[i - 1] < series[i] > series[i + 1] and series[i] > threshold
    ]
    accepted: list[int] = []
    for i in sorted(strict, key=lambda j: (-series[j], j)):
        if all(abs(i - j) >= min_separation for j in accepted):
            accepted.append(i)
    return sorted(accepted)


def _slow_features(rows: list[list[float]], rate_hz: int, min_separation: int) -> dict:
    columns = {axis: [r[k] for r in rows] for k, axis in enumerate("xyz")}
    columns["v"] = [math.sqrt(sum(c * c for c in r)) for r in rows]
    steps = [[b[k] - a[k] for k in range(3)] for a, b in pairwise(rows)]
    d_mag = [math.sqrt(sum(c * c for c in s)) for s in steps]

    expected: dict = {}
    for k, axis in enumerate("xyz"):
        expected[f"u_{axis}"] = _mean(columns[axis])
        expected[f"sigma_{axis}"] = _sample_std(columns[axis])
        expected[f"alpha_{axis}"] = _mean([s[k] for s in steps])
        expected[f"beta_{axis}"] = _sample_std([s[k] for s in steps])
    expected["u_v"] = _mean(columns["v"])
    expected["sigma_v"] = _sample_std(columns["v"])
    expected["alpha_d"] = _mean(d_mag)
    expected["beta_d"] = _sample_std(d_mag)
    for axis in "xyzv":
        times = [i / rate_hz for i in _slow_peaks(columns[axis], min_separation)]
        intervals = [b - a for a, b in pairwise(times)]
        expected[f"V_{axis}"] = _sample_std(intervals) if len(times) >= 3 else 0.0
    return expected


def test_features_match_a_direct_reimplementation() -> None:
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(5, 80))
        rate_hz = int(rng.choice([5, 10, 20, 50]))
        samples = rng.normal(0.0, 1.0, (n, 3)) + np.array([0.0, 0.0, 1.0])

        features = extract_features(samples, rate_hz=rate_hz, min_separation=3).to_row()
        expected = _slow_features(samples.tolist(), rate_hz, 3)

        for name in FEATURE_NAMES:
            assert features[name] == pytest.approx(expected[name], rel=1e-9, abs=1e-12), name
