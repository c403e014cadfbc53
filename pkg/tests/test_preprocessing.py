from __future__ import annotations

import numpy as np
import pytest

from temppnet.errors import DataValidationError
from temppnet.sensors.preprocessing import (
    apply_observation_window,
    augment_rotation,
    label_from_survey,
    prepare_test,
    resample,
    rotate_prepared,
    rotate_test,
    shape_segment,
    to_global_frame,
)
from temppnet.sensors.quaternion import quaternion_to_rotation, sample_random_quaternion
from tests.fixtures import patient_record, walking_test

QUARTER_Z = np.array([0.0, 0.0, np.sin(np.pi / 4), np.cos(np.pi / 4)])


def test_global_frame_drops_missing_and_non_unit_quaternions() -> None:
    accel = np.array([[1.0, 0.0, 0.0]] * 4)
    quats = np.array(
        [
            [0.0, 0.0, 0.0, 1.0],
            [np.nan, 0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, 2.0],
            QUARTER_Z,
        ]
    )

    result = to_global_frame(accel, quats)

    assert result.dropped == 2
    np.testing.assert_allclose(result.samples, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], atol=1e-12)


def test_global_frame_rejects_length_mismatch() -> None:
    with pytest.raises(DataValidationError, match="quaternions"):
        to_global_frame(np.zeros((3, 3)), np.tile([0.0, 0.0, 0.0, 1.0], (2, 1)))


def test_resample_block_means_keep_trailing_partial_block() -> None:
    segment = np.repeat(np.arange(25, dtype=np.float64)[:, None], 3, axis=1)

    out = resample(segment, 100, 10)

    np.testing.assert_allclose(out[:, 0], [4.5, 14.5, 22.0])


def test_resample_rejects_non_divisible_rates() -> None:
    with pytest.raises(DataValidationError, match="divisible"):
        resample(np.zeros((10, 3)), 100, 30)


def test_shape_segment_pads_and_truncates() -> None:
    short = np.arange(15, dtype=np.float64).reshape(5, 3)
    padded = shape_segment(short)

    assert padded.shape == (3, 300)
    np.testing.assert_array_equal(padded[:, :5], short.T)
    assert not padded[:, 5:].any()

    long = np.ones((400, 3))
    assert shape_segment(long).shape == (3, 300)


def test_prepare_test_shape_and_no_upsampling() -> None:
    test = walking_test(rate_hz=20)

    assert prepare_test(test, 10).shape == (3, 3, 300)
    with pytest.raises(DataValidationError, match="upsample"):
        prepare_test(walking_test(rate_hz=10), 20)


def test_rotating_prepared_input_equals_preparing_rotated_test() -> None:
    test = walking_test(rate_hz=20, length=150, seed=4)
    rotation = quaternion_to_rotation(sample_random_quaternion(np.random.default_rng(1)))

    expected = prepare_test(rotate_test(test, rotation), 10)
    actual = rotate_prepared(prepare_test(test, 10), rotation)

    np.testing.assert_allclose(actual, expected, atol=1e-12)


def test_augmentation_preserves_sample_magnitudes() -> None:
    test = walking_test(seed=2)

    rotated = augment_rotation(test, np.random.default_rng(5))

    for before, after in zip(test.segments, rotated.segments, strict=True):
        np.testing.assert_allclose(
            np.linalg.norm(after, axis=1), np.linalg.norm(before, axis=1), atol=1e-12
        )
    assert not np.allclose(rotated.outbound, test.outbound)


@pytest.mark.parametrize(("score", "label"), [(0, 0), (3, 0), (4, 1), (24, 1)])
def test_survey_threshold(score: int, label: int) -> None:
    assert label_from_survey(score) == label


@pytest.mark.parametrize("score", [-1, 25, 2.5, True])
def test_survey_rejects_invalid_scores(score) -> None:
    with pytest.raises(DataValidationError):
        label_from_survey(score)


def test_observation_window_keeps_trailing_tests_and_rebases() -> None:
    record = patient_record(times=(0.0, 3.0, 10.0, 14.0))

    windowed = apply_observation_window(record, 7.0)

    assert windowed.timepoints.tolist() == [0.0, 4.0]
    np.testing.assert_array_equal(windowed.tests[0].outbound, record.tests[2].outbound)


def test_observation_window_must_be_positive() -> None:
    with pytest.raises(DataValidationError):
        apply_observation_window(patient_record(), 0.0)
