from __future__ import annotations

import pytest

from temppnet.errors import DataValidationError
from temppnet.evaluation.econ import (
    NO_INTERVENTION,
    econ_analysis,
    reproduce_reference_table,
)
from temppnet.evaluation.metrics import (
    MetricsRow,
    compute_metrics,
    confusion_counts,
    f1_score,
    majority_baseline,
    summarize,
)


def test_metrics_on_a_small_example() -> None:
    row = compute_metrics([0.9, 0.8, 0.2, 0.6, 0.1], [1, 0, 1, 1, 0])

    assert row.precision == pytest.approx(2 / 3)
    assert row.recall == pytest.approx(2 / 3)
    assert row.f1 == pytest.approx(2 / 3)


def test_probability_of_exactly_one_half_is_negative() -> None:
    assert confusion_counts([0.5, 0.50001], [1, 1]) == (1, 0, 1, 0)


def test_no_positive_predictions_gives_zero_scores() -> None:
    row = compute_metrics([0.1, 0.2], [1, 0])

    assert (row.precision, row.recall, row.f1) == (0.0, 0.0, 0.0)
    assert f1_score(0.0, 0.0) == 0.0


def test_metric_inputs_are_validated() -> None:
    with pytest.raises(DataValidationError):
        compute_metrics([], [])
    with pytest.raises(DataValidationError):
        compute_metrics([0.9], [1, 0])
    with pytest.raises(DataValidationError):
        compute_metrics([0.9], [2])


def test_summary_uses_population_std() -> None:
    rows = [MetricsRow(0.5, 0.5, 0.5), MetricsRow(0.7, 0.9, 0.7)]

    summary = summarize(rows)

    assert summary.f1 == pytest.approx(0.6)
    assert summary.f1_std == pytest.approx(0.1)
    assert summary.recall_std == pytest.approx(0.2)
    assert summary.n_runs == 2
    assert summarize(rows[:1]).f1_std == 0.0
    with pytest.raises(DataValidationError):
        summarize([])


def test_majority_baseline_predicts_training_majority() -> None:
    row = majority_baseline([1, 1, 0], [1, 0])

    assert row.precision == pytest.approx(0.5)
    assert row.recall == pytest.approx(1.0)
    assert majority_baseline([0, 0, 1], [1, 0]).f1 == 0.0


def test_econ_for_published_operating_point() -> None:
    econ = econ_analysis(0.737, 0.796)

    assert econ.benefit_tp == pytest.approx(111.400, abs=0.01)
    assert econ.cost_fp == pytest.approx(15.990, abs=0.01)
    assert econ.net == pytest.approx(95.410, abs=0.01)


def test_econ_rejects_out_of_range_inputs() -> None:
    with pytest.raises(DataValidationError, match="precision"):
        econ_analysis(1.2, 0.5)
    with pytest.raises(DataValidationError, match="recall"):
        econ_analysis(0.5, -0.1)


def test_reference_table_is_reproduced_from_precision_and_recall() -> None:
    for published, computed in reproduce_reference_table():
        if published.model == NO_INTERVENTION:
            assert computed.benefit_tp == 0.0
            assert computed.cost_fp == pytest.approx(60.8)
            assert computed.net == pytest.approx(-60.8)
            continue
        assert computed.benefit_tp == pytest.approx(published.benefit, abs=0.01), published.model
        assert computed.cost_fp == pytest.approx(published.cost, abs=0.01), published.model
        assert computed.net == pytest.approx(published.net, abs=0.01), published.model
