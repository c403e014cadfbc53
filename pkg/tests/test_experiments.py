from __future__ import annotations

from pathlib import Path

import pytest

from temppnet.config import GeneratorConfig, SuiteConfig, TrainConfig
from temppnet.evaluation.experiments import (
    SUITE_HEADER,
    ExperimentConfig,
    infeasibility,
    run_experiment_suite,
    suite_configs,
)
from temppnet.evidence.tables import read_csv
from temppnet.synth.generator import generate_records
from tests.fixtures import patient_record, small_model_config, tiny_corpus


def test_suite_lists_ablations_then_windows_then_rates() -> None:
    configs = suite_configs(SuiteConfig(), TrainConfig(), small_model_config())

    assert [c.name for c in configs] == [
        "TempPNet[none]",
        "TempPNet[no_t0]",
        "TempPNet[last_severity]",
        "TempPNet[avg_severity]",
        "TempPNet window=2w",
        "TempPNet window=4w",
        "TempPNet rate=10Hz",
        "TempPNet rate=20Hz",
    ]
    assert configs[5].window_days == 28.0
    assert configs[7].ablation == "none"


def test_infeasible_windows_and_rates() -> None:
    records = [patient_record(rate_hz=10)]

    too_long = ExperimentConfig("long", "none", 28.0, 10)
    too_fast = ExperimentConfig("fast", "none", 14.0, 20)
    uneven = ExperimentConfig("uneven", "none", 14.0, 3)

    assert "exceeds the corpus window" in infeasibility(too_long, records, 14.0)
    assert infeasibility(too_long, records, 28.0) is None
    assert "cannot be resampled" in infeasibility(too_fast, records, 14.0)
    assert "cannot be resampled" in infeasibility(uneven, records, 14.0)
    assert infeasibility(ExperimentConfig("ok", "none", 14.0, 5), records, 14.0) is None


def test_suite_skips_infeasible_rows_and_writes_the_table(tmp_path: Path) -> None:
    suite = SuiteConfig(ablations=("none", "avg_severity"), window_weeks=(4,), rates_hz=(20,))

    result = run_experiment_suite(
        tiny_corpus(),
        suite,
        small_model_config(),
        TrainConfig(epochs=0, seed=3),
    )

    assert [r.model for r in result.rows] == ["TempPNet[none]", "TempPNet[avg_severity]"]
    assert len(result.notes) == 2
    for row in result.rows:
        assert row.metrics.n_runs == 1
        assert row.metrics.f1_std == 0.0
        assert 0.0 <= row.metrics.f1 <= 1.0
        assert row.econ.net == pytest.approx(row.econ.benefit_tp - row.econ.cost_fp)

    path = result.write_csv(tmp_path / "tables" / "suite.csv")
    rows = read_csv(path)
    assert list(rows[0]) == list(SUITE_HEADER)
    assert [r["model"] for r in rows] == ["TempPNet[none]", "TempPNet[avg_severity]"]


def test_default_sweep_runs_every_row_on_a_default_corpus() -> None:
    corpus = GeneratorConfig(n_patients=6, seed=7, max_tests=3)
    records = generate_records(corpus)

    result = run_experiment_suite(
        records,
        SuiteConfig(),
        small_model_config(),
        TrainConfig(epochs=0, seed=1),
        corpus_window_days=corpus.window_days,
    )

    assert result.notes == []
    names = [r.model for r in result.rows]
    assert "TempPNet rate=20Hz" in names
    assert "TempPNet window=4w" in names
    assert len(names) == 8
