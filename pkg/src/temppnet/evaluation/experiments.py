"""Ablation, observation-window and sampling-rate sweeps written as mean/std tables."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

from temppnet.config import ModelConfig, SuiteConfig, TrainConfig
from temppnet.evaluation.econ import EconRow, econ_analysis
from temppnet.evaluation.metrics import MetricsRow, summarize
from temppnet.evidence.tables import write_csv
from temppnet.model.network import evaluate
from temppnet.model.training import train
from temppnet.sensors.preprocessing import apply_observation_window
from temppnet.sensors.records import PatientRecord

logger = logging.getLogger(__name__)

SUITE_HEADER = (
    "model",
    "f1_mean",
    "f1_std",
    "precision_mean",
    "precision_std",
    "recall_mean",
    "recall_std",
    "benefit",
    "cost",
    "net",
)
DAYS_PER_WEEK = 7


@dataclass(frozen=True, slots=True)
class ExperimentConfig:
    name: str
    ablation: str
    window_days: float
    rate_hz: int


@dataclass(frozen=True, slots=True)
class SuiteRow:
    model: str
    metrics: MetricsRow
    econ: EconRow

    def cells(self) -> list[object]:
        m = self.metrics
        return [
            self.model,
            m.f1,
            m.f1_std,
            m.precision,
            m.precision_std,
            m.recall,
            m.recall_std,
            self.econ.benefit_tp,
            self.econ.cost_fp,
            self.econ.net,
        ]


@dataclass(slots=True)
class SuiteResult:
    rows: list[SuiteRow] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def write_csv(self, path: str | Path) -> Path:
        return write_csv(path, SUITE_HEADER, (r.cells() for r in self.rows), make_parents=True)


def suite_configs(
    suite: SuiteConfig, base: TrainConfig, model: ModelConfig
) -> list[ExperimentConfig]:
    """Ablation rows at the base window and rate, then window rows, then rate rows."""

    configs = [
        ExperimentConfig(f"TempPNet[{flag}]", flag, model.window_days, base.rate_hz)
        for flag in suite.ablations
    ]
    configs.extend(
        ExperimentConfig(f"TempPNet window={w}w", "none", float(w * DAYS_PER_WEEK), base.rate_hz)
        for w in suite.window_weeks
    )
    configs.extend(
        ExperimentConfig(f"TempPNet rate={r}Hz", "none", model.window_days, int(r))
        for r in suite.rates_hz
    )
    return configs


def infeasibility(
    config: ExperimentConfig, records: Sequence[PatientRecord], corpus_window_days: float
) -> str | None:
    """Why ``config`` cannot run on ``records``, or None.

    ``corpus_window_days`` is the window the corpus was collected (and loaded) with.
    """

    if config.window_days > corpus_window_days:
        return (
            f"{config.name}: window of {config.window_days:g} days exceeds the corpus window "
            f"of {corpus_window_days:g} days"
        )
    rates = sorted({t.rate_hz for r in records for t in r.tests})
    if any(rate < config.rate_hz or rate % config.rate_hz for rate in rates):
        return f"{config.name}: corpus rates {rates} Hz cannot be resampled to {config.rate_hz} Hz"
    return None


def run_config(
    records: Sequence[PatientRecord],
    config: ExperimentConfig,
    model_config: ModelConfig,
    train_config: TrainConfig,
    runs: int,
) -> SuiteRow:
    windowed = [apply_observation_window(r, config.window_days) for r in records]
    mcfg = replace(model_config, window_days=config.window_days)
    per_run: list[MetricsRow] = []
    for run in range(runs):
        tcfg = replace(
            train_config,
            ablation=config.ablation,
            rate_hz=config.rate_hz,
            seed=train_config.seed + run,
        )
        result = train(windowed, mcfg, tcfg)
        by_id = {r.patient_id: r for r in windowed}
        test = [by_id[i] for i in result.split.test]
        per_run.append(evaluate(test, result.model, config.rate_hz).metrics)
    summary = summarize(per_run)
    logger.info("%s: f1=%.4f +/- %.4f over %d runs", config.name, summary.f1, summary.f1_std, runs)
    return SuiteRow(config.name, summary, econ_analysis(summary.precision, summary.recall))


def run_experiment_suite(
    records: Sequence[PatientRecord],
    suite: SuiteConfig | None = None,
    model_config: ModelConfig | None = None,
    train_config: TrainConfig | None = None,
    corpus_window_days: float | None = None,
) -> SuiteResult:
    """Train and test every feasible config with ``suite.runs`` seeds; one row per config."""

    suite = suite or SuiteConfig()
    model_config = model_config or ModelConfig()
    corpus_window = model_config.window_days if corpus_window_days is None else corpus_window_days
    train_config = train_config or TrainConfig()
    result = SuiteResult()
    for config in suite_configs(suite, train_config, model_config):
        reason = infeasibility(config, records, corpus_window)
        if reason is not None:
            logger.warning("Skipping %s", reason)
            result.notes.append(reason)
            continue
        result.rows.append(run_config(records, config, model_config, train_config, suite.runs))
    return result
