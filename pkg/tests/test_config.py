from __future__ import annotations

from pathlib import Path

import pytest

from temppnet.config import (
    DEFAULT_CHANNELS,
    GeneratorConfig,
    ModelConfig,
    SuiteConfig,
    TrainConfig,
    output_root,
    parse_channels,
    resolve_run_config,
)
from temppnet.errors import DataValidationError
from temppnet.evidence.stable_json import write_json


def test_defaults_without_file_or_flags(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv("TEMPPNET_LOG_LEVEL", raising=False)

    run = resolve_run_config("train", {"epochs": None, "seed": None})

    assert run.epochs == 50
    assert run.channels == DEFAULT_CHANNELS
    assert run.log_level is None
    assert run.model_config() == ModelConfig()
    assert run.train_config() == TrainConfig()


def test_flags_override_the_file(tmp_path: Path) -> None:
    config = write_json(
        tmp_path / "settings.json",
        {"epochs": 3, "seed": 4, "channels": [8, 8], "n_symptoms": 2, "lr": 0.01},
    )

    run = resolve_run_config("train", {"config": str(config), "epochs": 7, "channels": "6,6,6"})

    assert run.epochs == 7
    assert run.seed == 4
    assert run.channels == (6, 6, 6)
    assert run.extra == {"n_symptoms": 2, "lr": 0.01}
    assert run.model_config().n_symptoms == 2
    assert run.model_config().channels == (6, 6, 6)
    assert run.train_config().lr == 0.01
    assert run.train_config().epochs == 7


def test_log_level_falls_back_to_the_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("TEMPPNET_LOG_LEVEL", "debug")

    assert resolve_run_config("generate", {}).log_level == "debug"
    assert resolve_run_config("generate", {"log_level": "ERROR"}).log_level == "ERROR"


def test_output_root_from_environment(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    monkeypatch.setenv("TEMPPNET_OUTPUT_ROOT", str(tmp_path))

    assert resolve_run_config("sweep", {}).out_dir() == tmp_path / "sweep"
    assert resolve_run_config("sweep", {"out": "elsewhere"}).out_dir() == Path("elsewhere")

    monkeypatch.setenv("TEMPPNET_OUTPUT_ROOT", "  ")
    assert output_root() == Path("runs")


@pytest.mark.parametrize(
    ("payload", "message"),
    [
        ({"ablation": "no_symptoms"}, "Unknown ablation"),
        ({"model": {"n_d": 4}}, "must not be nested"),
        ({"channels": "4,x"}, "comma list"),
    ],
)
def test_invalid_config_files(tmp_path: Path, payload: dict, message: str) -> None:
    config = write_json(tmp_path / "bad.json", payload)

    with pytest.raises(DataValidationError, match=message):
        resolve_run_config("train", {"config": str(config)})


def test_missing_or_non_object_config(tmp_path: Path) -> None:
    with pytest.raises(DataValidationError, match="not found"):
        resolve_run_config("train", {"config": str(tmp_path / "absent.json")})

    listing = write_json(tmp_path / "list.json", [1, 2])
    with pytest.raises(DataValidationError, match="flat JSON object"):
        resolve_run_config("train", {"config": str(listing)})


def test_unknown_model_keys_are_rejected() -> None:
    with pytest.raises(DataValidationError, match="Unknown ModelConfig keys: depth"):
        ModelConfig.from_dict({"depth": 3})


def test_channel_parsing() -> None:
    assert parse_channels("4, 8,16") == (4, 8, 16)
    with pytest.raises(DataValidationError):
        parse_channels(" , ")


@pytest.mark.parametrize(
    "kwargs",
    [
        {"gamma": 0.0},
        {"channels": (4, 0)},
        {"n_symptoms": 0},
        {"window_days": 0.0},
    ],
)
def test_model_config_validation(kwargs: dict) -> None:
    with pytest.raises(DataValidationError):
        ModelConfig(**kwargs)


def test_train_and_suite_validation() -> None:
    with pytest.raises(DataValidationError, match="sum to 1"):
        TrainConfig(split=(0.5, 0.2, 0.2))
    with pytest.raises(DataValidationError):
        TrainConfig(epochs=-1)
    with pytest.raises(DataValidationError):
        SuiteConfig(runs=0)
    assert TrainConfig.from_dict(TrainConfig(split=(0.8, 0.1, 0.1)).to_dict()).split == (
        0.8,
        0.1,
        0.1,
    )


def test_corpus_settings_are_separate_from_the_observation_window() -> None:
    run = resolve_run_config("generate", {"window_days": 7.0})

    assert run.generator_config() == GeneratorConfig()
    assert run.model_config().window_days == 7.0
    assert resolve_run_config("generate", {"corpus_rate_hz": 10}).generator_config().rate_hz == 10
    with pytest.raises(DataValidationError, match="min_tests"):
        GeneratorConfig(min_tests=4, max_tests=3)
