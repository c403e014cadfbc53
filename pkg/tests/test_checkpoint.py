from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from temppnet.config import TrainConfig
from temppnet.errors import CheckpointError
from temppnet.evidence.stable_json import write_json
from temppnet.model.checkpoint import CHECKPOINT_VERSION, load_checkpoint, save_checkpoint
from temppnet.model.network import TempPNet, ablate, predict_proba, prepare_patient
from temppnet.model.training import DataSplit
from tests.fixtures import patient_record, small_model_config

SPLIT = DataSplit(train=("P0001", "P0003"), validation=("P0002",), test=("P0004",))


def _saved(tmp_path: Path, model: TempPNet | None = None) -> Path:
    model = model or TempPNet(small_model_config(), seed=9)
    return save_checkpoint(
        model,
        tmp_path / "checkpoint.json",
        seed=9,
        train_config=TrainConfig(epochs=3),
        split=SPLIT,
    )


def test_save_load_save_is_byte_identical(tmp_path: Path) -> None:
    first = _saved(tmp_path)

    loaded = load_checkpoint(first)
    second = save_checkpoint(
        loaded.model,
        tmp_path / "again.json",
        seed=loaded.seed,
        train_config=loaded.train_config,
        split=loaded.split,
    )

    assert first.read_bytes() == second.read_bytes()


def test_loaded_model_predicts_identically(tmp_path: Path) -> None:
    model = TempPNet(small_model_config(), seed=9)
    # Move the running statistics off their initial values.
    model.forward([prepare_patient(patient_record())], training=True)

    loaded = load_checkpoint(_saved(tmp_path, model))

    record = patient_record(seed=4)
    expected = predict_proba(record, model).probability
    assert predict_proba(record, loaded.model).probability == expected
    assert loaded.train_config == TrainConfig(epochs=3)
    assert loaded.split == SPLIT


def test_ablation_variant_round_trips(tmp_path: Path) -> None:
    path = _saved(tmp_path, ablate(small_model_config(), "last_severity", seed=9))

    loaded = load_checkpoint(path)

    assert loaded.model.ablation == "last_severity"
    assert "classifier.weight" in loaded.model.store


def test_missing_checkpoint(tmp_path: Path) -> None:
    with pytest.raises(CheckpointError, match="not found"):
        load_checkpoint(tmp_path / "absent.json")


def test_truncated_checkpoint(tmp_path: Path) -> None:
    path = _saved(tmp_path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])

    with pytest.raises(CheckpointError, match="corrupt or truncated"):
        load_checkpoint(path)


def test_unsupported_version(tmp_path: Path) -> None:
    path = _saved(tmp_path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    payload["format_version"] = CHECKPOINT_VERSION + 1
    write_json(path, payload)

    with pytest.raises(CheckpointError, match="Unsupported checkpoint version"):
        load_checkpoint(path)


def test_tampered_checkpoint_fails_integrity_check(tmp_path: Path) -> None:
    path = _saved(tmp_path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    payload["seed"] = 10
    write_json(path, payload)

    with pytest.raises(CheckpointError, match="integrity check failed"):
        load_checkpoint(path)


def test_foreign_json_is_rejected(tmp_path: Path) -> None:
    path = write_json(tmp_path / "other.json", {"format": "something-else"})

    with pytest.raises(CheckpointError, match="Not a temppnet-checkpoint"):
        load_checkpoint(path)


def test_stored_arrays_are_float64(tmp_path: Path) -> None:
    model = TempPNet(small_model_config(), seed=9)
    loaded = load_checkpoint(_saved(tmp_path, model))

    for name, tensor in model.store.items():
        restored = loaded.model.store[name].data
        assert restored.dtype == np.float64
        np.testing.assert_array_equal(restored, tensor.data)
