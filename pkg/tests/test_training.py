from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from temppnet.config import TrainConfig
from temppnet.errors import DataValidationError
from temppnet.evidence.hash_utils import sha256_file
from temppnet.evidence.stable_json import write_json
from temppnet.interpret.interpreter import render_prototype_gallery, render_report
from temppnet.model.checkpoint import save_checkpoint
from temppnet.model.network import TempPNet, evaluate, prepare_patient
from temppnet.model.training import augment, stratified_split, train
from tests.fixtures import patient_record, small_model_config, tiny_corpus


def _ten_patients():
    return [
        patient_record(f"P{i:04d}", i % 2, times=(0.0, 1.0), seed=i) for i in range(10)
    ]


def test_split_is_stratified_disjoint_and_covering() -> None:
    records = _ten_patients()

    split = stratified_split(records, (0.6, 0.2, 0.2), seed=0)

    ids = split.train + split.validation + split.test
    assert sorted(ids) == sorted(r.patient_id for r in records)
    assert len(set(ids)) == len(ids)
    assert (len(split.train), len(split.validation), len(split.test)) == (6, 2, 2)
    labels = {r.patient_id: r.label for r in records}
    for part in (split.train, split.validation, split.test):
        assert {labels[i] for i in part} == {0, 1}


def test_small_classes_keep_a_test_patient() -> None:
    records = _ten_patients()[:6]

    split = stratified_split(records, (0.6, 0.2, 0.2), seed=0)

    labels = {r.patient_id: r.label for r in records}
    assert (len(split.train), len(split.validation), len(split.test)) == (4, 0, 2)
    assert {labels[i] for i in split.test} == {0, 1}
    assert stratified_split(records, (0.8, 0.2, 0.0), seed=0).test == ()


def test_split_depends_only_on_seed() -> None:
    records = _ten_patients()

    assert stratified_split(records, seed=4) == stratified_split(list(reversed(records)), seed=4)
    assert stratified_split(records, seed=4).to_dict()["train"] == sorted(
        stratified_split(records, seed=4).train
    )


def test_single_class_corpus_is_rejected() -> None:
    records = [patient_record(f"P{i}", 1, seed=i) for i in range(4)]

    with pytest.raises(DataValidationError, match="both classes"):
        stratified_split(records)


def test_zero_epochs_returns_the_initial_model() -> None:
    config = small_model_config()
    train_config = TrainConfig(epochs=0, seed=5)

    result = train(tiny_corpus(), config, train_config)
    fresh = TempPNet(config, seed=5)

    assert result.history == []
    assert result.best_epoch == 0
    for name, tensor in fresh.store.items():
        np.testing.assert_array_equal(result.model.store[name].data, tensor.data)


def test_training_is_deterministic_for_a_seed() -> None:
    config = small_model_config()
    train_config = TrainConfig(epochs=2, seed=1, batch_size=2)
    records = tiny_corpus()

    first = train(records, config, train_config)
    second = train(records, config, train_config)

    assert first.history_dict() == second.history_dict()
    for name, tensor in first.model.store.items():
        np.testing.assert_array_equal(second.model.store[name].data, tensor.data)


def test_training_records_history_and_restores_best_epoch() -> None:
    records = tiny_corpus(n_patients=10)
    train_config = TrainConfig(epochs=10, seed=2, patience=1, batch_size=4)

    result = train(records, small_model_config(), train_config)

    assert result.history[0].improved
    assert result.best_epoch >= 1
    assert result.stopped_early
    assert len(result.history) < 10
    by_id = {r.patient_id: r for r in records}
    validation = [by_id[i] for i in result.split.validation]
    best = result.history[result.best_epoch - 1]
    assert evaluate(validation, result.model).metrics.f1 == pytest.approx(best.val_f1)


def test_augmentation_rotates_each_test_rigidly() -> None:
    prepared = prepare_patient(patient_record(seed=3))

    rotated = augment(prepared, np.random.default_rng(0))

    assert rotated.inputs.shape == prepared.inputs.shape
    np.testing.assert_allclose(
        np.linalg.norm(rotated.inputs, axis=2), np.linalg.norm(prepared.inputs, axis=2)
    )
    assert not np.allclose(rotated.inputs, prepared.inputs)


def _seeded_run(out: Path) -> dict[str, str]:
    records = tiny_corpus()
    train_config = TrainConfig(epochs=1, seed=4, batch_size=2)
    result = train(records, small_model_config(), train_config)
    save_checkpoint(
        result.model, out / "checkpoint.json", seed=4, train_config=train_config, split=result.split
    )
    write_json(out / "history.json", result.history_dict())
    render_report(records[0], result.model, out / "report", corpus=records)
    render_prototype_gallery(records, result.model, out / "gallery")
    return {
        path.relative_to(out).as_posix(): sha256_file(path)
        for path in sorted(out.rglob("*"))
        if path.is_file()
    }


def test_seeded_runs_write_identical_bytes(tmp_path: Path) -> None:
    first = _seeded_run(tmp_path / "a")
    second = _seeded_run(tmp_path / "b")

    assert first == second
    expected = {"checkpoint.json", "history.json", "report/report.json", "gallery/gallery.json"}
    assert expected <= set(first)
