"""Stratified splitting and the seeded training loop with early stopping on validation F1."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

import numpy as np

from temppnet.autodiff.optim import Adam
from temppnet.autodiff.tensor import backward
from temppnet.config import ModelConfig, TrainConfig
from temppnet.errors import DataValidationError
from temppnet.evaluation.metrics import MetricsRow
from temppnet.model.network import (
    PreparedPatient,
    TempPNet,
    evaluate,
    objective,
    prepare_patient,
)
from temppnet.sensors.preprocessing import rotate_prepared
from temppnet.sensors.quaternion import quaternion_to_rotation, sample_random_quaternion
from temppnet.sensors.records import PatientRecord

logger = logging.getLogger(__name__)

SPLIT_STREAM = 0x5917
EPOCH_STREAM = 0xE90C


@dataclass(frozen=True, slots=True)
class DataSplit:
    train: tuple[str, ...]
    validation: tuple[str, ...]
    test: tuple[str, ...]

    def to_dict(self) -> dict[str, list[str]]:
        return {
            "train": list(self.train),
            "validation": list(self.validation),
            "test": list(self.test),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Sequence[str]]) -> DataSplit:
        return cls(
            train=tuple(data["train"]),
            validation=tuple(data["validation"]),
            test=tuple(data["test"]),
        )


@dataclass(frozen=True, slots=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_bce: float
    r_s: float
    r_t: float
    val_precision: float
    val_recall: float
    val_f1: float
    improved: bool

    def to_dict(self) -> dict[str, float | int | bool]:
        return asdict(self)


@dataclass(slots=True)
class TrainResult:
    model: TempPNet
    split: DataSplit
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    def history_dict(self) -> dict[str, object]:
        return {
            "best_epoch": self.best_epoch,
            "stopped_early": self.stopped_early,
            "epochs": [r.to_dict() for r in self.history],
        }


def stratified_split(
    records: Sequence[PatientRecord],
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> DataSplit:
    """Shuffle each class with a seeded stream and cut it by ``ratios``.

    A class of two or more patients keeps at least one test patient whenever the test
    ratio is positive. Rejects corpora that do not contain both classes.
    """

    labels = {r.label for r in records}
    if labels != {0, 1}:
        raise DataValidationError(
            f"training needs both classes; corpus has labels {sorted(labels)}"
        )
    rng = np.random.default_rng(np.random.SeedSequence([seed, SPLIT_STREAM]))
    train: list[str] = []
    validation: list[str] = []
    test: list[str] = []
    for label in (0, 1):
        ids = sorted(r.patient_id for r in records if r.label == label)
        ids = [ids[i] for i in rng.permutation(len(ids))]
        n_train = int(round(ratios[0] * len(ids)))
        n_val = int(round(ratios[1] * len(ids)))
        n_train = max(1, min(n_train, len(ids)))
        n_val = min(n_val, len(ids) - n_train)
        if ratios[2] > 0 and len(ids) >= 2 and n_train + n_val == len(ids):
            if n_val:
                n_val -= 1
            else:
                n_train -= 1
        train.extend(ids[:n_train])
        validation.extend(ids[n_train : n_train + n_val])
        test.extend(ids[n_train + n_val :])
    return DataSplit(tuple(sorted(train)), tuple(sorted(validation)), tuple(sorted(test)))


def select(
    prepared: dict[str, PreparedPatient], ids: Sequence[str]
) -> list[PreparedPatient]:
    return [prepared[i] for i in ids]


def augment(patient: PreparedPatient, rng: np.random.Generator) -> PreparedPatient:
    """One random rotation per test, shared by its three segments."""

    rotated = np.stack(
        [
            rotate_prepared(test, quaternion_to_rotation(sample_random_quaternion(rng)))
            for test in patient.inputs
        ]
    )
    return patient.with_inputs(rotated)


def train(
    records: Sequence[PatientRecord],
    model_config: ModelConfig | None = None,
    train_config: TrainConfig | None = None,
) -> TrainResult:
    model_config = model_config or ModelConfig()
    train_config = train_config or TrainConfig()
    split = stratified_split(records, train_config.split, train_config.seed)
    prepared = {r.patient_id: prepare_patient(r, train_config.rate_hz) for r in records}
    train_set = select(prepared, split.train)
    val_set = select(prepared, split.validation) or train_set
    if not split.validation:
        logger.warning("Validation split is empty; model selection uses the training split")

    model = TempPNet(model_config, ablation=train_config.ablation, seed=train_config.seed)
    optimizer = Adam(model.store.params, lr=train_config.lr)
    logger.info(
        "Training %s: %d train / %d validation / %d test patients, %d parameters",
        train_config.ablation,
        len(split.train),
        len(split.validation),
        len(split.test),
        model.store.n_values(),
    )

    result = TrainResult(model=model, split=split)
    best_snapshot = model.store.snapshot()
    best_f1 = -1.0
    stale = 0
    for epoch in range(1, train_config.epochs + 1):
        rng = np.random.default_rng(
            np.random.SeedSequence([train_config.seed, EPOCH_STREAM, epoch])
        )
        order = rng.permutation(len(train_set))
        totals = np.zeros(4)
        for start in range(0, len(order), train_config.batch_size):
            batch = [train_set[i] for i in order[start : start + train_config.batch_size]]
            if train_config.augment:
                batch = [augment(p, rng) for p in batch]
            forwards = model.forward(batch, training=True)
            loss = objective(forwards, [p.label for p in batch], model_config)
            optimizer.zero_grad()
            backward(loss.total)
            optimizer.step()
            totals += len(batch) * np.array([loss.total.item(), loss.bce, loss.r_s, loss.r_t])
        totals /= len(train_set)

        val: MetricsRow = evaluate(val_set, model).metrics
        improved = val.f1 > best_f1
        if improved:
            best_f1 = val.f1
            best_snapshot = model.store.snapshot()
            result.best_epoch = epoch
            stale = 0
        else:
            stale += 1
        result.history.append(
            EpochRecord(
                epoch=epoch,
                train_loss=float(totals[0]),
                train_bce=float(totals[1]),
                r_s=float(totals[2]),
                r_t=float(totals[3]),
                val_precision=val.precision,
                val_recall=val.recall,
                val_f1=val.f1,
                improved=improved,
            )
        )
        logger.info(
            "epoch %d: loss=%.5f bce=%.5f val_f1=%.4f%s",
            epoch,
            totals[0],
            totals[1],
            val.f1,
            " *" if improved else "",
        )
        if stale >= train_config.patience:
            result.stopped_early = True
            logger.info("Early stop after %d epochs without improvement", stale)
            break

    model.store.restore(best_snapshot)
    return result
