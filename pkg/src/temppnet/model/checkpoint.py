"""Self-describing JSON checkpoints with base64 float64 arrays.

Layout (keys sorted on disk)::

    {
      "format": "temppnet-checkpoint",
      "format_version": 1,
      "ablation": "none",
      "seed": 0,
      "model_config": {...},
      "train_config": {...} | null,
      "split": {"train": [...], "validation": [...], "test": [...]} | null,
      "parameters": {"<name>": {"shape": [...], "data": "<base64 little-endian f8>"}},
      "buffers": {...},
      "sha256": "<digest of everything above>"
    }
"""

from __future__ import annotations

import base64
import binascii
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from temppnet.config import ModelConfig, TrainConfig
from temppnet.errors import CheckpointError, DataValidationError
from temppnet.evidence.hash_utils import fingerprint_payload
from temppnet.evidence.stable_json import write_json
from temppnet.model.network import TempPNet
from temppnet.model.training import DataSplit

CHECKPOINT_FORMAT = "temppnet-checkpoint"
CHECKPOINT_VERSION = 1
CHECKPOINT_NAME = "checkpoint.json"


@dataclass(frozen=True, slots=True)
class LoadedCheckpoint:
    model: TempPNet
    seed: int
    train_config: TrainConfig | None
    split: DataSplit | None


def _encode_array(values: np.ndarray) -> dict[str, Any]:
    arr = np.ascontiguousarray(values, dtype="<f8")
    return {"shape": list(arr.shape), "data": base64.b64encode(arr.tobytes()).decode("ascii")}


def _decode_array(entry: Any, name: str) -> np.ndarray:
    try:
        shape = tuple(int(d) for d in entry["shape"])
        raw = base64.b64decode(entry["data"].encode("ascii"), validate=True)
        return np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)
    except (KeyError, TypeError, AttributeError, ValueError, binascii.Error) as exc:
        raise CheckpointError(f"array {name!r} is corrupt: {exc}") from exc


def checkpoint_payload(
    model: TempPNet,
    *,
    seed: int = 0,
    train_config: TrainConfig | None = None,
    split: DataSplit | None = None,
) -> dict[str, Any]:
    payload: dict[str, Any] = {
        "format": CHECKPOINT_FORMAT,
        "format_version": CHECKPOINT_VERSION,
        "ablation": model.ablation,
        "seed": seed,
        "model_config": model.config.to_dict(),
        "train_config": None if train_config is None else train_config.to_dict(),
        "split": None if split is None else split.to_dict(),
        "parameters": {name: _encode_array(t.data) for name, t in model.store.items()},
        "buffers": {name: _encode_array(v) for name, v in model.store.buffers.items()},
    }
    payload["sha256"] = fingerprint_payload(payload)
    return payload


def save_checkpoint(
    model: TempPNet,
    path: str | Path,
    *,
    seed: int = 0,
    train_config: TrainConfig | None = None,
    split: DataSplit | None = None,
) -> Path:
    payload = checkpoint_payload(model, seed=seed, train_config=train_config, split=split)
    return write_json(path, payload, make_parents=True)


def load_checkpoint(path: str | Path) -> LoadedCheckpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"Checkpoint not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"Checkpoint is corrupt or truncated: {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"Not a {CHECKPOINT_FORMAT} file: {path}")
    version = payload.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"Unsupported checkpoint version {version!r} in {path}; "
            f"this build reads version {CHECKPOINT_VERSION}"
        )
    digest = payload.pop("sha256", None)
    if digest != fingerprint_payload(payload):
        raise CheckpointError(f"Checkpoint integrity check failed: {path}")

    try:
        config = ModelConfig.from_dict(payload["model_config"])
        model = TempPNet(config, ablation=payload["ablation"], seed=int(payload["seed"]))
        train_config = (
            None
            if payload["train_config"] is None
            else TrainConfig.from_dict(payload["train_config"])
        )
        split = None if payload["split"] is None else DataSplit.from_dict(payload["split"])
        snapshot = {
            "parameters": {k: _decode_array(v, k) for k, v in payload["parameters"].items()},
            "buffers": {k: _decode_array(v, k) for k, v in payload["buffers"].items()},
        }
    except (KeyError, TypeError, AttributeError, DataValidationError) as exc:
        raise CheckpointError(f"Checkpoint metadata is invalid: {path}: {exc}") from exc

    try:
        model.store.restore(snapshot)
    except (DataValidationError, ValueError) as exc:
        raise CheckpointError(f"Checkpoint arrays do not match the model: {exc}") from exc
    return LoadedCheckpoint(
        model=model, seed=int(payload["seed"]), train_config=train_config, split=split
    )
