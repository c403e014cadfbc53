from __future__ import annotations

from collections.abc import Iterator
from typing import Any

import numpy as np

from temppnet.autodiff.tensor import Tensor
from temppnet.errors import DataValidationError


class ParameterStore:
    """Named learnable tensors and non-learnable buffers in registration order.

    The optimizer, the checkpoint writer and snapshot/restore all iterate this
    registry, so every array is registered exactly once.
    """

    def __init__(self) -> None:
        self._params: dict[str, Tensor] = {}
        self._buffers: dict[str, np.ndarray] = {}

    def add(self, name: str, values: Any) -> Tensor:
        if name in self._params or name in self._buffers:
            raise DataValidationError(f"parameter {name!r} registered twice")
        tensor = Tensor(values, requires_grad=True, name=name)
        self._params[name] = tensor
        return tensor

    def add_buffer(self, name: str, values: Any) -> None:
        if name in self._params or name in self._buffers:
            raise DataValidationError(f"buffer {name!r} registered twice")
        self._buffers[name] = np.array(values, dtype=np.float64, copy=True)

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: object) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def items(self) -> list[tuple[str, Tensor]]:
        return list(self._params.items())

    @property
    def params(self) -> dict[str, Tensor]:
        return dict(self._params)

    def buffer(self, name: str) -> np.ndarray:
        return self._buffers[name]

    def set_buffer(self, name: str, values: np.ndarray) -> None:
        if name not in self._buffers:
            raise DataValidationError(f"unknown buffer {name!r}")
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.shape != self._buffers[name].shape:
            raise DataValidationError(
                f"buffer {name!r}: shape {arr.shape} != {self._buffers[name].shape}"
            )
        self._buffers[name] = arr

    @property
    def buffers(self) -> dict[str, np.ndarray]:
        return dict(self._buffers)

    def zero_grad(self) -> None:
        for tensor in self._params.values():
            tensor.zero_grad()

    def snapshot(self) -> dict[str, dict[str, np.ndarray]]:
        return {
            "parameters": {k: np.array(v.data, copy=True) for k, v in self._params.items()},
            "buffers": {k: v.copy() for k, v in self._buffers.items()},
        }

    def restore(self, snapshot: dict[str, dict[str, np.ndarray]]) -> None:
        params, buffers = snapshot["parameters"], snapshot["buffers"]
        if set(params) != set(self._params) or set(buffers) != set(self._buffers):
            raise DataValidationError("snapshot does not match the registered parameters")
        for name, values in params.items():
            self._params[name].assign(values)
        for name, values in buffers.items():
            self.set_buffer(name, values)

    def n_values(self) -> int:
        return int(sum(t.data.size for t in self._params.values()))
