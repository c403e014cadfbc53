from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from temppnet.autodiff import ops
from temppnet.autodiff.tensor import Tensor, as_tensor, no_grad
from temppnet.config import ModelConfig
from temppnet.errors import DataValidationError, ShapeError
from temppnet.model.parameters import ParameterStore
from temppnet.sensors.records import SEGMENT_NAMES

POOL_WINDOW = 2
N_SEGMENTS = 3


@dataclass(frozen=True, slots=True)
class ReceptiveField:
    patch: int
    segment: int
    segment_name: str
    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def to_dict(self) -> dict[str, int | str]:
        return {
            "patch": self.patch,
            "segment": self.segment,
            "segment_name": self.segment_name,
            "start": self.start,
            "end": self.end,
        }


def shape_chain(config: ModelConfig) -> list[tuple[int, int]]:
    """(channels, length) after every conv and pool, from a (3, segment_length) input."""

    length = config.segment_length
    chain: list[tuple[int, int]] = []
    for block, c_out in enumerate(config.channels):
        length = length - config.kernel_size + 1
        chain.append((c_out, length))
        if block < len(config.channels) - 1:
            length //= POOL_WINDOW
            chain.append((c_out, length))
    return chain


def patches_per_segment(config: ModelConfig) -> int:
    return shape_chain(config)[-1][1]


def n_patches(config: ModelConfig) -> int:
    return N_SEGMENTS * patches_per_segment(config)


def receptive_field(o: int, config: ModelConfig | None = None) -> ReceptiveField:
    """Input interval of patch ``o`` (1-based, outbound patches first).

    Walks the conv/pool chain backwards from one output position.
    """

    cfg = config or ModelConfig()
    per_segment = patches_per_segment(cfg)
    total = N_SEGMENTS * per_segment
    if not 1 <= o <= total:
        raise DataValidationError(f"patch index must lie in 1..{total}, got {o}")
    segment = math.ceil(o / per_segment)
    position = (o - 1) % per_segment

    start = end = position
    n_blocks = len(cfg.channels)
    for block in reversed(range(n_blocks)):
        if block < n_blocks - 1:
            start, end = start * POOL_WINDOW, end * POOL_WINDOW + POOL_WINDOW - 1
        end = end + cfg.kernel_size - 1
    return ReceptiveField(
        patch=o,
        segment=segment,
        segment_name=SEGMENT_NAMES[segment - 1],
        start=start,
        end=end,
    )


class Encoder:
    """Shared-weight conv blocks; all but the last end in maxpool and leaky_relu."""

    def __init__(self, store: ParameterStore, config: ModelConfig, rng: np.random.Generator):
        self.store = store
        self.config = config
        k = config.kernel_size
        c_in = 3
        for block, c_out in enumerate(config.channels):
            bound = 1.0 / math.sqrt(c_in * k)
            store.add(f"encoder.conv{block}.weight", rng.uniform(-bound, bound, (c_out, c_in, k)))
            store.add(f"encoder.conv{block}.bias", rng.uniform(-bound, bound, (c_out,)))
            last = block == len(config.channels) - 1
            scale = config.final_bn_scale if last else 1.0
            store.add(f"encoder.bn{block}.gamma", np.full(c_out, scale))
            store.add(f"encoder.bn{block}.beta", np.zeros(c_out))
            store.add_buffer(f"encoder.bn{block}.running_mean", np.zeros(c_out))
            store.add_buffer(f"encoder.bn{block}.running_var", np.ones(c_out))
            c_in = c_out

    def forward_segments(
        self,
        segments: Tensor | np.ndarray,
        *,
        training: bool,
        update_stats: bool = True,
        trace: list[tuple[int, ...]] | None = None,
    ) -> Tensor:
        """(B, 3, L) shaped segments to (B, n_e, P) patch features."""

        x = as_tensor(segments)
        if x.ndim != 3 or x.shape[1:] != (3, self.config.segment_length):
            raise ShapeError("encode", x.shape, (-1, 3, self.config.segment_length))
        n_blocks = len(self.config.channels)
        for block in range(n_blocks):
            prefix = f"encoder.conv{block}"
            x = ops.conv1d(x, self.store[f"{prefix}.weight"], self.store[f"{prefix}.bias"])
            if trace is not None:
                trace.append(x.shape[1:])
            bn = f"encoder.bn{block}"
            x, mean, var = ops.batchnorm1d(
                x,
                self.store[f"{bn}.gamma"],
                self.store[f"{bn}.beta"],
                self.store.buffer(f"{bn}.running_mean"),
                self.store.buffer(f"{bn}.running_var"),
                training=training,
            )
            if training and update_stats:
                m = ops.BN_MOMENTUM
                self.store.set_buffer(
                    f"{bn}.running_mean",
                    (1 - m) * self.store.buffer(f"{bn}.running_mean") + m * mean,
                )
                self.store.set_buffer(
                    f"{bn}.running_var",
                    (1 - m) * self.store.buffer(f"{bn}.running_var") + m * var,
                )
            if block < n_blocks - 1:
                x = ops.maxpool1d(x, POOL_WINDOW)
                if trace is not None:
                    trace.append(x.shape[1:])
                x = ops.leaky_relu(x)
        return x

    def encode(
        self,
        tests: Tensor | np.ndarray,
        *,
        training: bool = False,
        update_stats: bool = True,
    ) -> Tensor:
        """(N, 3, 3, L) prepared tests to (N, n_o, n_e) patch embeddings.

        Patch order is outbound patches, then return, then rest.
        """

        x = as_tensor(tests)
        if x.ndim != 4 or x.shape[1:] != (N_SEGMENTS, 3, self.config.segment_length):
            raise ShapeError("encode", x.shape, (-1, N_SEGMENTS, 3, self.config.segment_length))
        n = x.shape[0]
        flat = ops.reshape(x, (n * N_SEGMENTS, 3, self.config.segment_length))
        h = self.forward_segments(flat, training=training, update_stats=update_stats)
        n_e, per_segment = h.shape[1], h.shape[2]
        h = ops.reshape(h, (n, N_SEGMENTS, n_e, per_segment))
        h = ops.transpose(h, (0, 1, 3, 2))
        return ops.reshape(h, (n, N_SEGMENTS * per_segment, n_e))

    def feature_matrix(self, test: np.ndarray) -> np.ndarray:
        """Eval-mode n_e x n_o feature matrix of one prepared (3, 3, L) test."""

        with no_grad():
            h = self.encode(np.asarray(test)[None], training=False)
        return np.array(h.data[0].T)
