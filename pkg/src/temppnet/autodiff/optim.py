from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from temppnet.autodiff.tensor import Tensor
from temppnet.errors import NumericalError


@dataclass(slots=True)
class AdamState:
    """First/second moment estimates per parameter name plus the shared step count."""

    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray | None],
    state: AdamState,
    *,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """Bias-corrected Adam update.

    Every gradient is checked before anything is updated; a NaN aborts the step and
    names the offending parameter. A missing gradient counts as zero.
    """

    for name in params:
        g = grads.get(name)
        if g is not None and not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient for parameter {name!r}; step aborted")

    t = state.step + 1
    new_state = AdamState(step=t)
    updated: dict[str, np.ndarray] = {}
    for name, value in params.items():
        g = grads.get(name)
        g = np.zeros_like(value) if g is None else g
        m_prev = state.m.get(name, np.zeros_like(value))
        v_prev = state.v.get(name, np.zeros_like(value))
        m = beta1 * m_prev + (1.0 - beta1) * g
        v = beta2 * v_prev + (1.0 - beta2) * (g * g)
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        updated[name] = value - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_state.m[name] = m
        new_state.v[name] = v
    return updated, new_state


class Adam:
    def __init__(
        self,
        params: Mapping[str, Tensor],
        *,
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState()

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self) -> None:
        values = {name: p.data for name, p in self.params.items()}
        grads = {name: p.grad for name, p in self.params.items()}
        updated, self.state = adam_step(
            values,
            grads,
            self.state,
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
        )
        for name, value in updated.items():
            self.params[name].assign(value)
