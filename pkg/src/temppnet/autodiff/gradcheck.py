from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from temppnet.autodiff.tensor import Tensor, backward

DEFAULT_STEP = 1e-5


@dataclass(frozen=True, slots=True)
class GradcheckResult:
    max_rel_error: float
    worst_input: int
    worst_index: tuple[int, ...]


def numerical_grad(
    fn: Callable[[], Tensor],
    target: Tensor,
    *,
    step: float = DEFAULT_STEP,
) -> np.ndarray:
    """Central differences of the scalar ``fn()`` with respect to every entry of ``target``."""

    base = np.array(target.data, copy=True)
    grad = np.zeros_like(base)
    try:
        for idx in np.ndindex(base.shape):
            shifted = base.copy()
            shifted[idx] = base[idx] + step
            target.assign(shifted)
            f_plus = fn().item()
            shifted[idx] = base[idx] - step
            target.assign(shifted)
            f_minus = fn().item()
            grad[idx] = (f_plus - f_minus) / (2.0 * step)
    finally:
        target.assign(base)
    return grad


def gradcheck(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    *,
    step: float = DEFAULT_STEP,
    floor: float = 1e-3,
) -> GradcheckResult:
    """Compare reverse-mode gradients of ``fn`` against central differences.

    The error of each entry is ``|analytic - numeric| / max(|analytic|, |numeric|, floor)``.
    """

    for t in inputs:
        t.zero_grad()
    backward(fn())
    analytic = [np.zeros(t.shape) if t.grad is None else np.array(t.grad) for t in inputs]

    worst = GradcheckResult(0.0, -1, ())
    for pos, (t, a) in enumerate(zip(inputs, analytic, strict=True)):
        n = numerical_grad(fn, t, step=step)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        rel = np.abs(a - n) / denom
        if rel.size and float(rel.max()) > worst.max_rel_error:
            flat = int(np.argmax(rel))
            worst = GradcheckResult(
                float(rel.max()), pos, tuple(int(i) for i in np.unravel_index(flat, rel.shape))
            )
    return worst
