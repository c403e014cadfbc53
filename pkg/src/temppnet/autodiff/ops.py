"""Differentiable operations.

Every op computes its forward value with numpy, checks its shape contract and
records a node whose closure maps the output gradient to one gradient per parent.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import Any

import numpy as np
from scipy import special

from temppnet.autodiff.tensor import Tensor, as_tensor, record
from temppnet.errors import ShapeError

LEAKY_SLOPE = 0.01
BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""

    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op_kind: str, a: Tensor, b: Tensor) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op_kind, a.shape, b.shape) from None


# ---------------------------------------------------------------------------
# Elementwise arithmetic


def add(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)

    def _backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)

    return record(a.data + b.data, "add", (a, b), _backward)


def sub(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a, b)

    def _backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return unbroadcast(g, a.shape), unbroadcast(-g, b.shape)

    return record(a.data - b.data, "sub", (a, b), _backward)


def mul(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a, b)

    def _backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)

    return record(a.data * b.data, "mul", (a, b), _backward)


def neg(a: Any) -> Tensor:
    a = as_tensor(a)
    return record(-a.data, "neg", (a,), lambda g: (-g,))


def square(a: Any) -> Tensor:
    a = as_tensor(a)
    return record(a.data * a.data, "square", (a,), lambda g: (2.0 * a.data * g,))


def exp(a: Any) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return record(out, "exp", (a,), lambda g: (g * out,))


def log(a: Any) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data <= 0.0):
        raise ValueError("log: input must be strictly positive")
    return record(np.log(a.data), "log", (a,), lambda g: (g / a.data,))


def cos(a: Any) -> Tensor:
    a = as_tensor(a)
    return record(np.cos(a.data), "cos", (a,), lambda g: (-g * np.sin(a.data),))


def sin(a: Any) -> Tensor:
    a = as_tensor(a)
    return record(np.sin(a.data), "sin", (a,), lambda g: (g * np.cos(a.data),))


def tanh(a: Any) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return record(out, "tanh", (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a: Any) -> Tensor:
    a = as_tensor(a)
    out = special.expit(a.data)
    return record(out, "sigmoid", (a,), lambda g: (g * out * (1.0 - out),))


def log_sigmoid(a: Any) -> Tensor:
    """log(sigmoid(a)) without overflow for large negative inputs."""

    a = as_tensor(a)
    out = -np.logaddexp(0.0, -a.data)
    return record(out, "log_sigmoid", (a,), lambda g: (g * special.expit(-a.data),))


def logit(a: Any) -> Tensor:
    a = as_tensor(a)
    x = a.data
    if np.any((x <= 0.0) | (x >= 1.0)):
        raise ValueError("logit: input must lie strictly inside (0, 1)")
    return record(special.logit(x), "logit", (a,), lambda g: (g / (x * (1.0 - x)),))


def clip(a: Any, lo: float, hi: float) -> Tensor:
    a = as_tensor(a)
    mask = (a.data >= lo) & (a.data <= hi)
    return record(np.clip(a.data, lo, hi), "clip", (a,), lambda g: (g * mask,))


def leaky_relu(a: Any, slope: float = LEAKY_SLOPE) -> Tensor:
    a = as_tensor(a)
    positive = a.data > 0.0
    out = np.where(positive, a.data, slope * a.data)
    return record(out, "leaky_relu", (a,), lambda g: (np.where(positive, g, slope * g),))


# ---------------------------------------------------------------------------
# Reductions and structure


def sum_(a: Any, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return record(out, "sum", (a,), _backward)


def mean(a: Any, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        count = a.data.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([a.shape[ax] for ax in axes]))
    if count == 0:
        raise ShapeError("mean", a.shape, detail="empty reduction")
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / count)


def max_(a: Any, axis: int) -> Tensor:
    """Maximum over one axis; the gradient goes to the first (lowest-index) maximum."""

    a = as_tensor(a)
    if not -a.ndim <= axis < a.ndim or a.shape[axis] == 0:
        raise ShapeError("max", a.shape, detail=f"axis={axis}")
    idx = np.argmax(a.data, axis=axis)
    out = np.take_along_axis(a.data, np.expand_dims(idx, axis), axis=axis).squeeze(axis)

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        full = np.zeros(a.shape, dtype=np.float64)
        np.put_along_axis(full, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis=axis)
        return (full,)

    return record(out, "max", (a,), _backward)


def concat(tensors: Sequence[Any], axis: int = 0) -> Tensor:
    parts = tuple(as_tensor(t) for t in tensors)
    if not parts:
        raise ShapeError("concat", detail="no inputs")
    try:
        out = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError:
        raise ShapeError("concat", *(p.shape for p in parts)) from None
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def _backward(g: np.ndarray) -> tuple[np.ndarray, ...]:
        return tuple(np.split(g, bounds, axis=axis))

    return record(out, "concat", parts, _backward)


def stack(tensors: Sequence[Any], axis: int = 0) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    return concat([reshape(p, _insert_axis(p.shape, axis)) for p in parts], axis=axis)


def _insert_axis(shape: tuple[int, ...], axis: int) -> tuple[int, ...]:
    pos = axis if axis >= 0 else len(shape) + axis + 1
    return shape[:pos] + (1,) + shape[pos:]


def slice_(a: Any, index: Any) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data[index]
    except IndexError:
        raise ShapeError("slice", a.shape, detail=f"index={index!r}") from None

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        full = np.zeros(a.shape, dtype=np.float64)
        np.add.at(full, index, g)
        return (full,)

    return record(np.array(out, dtype=np.float64), "slice", (a,), _backward)


def reshape(a: Any, shape: tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", a.shape, tuple(shape)) from None
    return record(out, "reshape", (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Any, axes: tuple[int, ...] | None = None) -> Tensor:
    a = as_tensor(a)
    perm = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    if sorted(perm) != list(range(a.ndim)):
        raise ShapeError("transpose", a.shape, detail=f"axes={perm}")
    inverse = tuple(np.argsort(perm))
    return record(a.data.transpose(perm), "transpose", (a,), lambda g: (g.transpose(inverse),))


# ---------------------------------------------------------------------------
# Linear algebra and layers


def matmul(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim == 0 or b.ndim == 0 or a.ndim > 3 or b.ndim > 3:
        raise ShapeError("matmul", a.shape, b.shape)
    a2 = a.data[None, :] if a.ndim == 1 else a.data
    b2 = b.data[:, None] if b.ndim == 1 else b.data
    if a2.shape[-1] != b2.shape[-2]:
        raise ShapeError("matmul", a.shape, b.shape)
    try:
        out2 = np.matmul(a2, b2)
    except ValueError:
        raise ShapeError("matmul", a.shape, b.shape) from None
    out = out2
    if b.ndim == 1:
        out = out[..., 0]
    if a.ndim == 1:
        out = out[..., 0, :] if b.ndim > 1 else out[..., 0]

    def _backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g2 = g.reshape(out2.shape)
        ga = np.matmul(g2, np.swapaxes(b2, -1, -2))
        gb = np.matmul(np.swapaxes(a2, -1, -2), g2)
        ga = unbroadcast(ga, a2.shape).reshape(a.shape)
        gb = unbroadcast(gb, b2.shape).reshape(b.shape)
        return ga, gb

    return record(out, "matmul", (a, b), _backward)


def conv1d(x: Any, weight: Any, bias: Any | None = None) -> Tensor:
    """Valid (unpadded) stride-1 cross-correlation.

    ``x`` is (C_in, L) or (B, C_in, L); ``weight`` is (C_out, C_in, K); output length L - K + 1.
    """

    x, weight = as_tensor(x), as_tensor(weight)
    batched = x.ndim == 3
    if x.ndim not in (2, 3) or weight.ndim != 3:
        raise ShapeError("conv1d", x.shape, weight.shape)
    xd = x.data if batched else x.data[None]
    c_out, c_in, k = weight.shape
    length = xd.shape[-1]
    if xd.shape[1] != c_in or length < k:
        raise ShapeError("conv1d", x.shape, weight.shape)
    l_out = length - k + 1
    w = weight.data

    out = np.zeros((xd.shape[0], c_out, l_out), dtype=np.float64)
    for j in range(k):
        out += np.matmul(w[:, :, j], xd[:, :, j : j + l_out])

    parents: tuple[Tensor, ...] = (x, weight)
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (c_out,):
            raise ShapeError("conv1d", weight.shape, bias.shape, detail="bias")
        out += bias.data[None, :, None]
        parents = (x, weight, bias)

    def _backward(g: np.ndarray) -> tuple[np.ndarray, ...]:
        g3 = g if batched else g[None]
        gx = np.zeros_like(xd)
        gw = np.zeros_like(w)
        for j in range(k):
            gx[:, :, j : j + l_out] += np.matmul(w[:, :, j].T, g3)
            gw[:, :, j] = np.tensordot(g3, xd[:, :, j : j + l_out], axes=([0, 2], [0, 2]))
        grads: list[np.ndarray] = [gx if batched else gx[0], gw]
        if bias is not None:
            grads.append(g3.sum(axis=(0, 2)))
        return tuple(grads)

    return record(out if batched else out[0], "conv1d", parents, _backward)


def maxpool1d(x: Any, window: int = 2) -> Tensor:
    """Non-overlapping max pool along the last axis; trailing samples are dropped."""

    x = as_tensor(x)
    length = x.shape[-1] if x.ndim else 0
    l_out = length // window
    if x.ndim < 1 or l_out == 0:
        raise ShapeError("maxpool1d", x.shape, detail=f"window={window}")
    blocks = x.data[..., : l_out * window].reshape(*x.shape[:-1], l_out, window)
    idx = np.argmax(blocks, axis=-1)
    out = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        gb = np.zeros(blocks.shape, dtype=np.float64)
        np.put_along_axis(gb, idx[..., None], g[..., None], axis=-1)
        full = np.zeros(x.shape, dtype=np.float64)
        full[..., : l_out * window] = gb.reshape(*x.shape[:-1], l_out * window)
        return (full,)

    return record(out, "maxpool1d", (x,), _backward)


def batchnorm1d(
    x: Any,
    gamma: Any,
    beta: Any,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    *,
    training: bool,
    eps: float = BN_EPS,
) -> tuple[Tensor, np.ndarray, np.ndarray]:
    """Per-channel normalization of (B, C, L) input.

    Training mode normalizes with the biased batch variance over (B, L) and returns
    ``(out, batch_mean, unbiased_batch_var)`` so the caller can update its running
    buffers. Eval mode uses the running statistics and returns them unchanged.
    """

    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if x.ndim != 3 or gamma.shape != (x.shape[1],) or beta.shape != (x.shape[1],):
        raise ShapeError("batchnorm1d", x.shape, gamma.shape, beta.shape)
    g_ = gamma.data[None, :, None]

    if training:
        n = x.shape[0] * x.shape[2]
        mu = x.data.mean(axis=(0, 2))
        var = x.data.var(axis=(0, 2))
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = (x.data - mu[None, :, None]) * inv_std[None, :, None]
        unbiased = var * n / (n - 1) if n > 1 else var.copy()

        def _backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
            sum_g = g.sum(axis=(0, 2), keepdims=True)
            sum_gx = (g * xhat).sum(axis=(0, 2), keepdims=True)
            scale = g_ * inv_std[None, :, None] / n
            gx = scale * (n * g - sum_g - xhat * sum_gx)
            return gx, sum_gx.reshape(-1), sum_g.reshape(-1)

        out = g_ * xhat + beta.data[None, :, None]
        return record(out, "batchnorm1d", (x, gamma, beta), _backward), mu, unbiased

    if running_mean.shape != (x.shape[1],) or running_var.shape != (x.shape[1],):
        raise ShapeError("batchnorm1d", x.shape, running_mean.shape, running_var.shape)
    inv_std = 1.0 / np.sqrt(running_var + eps)
    xhat = (x.data - running_mean[None, :, None]) * inv_std[None, :, None]

    def _eval_backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            g * g_ * inv_std[None, :, None],
            (g * xhat).sum(axis=(0, 2)),
            g.sum(axis=(0, 2)),
        )

    out = g_ * xhat + beta.data[None, :, None]
    tensor = record(out, "batchnorm1d", (x, gamma, beta), _eval_backward)
    return tensor, running_mean, running_var


def gru_cell(
    x: Any,
    h: Any,
    w_ih: Any,
    w_hh: Any,
    b_ih: Any,
    b_hh: Any,
) -> Tensor:
    """One GRU step with reset, update and candidate gates stacked in that order.

    ``x`` is (I,) or (B, I); ``h`` is (H,) or (B, H); weights are (3H, I) and (3H, H).
    """

    x, h = as_tensor(x), as_tensor(h)
    w_ih, w_hh, b_ih, b_hh = (as_tensor(t) for t in (w_ih, w_hh, b_ih, b_hh))
    batched = x.ndim == 2
    xd = x.data if batched else x.data[None]
    hd = h.data if batched else h.data[None]
    hidden = hd.shape[-1]
    if (
        w_ih.shape != (3 * hidden, xd.shape[-1])
        or w_hh.shape != (3 * hidden, hidden)
        or b_ih.shape != (3 * hidden,)
        or b_hh.shape != (3 * hidden,)
        or xd.shape[0] != hd.shape[0]
    ):
        raise ShapeError("gru_cell", x.shape, h.shape, w_ih.shape, w_hh.shape)

    gi = xd @ w_ih.data.T + b_ih.data
    gh = hd @ w_hh.data.T + b_hh.data
    r = special.expit(gi[:, :hidden] + gh[:, :hidden])
    z = special.expit(gi[:, hidden : 2 * hidden] + gh[:, hidden : 2 * hidden])
    gh_n = gh[:, 2 * hidden :]
    n = np.tanh(gi[:, 2 * hidden :] + r * gh_n)
    out = (1.0 - z) * n + z * hd

    def _backward(g: np.ndarray) -> tuple[np.ndarray, ...]:
        g2 = g if batched else g[None]
        dn = g2 * (1.0 - z)
        dz = g2 * (hd - n)
        dn_pre = dn * (1.0 - n * n)
        dr_pre = dn_pre * gh_n * r * (1.0 - r)
        dz_pre = dz * z * (1.0 - z)
        dgi = np.concatenate([dr_pre, dz_pre, dn_pre], axis=1)
        dgh = np.concatenate([dr_pre, dz_pre, dn_pre * r], axis=1)
        dx = dgi @ w_ih.data
        dh = g2 * z + dgh @ w_hh.data
        if not batched:
            dx, dh = dx[0], dh[0]
        return dx, dh, dgi.T @ xd, dgh.T @ hd, dgi.sum(axis=0), dgh.sum(axis=0)

    return record(
        out if batched else out[0],
        "gru_cell",
        (x, h, w_ih, w_hh, b_ih, b_hh),
        _backward,
    )
