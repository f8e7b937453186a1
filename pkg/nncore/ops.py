"""
Differentiable operators.

Layout is NCHW throughout. Each op validates its shapes, computes the
forward value with numpy and records a closure for the backward pass.
"""
from typing import Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from common.errors import ArgumentError, DegenerateVarianceError
from .tensor import Tensor

PROBABILITY_FLOOR = 1e-12
BN_EPSILON = 1e-5
BN_MOMENTUM = 0.1


def _require_ndim(t: Tensor, ndim: int, op: str) -> None:
    if t.ndim != ndim:
        raise ArgumentError(f"{op}: expected a {ndim}-D tensor, got shape {t.shape}")


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, padding: int = 0, stride: int = 1) -> Tensor:
    """
    2-D cross-correlation.

    x: (N, C, H, W), weight: (F, C, k, k), bias: (F,)
    Output: (N, F, (H + 2p - k) // stride + 1, ...)
    """
    _require_ndim(x, 4, "conv2d")
    _require_ndim(weight, 4, "conv2d")
    n, c, h, w = x.shape
    f, wc, k, k2 = weight.shape
    if k != k2:
        raise ArgumentError(f"conv2d: kernel must be square, got {k}x{k2}")
    if wc != c:
        raise ArgumentError(f"conv2d: input has {c} channels, weights expect {wc}")
    if padding < 0 or stride < 1:
        raise ArgumentError(f"conv2d: bad padding {padding} / stride {stride}")
    if k > h + 2 * padding or k > w + 2 * padding:
        raise ArgumentError(f"conv2d: kernel {k} larger than padded input {h}x{w} (+{padding})")
    if bias is not None and bias.shape != (f,):
        raise ArgumentError(f"conv2d: bias shape {bias.shape}, expected ({f},)")

    padded = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(padded, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    out_h, out_w = windows.shape[2], windows.shape[3]
    out = np.tensordot(windows, weight.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.data[None, :, None, None]
    out = np.ascontiguousarray(out)

    w_data = weight.data

    def backward(g: np.ndarray):
        grad_w = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_padded = np.zeros_like(padded)
        row_end = stride * (out_h - 1) + 1
        col_end = stride * (out_w - 1) + 1
        for i in range(k):
            for j in range(k):
                contribution = np.tensordot(g, w_data[:, :, i, j], axes=([1], [0])).transpose(0, 3, 1, 2)
                grad_padded[:, :, i:i + row_end:stride, j:j + col_end:stride] += contribution
        grad_x = grad_padded[:, :, padding:padding + h, padding:padding + w]
        grad_b = g.sum(axis=(0, 2, 3)) if bias is not None else None
        return (np.ascontiguousarray(grad_x), grad_w, grad_b)

    parents = (x, weight, bias) if bias is not None else (x, weight)
    return Tensor.from_op(out, parents, backward, "conv2d")


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPSILON,
) -> Tensor:
    """
    Per-channel batch normalization.

    In training mode the batch statistics (biased variance) normalize the
    input and the running buffers are updated in place:
        running = (1 - momentum) * running + momentum * batch
    with the unbiased variance going into running_var. Eval mode uses the
    running buffers.

    Raises:
        DegenerateVarianceError: training mode with N*H*W < 2
    """
    _require_ndim(x, 4, "batch_norm")
    n, c, h, w = x.shape
    for name, t in (("gamma", gamma), ("beta", beta)):
        if t.shape != (c,):
            raise ArgumentError(f"batch_norm: {name} shape {t.shape}, expected ({c},)")
    axes = (0, 2, 3)
    count = n * h * w
    g_data = gamma.data[None, :, None, None]

    if training:
        if count < 2:
            raise DegenerateVarianceError(f"batch_norm needs at least 2 values per channel, got {count}")
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean
        running_var *= 1.0 - momentum
        running_var += momentum * var * (count / (count - 1))
    else:
        mean = running_mean.copy()
        var = running_var.copy()

    inv_std = (1.0 / np.sqrt(var + eps))[None, :, None, None]
    x_hat = (x.data - mean[None, :, None, None]) * inv_std
    out = g_data * x_hat + beta.data[None, :, None, None]

    def backward(g: np.ndarray):
        grad_gamma = (g * x_hat).sum(axis=axes)
        grad_beta = g.sum(axis=axes)
        d_hat = g * g_data
        if training:
            grad_x = inv_std / count * (
                count * d_hat
                - d_hat.sum(axis=axes, keepdims=True)
                - x_hat * (d_hat * x_hat).sum(axis=axes, keepdims=True)
            )
        else:
            grad_x = d_hat * inv_std
        return (grad_x, grad_gamma, grad_beta)

    return Tensor.from_op(out, (x, gamma, beta), backward, "batch_norm")


def relu(x: Tensor) -> Tensor:
    active = x.data > 0
    out = np.where(active, x.data, 0.0).astype(x.dtype, copy=False)
    return Tensor.from_op(out, (x,), lambda g: (np.where(active, g, 0.0).astype(g.dtype, copy=False),), "relu")


def max_pool2d(x: Tensor) -> Tensor:
    """2x2 max pooling with stride 2; ties go to the first maximum in row-major order."""
    _require_ndim(x, 4, "max_pool2d")
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ArgumentError(f"max_pool2d needs even spatial dims, got {h}x{w}")
    blocks = (
        x.data.reshape(n, c, h // 2, 2, w // 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, h // 2, w // 2, 4)
    )
    index = blocks.argmax(axis=-1)[..., None]
    out = np.take_along_axis(blocks, index, axis=-1)[..., 0]

    def backward(g: np.ndarray):
        grad_blocks = np.zeros(blocks.shape, dtype=g.dtype)
        np.put_along_axis(grad_blocks, index, g[..., None], axis=-1)
        grad_x = (
            grad_blocks.reshape(n, c, h // 2, w // 2, 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, h, w)
        )
        return (grad_x,)

    return Tensor.from_op(out, (x,), backward, "max_pool2d")


def transposed_conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """
    Transposed convolution with kernel 2 and stride 2 (exact 2x upsampling).

    x: (N, Cin, H, W), weight: (Cin, Cout, 2, 2), bias: (Cout,)
    Output: (N, Cout, 2H, 2W)
    """
    _require_ndim(x, 4, "transposed_conv2d")
    _require_ndim(weight, 4, "transposed_conv2d")
    n, c_in, h, w = x.shape
    if weight.shape[0] != c_in or weight.shape[2:] != (2, 2):
        raise ArgumentError(f"transposed_conv2d: weights {weight.shape} do not fit input {x.shape}")
    c_out = weight.shape[1]
    if bias is not None and bias.shape != (c_out,):
        raise ArgumentError(f"transposed_conv2d: bias shape {bias.shape}, expected ({c_out},)")

    spread = np.tensordot(x.data, weight.data, axes=([1], [0]))  # (N, H, W, Cout, 2, 2)
    out = spread.transpose(0, 3, 1, 4, 2, 5).reshape(n, c_out, 2 * h, 2 * w)
    if bias is not None:
        out = out + bias.data[None, :, None, None]
    out = np.ascontiguousarray(out)
    x_data, w_data = x.data, weight.data

    def backward(g: np.ndarray):
        g_blocks = g.reshape(n, c_out, h, 2, w, 2).transpose(0, 2, 4, 1, 3, 5)
        grad_x = np.tensordot(g_blocks, w_data, axes=([3, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
        grad_w = np.tensordot(x_data, g_blocks, axes=([0, 2, 3], [0, 1, 2]))
        grad_b = g.sum(axis=(0, 2, 3)) if bias is not None else None
        return (np.ascontiguousarray(grad_x), grad_w, grad_b)

    parents = (x, weight, bias) if bias is not None else (x, weight)
    return Tensor.from_op(out, parents, backward, "transposed_conv2d")


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    """Concatenate along the channel axis (skip connections)."""
    if not tensors:
        raise ArgumentError("concat needs at least one tensor")
    reference = tensors[0].shape
    for t in tensors[1:]:
        if t.ndim != len(reference) or t.shape[:axis] + t.shape[axis + 1:] != reference[:axis] + reference[axis + 1:]:
            raise ArgumentError(f"concat: shapes {reference} and {t.shape} differ off axis {axis}")
    out = np.concatenate([t.data for t in tensors], axis=axis)
    cuts = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return Tensor.from_op(out, tuple(tensors), lambda g: tuple(np.split(g, cuts, axis=axis)), "concat")


def softmax(x: Tensor, axis: int = 1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=axis, keepdims=True)

    def backward(g: np.ndarray):
        return (probs * (g - (g * probs).sum(axis=axis, keepdims=True)),)

    return Tensor.from_op(probs, (x,), backward, "softmax")


def cross_entropy(probs: Tensor, target: Union[Tensor, np.ndarray]) -> Tensor:
    """
    Mean pixel-wise cross entropy between class probabilities and a target
    distribution, both (N, 2, H, W).

        -(1 / (N*H*W)) * sum(target * log(max(probs, 1e-12)))

    The target is a constant: hard one-hot masks or soft teacher
    probabilities. Only `probs` receives a gradient.
    """
    target_data = target.data if isinstance(target, Tensor) else np.asarray(target)
    _require_ndim(probs, 4, "cross_entropy")
    if probs.shape[1] != 2:
        raise ArgumentError(f"cross_entropy: class axis must have size 2, got {probs.shape[1]}")
    if target_data.shape != probs.shape:
        raise ArgumentError(f"cross_entropy: target shape {target_data.shape} differs from {probs.shape}")
    target_data = target_data.astype(probs.dtype, copy=False)

    n, _, h, w = probs.shape
    count = n * h * w
    clamped = np.maximum(probs.data, PROBABILITY_FLOOR)
    loss = -(target_data * np.log(clamped)).sum() / count
    active = (target_data != 0) & (probs.data >= PROBABILITY_FLOOR)

    def backward(g: np.ndarray):
        # inactive entries are exactly +0.0
        grad = np.where(active, g * (-target_data / (clamped * count)), 0.0)
        return (grad.astype(probs.dtype, copy=False),)

    return Tensor.from_op(np.asarray(loss, dtype=probs.dtype), (probs,), backward, "cross_entropy")


def one_hot_mask(labels: np.ndarray, dtype=np.float64) -> np.ndarray:
    """(N, H, W) 0/1 labels -> (N, 2, H, W) one-hot, class order [healthy, tumor]."""
    labels = np.asarray(labels)
    if labels.ndim != 3:
        raise ArgumentError(f"one_hot_mask expects (N, H, W) labels, got {labels.shape}")
    tumor = (labels != 0).astype(dtype)
    return np.stack([1.0 - tumor, tumor], axis=1).astype(dtype, copy=False)
