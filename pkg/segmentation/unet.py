"""
UNet Segmentation Model

Three contracting blocks, three expanding blocks, skip connections by
channel concatenation, and a 1x1 head to two class probabilities
(class order [healthy, tumor]).

    down1: DoubleConv(in -> w)      -> skip1, pool
    down2: DoubleConv(w -> 2w)      -> skip2, pool
    down3: DoubleConv(2w -> 4w)     -> skip3, pool
    up1:   TConv(4w -> 4w), concat skip3, DoubleConv(8w -> 4w)
    up2:   TConv(4w -> 2w), concat skip2, DoubleConv(4w -> 2w)
    up3:   TConv(2w -> w),  concat skip1, DoubleConv(2w -> w)
    head:  Conv1x1(w -> 2), softmax

DoubleConv is two rounds of 3x3 conv (padding 1), batch norm and ReLU.
Student and teacher share this topology; only in_channels differs.
"""
import logging
from collections import OrderedDict
from pathlib import Path
from typing import Dict, List, Literal, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from common.errors import ArgumentError, ChannelMismatchError, CheckpointError
from common.rng import derive_rng
from imaging import GrayImage, MaskImage
from nncore import (
    Tensor,
    batch_norm,
    concat,
    conv2d,
    load_checkpoint,
    max_pool2d,
    no_grad,
    relu,
    save_checkpoint,
    softmax,
    transposed_conv2d,
)

logger = logging.getLogger(__name__)

Precision = Literal["float32", "float64"]
Mode = Literal["train", "eval"]

POOLING_FACTOR = 8
DOWN_BLOCKS = ("down1", "down2", "down3")
UP_BLOCKS = ("up1", "up2", "up3")


class UNetConfig(BaseModel):
    """Architecture hyperparameters; depth, kernel and class count are fixed."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    in_channels: Literal[1, 3] = 1
    base_width: int = Field(16, ge=1)
    depth: Literal[3] = 3
    kernel: Literal[3] = 3
    class_count: Literal[2] = 2


def _double_conv_shapes(prefix: str, c_in: int, c_out: int, k: int) -> List[Tuple[str, tuple]]:
    return [
        (f"{prefix}.conv1.weight", (c_out, c_in, k, k)),
        (f"{prefix}.conv1.bias", (c_out,)),
        (f"{prefix}.bn1.gamma", (c_out,)),
        (f"{prefix}.bn1.beta", (c_out,)),
        (f"{prefix}.conv2.weight", (c_out, c_out, k, k)),
        (f"{prefix}.conv2.bias", (c_out,)),
        (f"{prefix}.bn2.gamma", (c_out,)),
        (f"{prefix}.bn2.beta", (c_out,)),
    ]


def _widths(config: UNetConfig) -> Tuple[int, int, int]:
    w = config.base_width
    return w, 2 * w, 4 * w


def parameter_shapes(config: UNetConfig) -> "OrderedDict[str, tuple]":
    """Every trainable parameter's shape, derived from the config alone."""
    w1, w2, w4 = _widths(config)
    k = config.kernel
    shapes: List[Tuple[str, tuple]] = []
    shapes += _double_conv_shapes("down1", config.in_channels, w1, k)
    shapes += _double_conv_shapes("down2", w1, w2, k)
    shapes += _double_conv_shapes("down3", w2, w4, k)
    for name, c_in, c_out, skip in (("up1", w4, w4, w4), ("up2", w4, w2, w2), ("up3", w2, w1, w1)):
        shapes.append((f"{name}.tconv.weight", (c_in, c_out, 2, 2)))
        shapes.append((f"{name}.tconv.bias", (c_out,)))
        shapes += _double_conv_shapes(name, c_out + skip, c_out, k)
    shapes.append(("head.weight", (config.class_count, w1, 1, 1)))
    shapes.append(("head.bias", (config.class_count,)))
    return OrderedDict(shapes)


def buffer_shapes(config: UNetConfig) -> "OrderedDict[str, tuple]":
    """Batch-norm running statistics."""
    buffers = OrderedDict()
    for name, shape in parameter_shapes(config).items():
        if name.endswith(".gamma"):
            stem = name[: -len(".gamma")]
            buffers[f"{stem}.running_mean"] = shape
            buffers[f"{stem}.running_var"] = shape
    return buffers


class UNetModel:
    """Named parameters plus batch-norm buffers for one UNetConfig."""

    def __init__(self, config: UNetConfig, params: Dict[str, Tensor], buffers: Dict[str, np.ndarray]):
        self.config = config
        self.params: "OrderedDict[str, Tensor]" = OrderedDict(params)
        self.buffers: "OrderedDict[str, np.ndarray]" = OrderedDict(buffers)

    @property
    def in_channels(self) -> int:
        return self.config.in_channels

    @property
    def precision(self) -> str:
        first = next(iter(self.params.values()))
        return str(first.dtype)

    def state_arrays(self) -> "OrderedDict[str, np.ndarray]":
        """Parameters then buffers, in declaration order."""
        state = OrderedDict((name, p.data) for name, p in self.params.items())
        state.update(self.buffers)
        return state

    def copy(self) -> "UNetModel":
        params = OrderedDict((n, Tensor(p.data.copy(), requires_grad=p.requires_grad)) for n, p in self.params.items())
        buffers = OrderedDict((n, b.copy()) for n, b in self.buffers.items())
        return UNetModel(self.config, params, buffers)

    def astype(self, precision: Precision) -> "UNetModel":
        dtype = np.dtype(precision)
        params = OrderedDict(
            (n, Tensor(p.data.astype(dtype), requires_grad=p.requires_grad)) for n, p in self.params.items()
        )
        buffers = OrderedDict((n, b.astype(dtype)) for n, b in self.buffers.items())
        return UNetModel(self.config, params, buffers)

    def freeze(self) -> "UNetModel":
        for p in self.params.values():
            p.requires_grad = False
            p.grad = None
        return self

    def __call__(self, x, mode: Mode = "eval") -> Tensor:
        return forward(self, x, mode)

    def __repr__(self) -> str:
        return f"<UNetModel(in={self.config.in_channels}, w={self.config.base_width}, {self.precision})>"


def init_model(config: UNetConfig, seed: int, precision: Precision = "float64") -> UNetModel:
    """
    Fresh model: He fan-in normal weights, zero biases, BN gamma=1 / beta=0,
    running mean 0 / var 1.

    Every parameter draws from its own stream derived from (seed, name), so
    models that differ only in in_channels differ only in down1.conv1.weight.
    """
    dtype = np.dtype(precision)
    params = OrderedDict()
    for name, shape in parameter_shapes(config).items():
        if name.endswith(".gamma"):
            values = np.ones(shape)
        elif name.endswith(".beta") or name.endswith(".bias"):
            values = np.zeros(shape)
        else:
            fan_in = shape[0] if ".tconv." in name else int(np.prod(shape[1:]))
            values = derive_rng(seed, name).normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
        params[name] = Tensor(values.astype(dtype), requires_grad=True)
    buffers = OrderedDict(
        (name, (np.zeros(shape) if name.endswith("running_mean") else np.ones(shape)).astype(dtype))
        for name, shape in buffer_shapes(config).items()
    )
    return UNetModel(config, params, buffers)


def _double_conv(model: UNetModel, prefix: str, x: Tensor, training: bool) -> Tensor:
    p, b = model.params, model.buffers
    for i in (1, 2):
        x = conv2d(x, p[f"{prefix}.conv{i}.weight"], p[f"{prefix}.conv{i}.bias"], padding=1)
        x = batch_norm(
            x,
            p[f"{prefix}.bn{i}.gamma"],
            p[f"{prefix}.bn{i}.beta"],
            b[f"{prefix}.bn{i}.running_mean"],
            b[f"{prefix}.bn{i}.running_var"],
            training=training,
        )
        x = relu(x)
    return x


def forward(model: UNetModel, x: Union[Tensor, np.ndarray], mode: Mode = "eval") -> Tensor:
    """
    Per-pixel class probabilities (N, 2, H, W).

    Raises:
        ChannelMismatchError: input channels differ from config.in_channels
        ArgumentError: not 4-D, or H/W not divisible by 8
    """
    if mode not in ("train", "eval"):
        raise ArgumentError(f"Unknown mode: {mode}")
    if not isinstance(x, Tensor):
        x = Tensor(np.asarray(x, dtype=model.precision))
    if x.ndim != 4:
        raise ArgumentError(f"UNet input must be (N, C, H, W), got {x.shape}")
    if x.shape[1] != model.in_channels:
        raise ChannelMismatchError(f"Model takes {model.in_channels} channel(s), got {x.shape[1]}")
    if x.shape[2] % POOLING_FACTOR or x.shape[3] % POOLING_FACTOR:
        raise ArgumentError(f"Spatial dims must be divisible by {POOLING_FACTOR}, got {x.shape[2]}x{x.shape[3]}")
    if x.dtype != np.dtype(model.precision):
        x = Tensor(x.data.astype(model.precision))

    training = mode == "train"
    p = model.params
    skips = []
    for block in DOWN_BLOCKS:
        x = _double_conv(model, block, x, training)
        skips.append(x)
        x = max_pool2d(x)
    for block, skip in zip(UP_BLOCKS, reversed(skips)):
        x = transposed_conv2d(x, p[f"{block}.tconv.weight"], p[f"{block}.tconv.bias"])
        x = concat([x, skip], axis=1)
        x = _double_conv(model, block, x, training)
    logits = conv2d(x, p["head.weight"], p["head.bias"])
    return softmax(logits, axis=1)


# =============================================================================
# INFERENCE
# =============================================================================

def stack_inputs(items: Sequence) -> np.ndarray:
    """(N, C, H, W) batch from GrayImages (C=1) or 3-channel stacks."""
    arrays = []
    for item in items:
        if isinstance(item, GrayImage):
            arrays.append(item.data[None])
        elif hasattr(item, "stack"):
            arrays.append(item.stack())
        else:
            arrays.append(np.asarray(item))
    return np.stack(arrays)


def predict_masks(model: UNetModel, inputs: Union[np.ndarray, Sequence], batch_size: int = 16) -> List[MaskImage]:
    """Argmax masks in eval mode; ties go to healthy."""
    batch = inputs if isinstance(inputs, np.ndarray) else stack_inputs(inputs)
    masks: List[MaskImage] = []
    with no_grad():
        for start in range(0, len(batch), batch_size):
            probs = forward(model, batch[start:start + batch_size], mode="eval").data
            labels = (probs[:, 1] > probs[:, 0]).astype(np.uint8)
            masks.extend(MaskImage(label) for label in labels)
    return masks


# =============================================================================
# CHECKPOINTS
# =============================================================================

def save_model(model: UNetModel, path: Union[str, Path]) -> Path:
    return save_checkpoint(path, model.state_arrays(), model.config.model_dump(), model.precision)


def load_model(path: Union[str, Path]) -> UNetModel:
    """
    Raises:
        CheckpointError: missing arrays or shapes that contradict the header config
    """
    header, arrays = load_checkpoint(path)
    config = UNetConfig.model_validate(header.model)
    expected = OrderedDict(parameter_shapes(config))
    expected.update(buffer_shapes(config))
    if list(arrays) != list(expected):
        raise CheckpointError(f"{path}: array names do not match a UNet with {config}")
    for name, shape in expected.items():
        if arrays[name].shape != shape:
            raise CheckpointError(f"{path}: '{name}' has shape {arrays[name].shape}, expected {shape}")
    params = OrderedDict((n, Tensor(arrays[n], requires_grad=True)) for n in parameter_shapes(config))
    buffers = OrderedDict((n, arrays[n]) for n in buffer_shapes(config))
    logger.info("Loaded model", extra={"path": str(path), "in_channels": config.in_channels, "precision": header.precision})
    return UNetModel(config, params, buffers)
