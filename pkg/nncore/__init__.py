"""
LupiSeg NN Core

A small reverse-mode differentiation engine on numpy: just the operators
a UNet and two cross-entropy losses need, a finite-difference gradient
checker, two optimizers and a deterministic checkpoint format.

Quick Start:
    from nncore import Tensor, conv2d, softmax, cross_entropy

    x = Tensor(np.ones((1, 1, 3, 3)))
    w = Tensor(np.ones((2, 1, 3, 3)), requires_grad=True)
    loss = cross_entropy(softmax(conv2d(x, w, padding=1)), target)
    loss.backward()
"""
from .tensor import Tensor, ComputationRecord, RecordEntry, no_grad, grad_enabled
from .ops import (
    PROBABILITY_FLOOR,
    conv2d,
    batch_norm,
    relu,
    max_pool2d,
    transposed_conv2d,
    concat,
    softmax,
    cross_entropy,
    one_hot_mask,
)
from .gradcheck import grad_check
from .optim import Optimizer, SGDMomentum, Adam, make_optimizer
from .checkpoint import CheckpointHeader, save_checkpoint, load_checkpoint, encode_checkpoint, decode_checkpoint

__all__ = [
    "Tensor",
    "ComputationRecord",
    "RecordEntry",
    "no_grad",
    "grad_enabled",
    "PROBABILITY_FLOOR",
    "conv2d",
    "batch_norm",
    "relu",
    "max_pool2d",
    "transposed_conv2d",
    "concat",
    "softmax",
    "cross_entropy",
    "one_hot_mask",
    "grad_check",
    "Optimizer",
    "SGDMomentum",
    "Adam",
    "make_optimizer",
    "CheckpointHeader",
    "save_checkpoint",
    "load_checkpoint",
    "encode_checkpoint",
    "decode_checkpoint",
]
