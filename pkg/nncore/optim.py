"""
Optimizers over a named parameter set.

Both update `param.data` in place and keep their state keyed by parameter
name, so a model's parameter dict can be handed over as is.
"""
from typing import Dict, Mapping, Tuple

import numpy as np

from common.errors import ArgumentError
from .tensor import Tensor


class Optimizer:
    def __init__(self, params: Mapping[str, Tensor], lr: float):
        if lr <= 0:
            raise ArgumentError(f"Learning rate must be positive, got {lr}")
        self.params: Dict[str, Tensor] = dict(params)
        self.lr = lr
        self.steps = 0

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.grad = None

    def step(self) -> None:
        self.steps += 1
        for name, param in self.params.items():
            if param.grad is not None:
                self._update(name, param)

    def _update(self, name: str, param: Tensor) -> None:
        raise NotImplementedError


class SGDMomentum(Optimizer):
    """v = momentum * v + g;  p -= lr * v"""

    def __init__(self, params: Mapping[str, Tensor], lr: float, momentum: float = 0.9):
        super().__init__(params, lr)
        self.momentum = momentum
        self.velocity: Dict[str, np.ndarray] = {}

    def _update(self, name: str, param: Tensor) -> None:
        v = self.velocity.get(name)
        v = param.grad.copy() if v is None else self.momentum * v + param.grad
        self.velocity[name] = v
        param.data -= (self.lr * v).astype(param.dtype, copy=False)


class Adam(Optimizer):
    """Adam with bias-corrected first and second moments."""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        lr: float,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        super().__init__(params, lr)
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}
        self.t: Dict[str, int] = {}

    def _update(self, name: str, param: Tensor) -> None:
        g = param.grad
        m = self.m.get(name, np.zeros_like(param.data))
        v = self.v.get(name, np.zeros_like(param.data))
        t = self.t.get(name, 0) + 1
        m = self.beta1 * m + (1.0 - self.beta1) * g
        v = self.beta2 * v + (1.0 - self.beta2) * g * g
        self.m[name], self.v[name], self.t[name] = m, v, t
        m_hat = m / (1.0 - self.beta1 ** t)
        v_hat = v / (1.0 - self.beta2 ** t)
        param.data -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(param.dtype, copy=False)


def make_optimizer(name: str, params: Mapping[str, Tensor], lr: float, **kwargs) -> Optimizer:
    """Build an optimizer by config name: "adam" or "sgd-momentum"."""
    if name == "adam":
        return Adam(params, lr, betas=kwargs.get("betas", (0.9, 0.999)), eps=kwargs.get("eps", 1e-8))
    if name == "sgd-momentum":
        return SGDMomentum(params, lr, momentum=kwargs.get("momentum", 0.9))
    raise ArgumentError(f"Unknown optimizer: {name}")
