"""
Finite-difference gradient checker.

Compares reverse-mode gradients against central differences
(f(x + h) - f(x - h)) / 2h, one coordinate at a time. Run in float64 only.
"""
import logging
from typing import Callable, Optional, Sequence

import numpy as np

from common.errors import ArgumentError, NumericError
from .tensor import Tensor, no_grad

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
# Relative error denominator floor for near-zero gradients
DEFAULT_FLOOR = 1e-6


def _checked(value: float, what: str) -> float:
    if not np.isfinite(value):
        raise NumericError(f"grad_check: non-finite {what} ({value})")
    return value


def grad_check(
    fn: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    step: float = DEFAULT_STEP,
    max_elements: Optional[int] = None,
    seed: int = 0,
    floor: float = DEFAULT_FLOOR,
) -> float:
    """
    Worst relative error between analytic and numeric gradients.

    fn(*inputs) must return a single-element Tensor. Relative error per
    coordinate is |a - n| / max(|a| + |n|, floor).

    Args:
        fn: Deterministic scalar function of the inputs
        inputs: float64 tensors; their requires_grad flag is switched on
        step: Finite-difference step h
        max_elements: Check at most this many (seeded) coordinates per input
        seed: Seed for coordinate sampling
        floor: Denominator floor

    Raises:
        ArgumentError: non-float64 input or non-scalar output
        NumericError: non-finite values in either gradient
    """
    for t in inputs:
        if t.dtype != np.float64:
            raise ArgumentError(f"grad_check runs in float64, got {t.dtype}")
        t.data = np.ascontiguousarray(t.data)
        t.requires_grad = True
        t.grad = None

    out = fn(*inputs)
    if out.data.size != 1:
        raise ArgumentError(f"grad_check needs a scalar function, got shape {out.shape}")
    _checked(out.item(), "function value")
    out.backward()

    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in inputs:
        analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
        if not np.all(np.isfinite(analytic)):
            raise NumericError("grad_check: non-finite analytic gradient")
        flat = t.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_elements is not None and flat.size > max_elements:
            coords = np.sort(rng.choice(flat.size, size=max_elements, replace=False))
        analytic_flat = analytic.reshape(-1)
        with no_grad():
            for i in coords:
                original = flat[i]
                flat[i] = original + step
                plus = _checked(fn(*inputs).item(), "function value")
                flat[i] = original - step
                minus = _checked(fn(*inputs).item(), "function value")
                flat[i] = original
                numeric = (plus - minus) / (2.0 * step)
                a = float(analytic_flat[i])
                error = abs(a - numeric) / max(abs(a) + abs(numeric), floor)
                worst = max(worst, error)

    logger.debug("grad_check done", extra={"max_relative_error": worst, "inputs": len(inputs)})
    return worst
