import numpy as np
import pytest

from common.errors import ArgumentError, NumericError
from nncore import Tensor, grad_check


def test_wrong_gradient_is_caught():
    def broken(x):
        # forward is x^2 but the recorded backward claims 3x
        return Tensor.from_op((x.data ** 2).sum(), (x,), lambda g: (3.0 * g * x.data,), "broken")

    x = Tensor(np.array([1.0, -2.0, 0.5]))
    assert grad_check(broken, [x]) > 0.1


def test_exact_gradient_passes():
    x = Tensor(np.array([1.0, -2.0, 0.5]))
    assert grad_check(lambda x: (x * x).sum(), [x]) < 1e-8


def test_inputs_must_be_float64():
    with pytest.raises(ArgumentError):
        grad_check(lambda x: x.sum(), [Tensor(np.ones(2, dtype=np.float32))])


def test_output_must_be_scalar():
    with pytest.raises(ArgumentError):
        grad_check(lambda x: x * 2.0, [Tensor(np.ones(2))])


def test_non_finite_function_raises():
    with pytest.raises(NumericError):
        grad_check(lambda x: (x * np.inf).sum(), [Tensor(np.ones(2))])


def test_max_elements_samples_coordinates():
    x = Tensor(np.linspace(-1, 1, 50))
    assert grad_check(lambda x: (x * x).sum(), [x], max_elements=5) < 1e-8
