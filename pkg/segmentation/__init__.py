"""
LupiSeg Segmentation Package

The UNet used for both teacher (3-channel) and student (1-channel) models.
"""
from .unet import (
    UNetConfig,
    UNetModel,
    parameter_shapes,
    buffer_shapes,
    init_model,
    forward,
    stack_inputs,
    predict_masks,
    save_model,
    load_model,
)

__all__ = [
    "UNetConfig",
    "UNetModel",
    "parameter_shapes",
    "buffer_shapes",
    "init_model",
    "forward",
    "stack_inputs",
    "predict_masks",
    "save_model",
    "load_model",
]
