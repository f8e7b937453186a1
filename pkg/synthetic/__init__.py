"""
LupiSeg Synthetic Data

Seed-deterministic mammogram-like scenes with elliptical tumors, so every
stage runs without licensed images.
"""
from .scene import SyntheticSceneSpec, ellipse_mask, generate_scene, write_scenes, read_scenes

__all__ = ["SyntheticSceneSpec", "ellipse_mask", "generate_scene", "write_scenes", "read_scenes"]
