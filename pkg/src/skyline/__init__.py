"""Skyline process of a Poisson city: sky-blockage statistics and LEO link design."""

from __future__ import annotations

from skyline.heights import ExponentialHeights, HeightModel, ParetoHeights, parse_height_model
from skyline.urban_field import UrbanConfig, eval_skyline, global_sup, sample_field

__all__ = [
    "ExponentialHeights",
    "HeightModel",
    "ParetoHeights",
    "UrbanConfig",
    "eval_skyline",
    "global_sup",
    "parse_height_model",
    "sample_field",
]

__version__ = "0.1.0"
