"""Bigraphs of real-world places built from OpenStreetMap data."""
from __future__ import annotations

from .builder import SpatialName, WorldBigraph, build, resolve, spatial_name, stats
from .core import Bigraph, Control, iso_equal
from .rewrite import ReactionRule, step

__all__ = [
    "Bigraph",
    "Control",
    "ReactionRule",
    "SpatialName",
    "WorldBigraph",
    "build",
    "iso_equal",
    "resolve",
    "spatial_name",
    "stats",
    "step",
]

__version__ = "0.1.0"
