"""Discrete s-energies, dimension estimates and concentration bounds for finite point sets."""

from __future__ import annotations

__version__ = "0.1.0"

from .geometry import PointFamily, PointSet, RegionSpec
from .energy import count_close_pairs, s_energy, s_energy_sweep
from .dimension import estimate_dimension, slope_fit

__all__ = [
    "__version__",
    "PointSet",
    "PointFamily",
    "RegionSpec",
    "s_energy",
    "s_energy_sweep",
    "count_close_pairs",
    "estimate_dimension",
    "slope_fit",
]
