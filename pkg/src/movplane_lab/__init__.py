"""Numerical laboratory for fractional parabolic equations and the moving-plane method."""

from .fraclap import ExteriorSpec, Field, FracOrder, KernelMatrix, build_kernel, frac_lap_apply
from .grid import Grid, PlaneReflection, build_grid

__all__ = [
    "ExteriorSpec",
    "Field",
    "FracOrder",
    "Grid",
    "KernelMatrix",
    "PlaneReflection",
    "build_grid",
    "build_kernel",
    "frac_lap_apply",
]

__version__ = "0.1.0"
