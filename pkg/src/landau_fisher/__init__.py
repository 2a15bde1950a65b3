"""Numerical laboratory for Fisher-information dissipation in the
space-homogeneous Landau equation with very soft potentials."""

from landau_fisher.grid import Density, VelocityGrid, WeightedNorm, make_grid
from landau_fisher.kernels import KernelSpec

__all__ = ["Density", "KernelSpec", "VelocityGrid", "WeightedNorm", "make_grid"]
__version__ = "0.1.0"
