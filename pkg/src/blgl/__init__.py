"""Boundary-layer growth in the vanishing-viscosity limit: grids, weighted
norms, half-space kernels, solvers and measurement harness."""
from .fields import Grid, SpectralField, VelocityPair, make_grid
from .solver import BulkVortex, Custom, RunConfig, Shear, Trajectory, evolve
from .weights import NormReport, WeightParams, triple_norm

__all__ = ["Grid", "SpectralField", "VelocityPair", "make_grid", "BulkVortex", "Custom",
           "RunConfig", "Shear", "Trajectory", "evolve", "NormReport", "WeightParams",
           "triple_norm"]
__version__ = "0.1.0"
