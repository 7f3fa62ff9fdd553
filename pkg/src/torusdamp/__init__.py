"""Numerical laboratory for the damped wave equation with time-dependent
damping on flat tori.

The package provides spectral grids and wave solvers, evaluatable damping
families, geodesic damping functionals, Gaussian-beam quasi-solutions,
observability measurements, and decay-rate fitting, together with a CLI
for reproducible experiments.
"""

from torusdamp.grid import TorusGrid, Field, EnergyTrace
from torusdamp.damping import (
    DampingProfile,
    ConstantDamping,
    SpaceBump,
    PolyProduct,
    GrowingOff,
    ShrinkingOn,
)
from torusdamp.geodesic import Geodesic, GeodesicSampling
from torusdamp.solver import WaveState, SolverConfig, evolve
from torusdamp.beam import BeamSpec, BeamFrame

__all__ = [
    "TorusGrid",
    "Field",
    "EnergyTrace",
    "DampingProfile",
    "ConstantDamping",
    "SpaceBump",
    "PolyProduct",
    "GrowingOff",
    "ShrinkingOn",
    "Geodesic",
    "GeodesicSampling",
    "WaveState",
    "SolverConfig",
    "evolve",
    "BeamSpec",
    "BeamFrame",
]

__version__ = "0.1.0"
