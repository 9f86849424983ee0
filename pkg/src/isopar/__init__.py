"""Isoparametric finite elements on curvilinear polygons, with the
experiment drivers that measure geometry, interpolation, maximum-principle
and convergence behavior."""

__version__ = "0.1.0"

from . import femcore, flowmap, geometry, isogeom, meshgen, operators
from .experiments import ExperimentConfig, RateTable, run

__all__ = [
    "ExperimentConfig",
    "RateTable",
    "run",
    "femcore",
    "flowmap",
    "geometry",
    "isogeom",
    "meshgen",
    "operators",
    "__version__",
]
