"""Cruise airspeed selection and string stability for electric aircraft platoons."""
from importlib import metadata

try:
    __version__ = metadata.version("artifact")
except metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .aero_energy import E430, VELIS_ELECTRO, AircraftParams, Environment
from .speed_solver import CostConfig, PairContext, solve_suboptimal

__all__ = ["AircraftParams", "Environment", "CostConfig", "PairContext", "solve_suboptimal",
           "E430", "VELIS_ELECTRO", "__version__"]
