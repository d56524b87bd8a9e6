"""Driven Rydberg ring: full spin model, domain-wall cluster model and rung amplitudes."""

__version__ = "0.1.0"

from .errors import CapacityError, ConfigError, NumericalAbort, RydClusterError  # noqa: E402
from .lattice import Boundary, DriveParams, IntegratorParams, LatticeParams, resonant_frequency  # noqa: E402

__all__ = [
    "Boundary",
    "CapacityError",
    "ConfigError",
    "DriveParams",
    "IntegratorParams",
    "LatticeParams",
    "NumericalAbort",
    "RydClusterError",
    "__version__",
    "resonant_frequency",
]
