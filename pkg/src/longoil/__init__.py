"""Simulation of long-distance optical injection locking for Hong-Ou-Mandel interference."""
from .errors import ConfigError, NormalizationError, PreconditionError, SimulationError

__version__ = "0.1.0"

__all__ = ["ConfigError", "NormalizationError", "PreconditionError", "SimulationError", "__version__"]
