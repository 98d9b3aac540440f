"""Twisted transfer operators for circle extensions of hyperbolic toral maps."""

__version__ = "0.1.0"

from .aniso import SpaceElement, WeightScheme, aniso_norm, multiply
from .errors import AliasingError, CircextError, ConfigError, KStabilityError, NumericalGateError, OrbitError
from .operator import TruncatedOperator, assemble, k_stability, spectrum
from .orbits import PeriodicOrbitSet, enumerate_linear, orbit_trace_sum, periodic_points
from .pressure import pressure_estimate, rate_thresholds
from .torus import AnosovMap
from .trigpoly import TrigPoly

__all__ = [
    "AliasingError", "AnosovMap", "CircextError", "ConfigError", "KStabilityError",
    "NumericalGateError", "OrbitError", "PeriodicOrbitSet", "SpaceElement", "TrigPoly",
    "TruncatedOperator", "WeightScheme", "__version__", "aniso_norm", "assemble",
    "enumerate_linear", "k_stability", "multiply", "orbit_trace_sum", "periodic_points",
    "pressure_estimate", "rate_thresholds", "spectrum",
]
