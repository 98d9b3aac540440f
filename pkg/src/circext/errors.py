"""Exception hierarchy shared by the numerical modules and the runner."""


class CircextError(Exception):
    """Base class for all package errors."""


class ConfigError(CircextError, ValueError):
    """Invalid experiment configuration (unknown key, bad type, bad value)."""


class NumericalGateError(CircextError, RuntimeError):
    """A numerical audit failed: the result would not be trustworthy."""


class AliasingError(NumericalGateError):
    """FFT grid too coarse for the symbol being sampled."""


class KStabilityError(NumericalGateError):
    """Truncated spectrum moved by more than the tolerance when K was enlarged."""


class OrbitError(NumericalGateError):
    """Periodic-orbit enumeration or continuation failed."""
