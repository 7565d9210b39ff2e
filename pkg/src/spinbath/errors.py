"""Exception types shared across the package.

Plain input-validation failures (negative time, k = 0 where a formula has a
removable singularity, ...) raise ValueError; the classes here mark failures
of the physics or the numerics that callers may want to catch specifically.
"""


class SpinbathError(Exception):
    """Base class for package-specific failures."""


class StabilityError(SpinbathError):
    """The Bogoliubov spectrum is imaginary somewhere in the requested range."""

    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


class QuadratureError(SpinbathError):
    """Adaptive integration exhausted its panel budget before converging."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ExtremumSingularityError(SpinbathError):
    """Spectral density evaluated at a dispersion extremum (1/|de/dk| blows up)."""


class MeanSpinError(SpinbathError):
    """Mean spin length too small to define the squeezing reference frame."""


class ConfigError(SpinbathError):
    """Malformed or inconsistent scenario configuration."""
