"""Exception types raised across the package."""


class GaitEvoError(Exception):
    """Base class for all package errors."""


class ParameterError(GaitEvoError, ValueError):
    """A numeric parameter lies outside its admissible domain."""


class SensorError(GaitEvoError, ValueError):
    """A sensor reading is physically impossible (e.g. negative force magnitude)."""


class ConfigurationError(GaitEvoError, ValueError):
    """Inconsistent configuration, such as GRF input supplied in open-loop mode."""


class InvalidTraceError(GaitEvoError, ValueError):
    """A trace is empty or otherwise unusable for a metric."""


class SimulationDiverged(GaitEvoError, RuntimeError):
    """The physics produced a non-finite value.

    Attributes
    ----------
    step : int
        Index of the physics step at which divergence was detected.
    """

    def __init__(self, step, message=None):
        self.step = int(step)
        super().__init__(message or f"simulation diverged at step {self.step}")


class NumericalDegeneracy(GaitEvoError, ArithmeticError):
    """Covariance decomposition failed or produced a non-positive spectrum."""


class GenomeParseError(GaitEvoError, ValueError):
    """A serialized genome could not be parsed."""
