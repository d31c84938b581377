"""Exception hierarchy shared across the package.

Split by how the CLI maps failures to exit codes: configuration/parameter
problems exit 2, numerical failures exit 1.
"""


class LevylabError(Exception):
    """Base class for all package errors."""


class ParameterError(LevylabError, ValueError):
    """A parameter is outside its documented domain."""


class UnsupportedParametrizationError(ParameterError):
    """Parameter combination that the chosen parametrization cannot express."""


class NumericalError(LevylabError, RuntimeError):
    """A numerical routine failed to reach its accuracy target."""


class DriftOverflowError(NumericalError):
    """A log-domain exponent in the fractional drift exceeded the safe range."""

    def __init__(self, message, w=None, stencil_point=None, exponent=None):
        super().__init__(message)
        self.w = w
        self.stencil_point = stencil_point
        self.exponent = exponent


class GridTooSmallError(LevylabError, ValueError):
    """A quadrature grid leaves too much probability mass at its boundary."""


class DataError(LevylabError, ValueError):
    """Input data violates a precondition (too few samples, empty window...)."""


class DegenerateDataError(DataError):
    """Input data has zero spread where spread is required."""


class ConfigError(LevylabError, ValueError):
    """Invalid experiment configuration (unknown key, bad value, bad flag)."""
