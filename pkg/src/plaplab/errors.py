"""Exception taxonomy shared by every module in the package."""


class PlapError(Exception):
    """Base class for all package-specific errors."""


class InvalidDomain(PlapError):
    """Grid construction received an empty interval or too few cells."""


class InvalidSubdomain(PlapError):
    """Requested subdomain is not compactly contained or contains no node."""


class NegativeCoefficient(PlapError):
    """Coefficient descriptor would produce a negative field."""


class GridMismatch(PlapError):
    """Fields built on different grids were combined."""


class NegativeInput(PlapError):
    """A field that must be nonnegative has a value below -1e-12."""


class BadExponent(PlapError):
    """Norm exponent must be >= 1 or infinity."""


class DegenerateJacobian(PlapError):
    """Unregularized singular flux (p < 2, eps = 0) hit a zero slope."""


class NoConvergence(PlapError):
    """An iterative solve exhausted its iteration budget.

    Distinct from nonexistence verdicts: raising this means the solver
    failed, not that the problem provably has no solution.
    """

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class AlphaOutOfRange(PlapError):
    """No alpha >= 0 solves a = lambda1(alpha*b): a is outside the window."""


class TooFewRecords(PlapError):
    """Limit extrapolation needs at least three valid sweep records."""


class CycleDetected(PlapError):
    """The active-set iteration revisited a previous configuration."""


class InfeasibleWindow(PlapError):
    """Constrained solve requires lambda1(domain) < a < lambda1(zero set)."""


class PlateauTooSmall(PlapError):
    """The free-boundary plateau does not cover the requested subdomain."""


class ConfigError(PlapError):
    """Base class for experiment-configuration errors."""


class ParseError(ConfigError):
    """Config text line could not be parsed as `key = value`."""

    def __init__(self, line_number, line):
        super().__init__(f"line {line_number}: cannot parse {line!r}")
        self.line_number = line_number
        self.line = line


class UnknownKey(ConfigError):
    """Config key is not recognized."""


class RangeError(ConfigError):
    """Config value is outside its documented range."""
