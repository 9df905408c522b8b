"""Exception types shared across the package."""


class OddsError(Exception):
    """Base class for all package errors."""


class DimensionError(OddsError, ValueError):
    pass


class EvaluationError(OddsError, ArithmeticError):
    """A function produced a non-finite value where a finite one is required."""


class NumericError(OddsError, ArithmeticError):
    pass


class RegularityError(OddsError, ValueError):
    """A hypothesis needed for a convergence statement does not hold."""


class ConvergenceError(OddsError, RuntimeError):
    pass


class ConfigError(OddsError, ValueError):
    pass


class RangeError(OddsError, ValueError):
    """A result falls outside the range where it can be computed or trusted."""
