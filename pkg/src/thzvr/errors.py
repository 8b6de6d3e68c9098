"""Exception hierarchy.

Every error carries the process exit code the command line maps it to, so
library callers and the CLI agree on what kind of failure happened.
"""


class ThzvrError(Exception):
    exit_code = 1


class ParseError(ThzvrError):
    """Malformed configuration file or command line usage."""

    exit_code = 2


class ConfigError(ThzvrError, ValueError):
    """A parameter set violates a model constraint (stability, geometry, ranges)."""

    exit_code = 3


class DomainError(ThzvrError, ValueError):
    """A function argument lies outside the mathematical domain of the operation."""

    exit_code = 4


class ModelDomainError(ThzvrError, ArithmeticError):
    """A closed-form expression cannot be evaluated for the given model state.

    ``expression`` names the failing formula.
    """

    exit_code = 4

    def __init__(self, message, expression=None):
        super().__init__(message)
        self.expression = expression


class InstabilityError(ModelDomainError):
    """Queue utilisation is at or above one."""

    def __init__(self, message, rho=None):
        super().__init__(message, expression="rho < 1")
        self.rho = rho


class GridError(ThzvrError, ValueError):
    exit_code = 4


class BracketError(ThzvrError, ValueError):
    exit_code = 4


class DataError(ThzvrError, ValueError):
    """Not enough (or degenerate) data for an estimator."""

    exit_code = 5
