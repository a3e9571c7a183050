"""Exception hierarchy shared by every subsystem.

The CLI maps these onto exit codes, so each concrete class carries one.
"""


class ApnnError(Exception):
    exit_code = 1


class ConfigError(ApnnError, ValueError):
    """Invalid configuration value, unknown key, or malformed file."""

    exit_code = 2


class MissingInputError(ApnnError, FileNotFoundError):
    exit_code = 3


class ShapeError(ApnnError, ValueError):
    exit_code = 4


class ContractError(ApnnError, ValueError):
    """A call violated an operation's precondition."""

    exit_code = 4


class NumericError(ApnnError, ArithmeticError):
    exit_code = 4


class NumericOverflowError(NumericError):
    """A loss term or gradient became non-finite.

    ``term`` names the offending loss term when known.
    """

    def __init__(self, message, term=None):
        super().__init__(message)
        self.term = term


class GaugeError(NumericError):
    """Periodic Poisson data is not neutral, so no periodic solution exists."""


class TrainingDiverged(NumericError):
    pass
