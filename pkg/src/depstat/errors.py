"""Exception hierarchy shared by every depstat module."""


class DepstatError(Exception):
    """Base class for all depstat errors."""


class InvalidInputError(DepstatError, ValueError):
    """Malformed sample data: shape mismatch, non-finite entries, bad parameters."""


class InvalidBandwidthError(InvalidInputError):
    pass


class InsufficientSampleError(InvalidInputError):
    pass


class UnsupportedDimensionError(InvalidInputError):
    """The statistic is not defined for the sample dimensions (e.g. rank statistic on p > 1)."""


class UnsupportedStatisticError(DepstatError, ValueError):
    pass


class DegenerateNullError(DepstatError, ArithmeticError):
    """Null distribution has zero spread, so no Gamma fit exists."""


class OracleFailureError(DepstatError, RuntimeError):
    """Numerical quadrature did not reach the requested accuracy."""


class CellFailure(DepstatError, RuntimeError):
    """A repetition inside an experiment cell raised; carries the cell coordinates."""

    def __init__(self, message, *, theta=None, n=None, d=None, test=None, repetition=None):
        super().__init__(message)
        self.theta = theta
        self.n = n
        self.d = d
        self.test = test
        self.repetition = repetition

    def coordinates(self):
        return {
            "theta": self.theta,
            "n": self.n,
            "d": self.d,
            "test": self.test,
            "repetition": self.repetition,
        }
