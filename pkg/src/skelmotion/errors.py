"""Exception hierarchy shared across the package.

Each class maps onto a distinct CLI exit status so callers can tell a bad
invocation from bad data from a numeric blow-up.
"""


class SkelMotionError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ShapeError(SkelMotionError):
    """Operands or frames have incompatible shapes."""

    exit_code = 3


class DataError(SkelMotionError):
    """Malformed dataset, skeleton file, config, or checkpoint."""

    exit_code = 3


class NumericFault(SkelMotionError):
    """A NaN or Inf appeared where only finite values are allowed."""

    exit_code = 4


class TrainAbort(NumericFault):
    """Training stopped on a numeric fault; records where it happened."""

    def __init__(self, message, iteration, last_checkpoint=None):
        super().__init__(message)
        self.iteration = iteration
        self.last_checkpoint = last_checkpoint
