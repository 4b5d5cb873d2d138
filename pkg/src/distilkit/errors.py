"""Exception types shared across the toolkit."""


class DistilkitError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(DistilkitError, ValueError):
    """Array shapes do not satisfy an operation's contract."""


class InvalidParameterError(DistilkitError, ValueError):
    """A scalar parameter is outside its valid range."""


class EmptyDatasetError(DistilkitError, ValueError):
    """An operation that needs at least one sample received none."""


class NumericalError(DistilkitError, ArithmeticError):
    """A NaN or Inf appeared where only finite values are allowed."""


class TrainingDivergedError(DistilkitError, RuntimeError):
    """Training produced a non-finite loss or gradient.

    Carries the epoch index at which divergence was detected.
    """

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")


class CheckpointError(DistilkitError, ValueError):
    """A checkpoint document is malformed or violates network invariants."""


class ConfigError(DistilkitError, ValueError):
    """An experiment configuration is invalid."""
