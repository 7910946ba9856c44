"""Exception types shared across the toolkit.

The CLI maps these onto process exit codes, so raising the right class
matters more than the message text.
"""


class CloudQnnError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(CloudQnnError):
    """Invalid architecture or run configuration (bad qubit count, sizes...)."""


class ValidationError(CloudQnnError):
    """Input data violates a schema or a physical invariant."""


class TrainingDivergedError(CloudQnnError):
    """Training produced a non-finite loss; carries the epoch/batch position."""

    def __init__(self, message: str, epoch: int | None = None, batch: int | None = None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
