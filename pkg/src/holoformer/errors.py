"""Exception types shared across the package."""


class HoloformerError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(HoloformerError, ValueError):
    """Operand shapes are incompatible."""


class ConfigurationError(HoloformerError, ValueError):
    """A hyperparameter or config value violates its constraints."""


class DataError(HoloformerError, ValueError):
    """Dataset contents violate the task contract (e.g. label out of range)."""


class TrainingDiverged(HoloformerError, RuntimeError):
    """Training aborted on a non-finite loss; names the offending tensor."""

    def __init__(self, tensor_name: str, epoch: int, step: int):
        self.tensor_name = tensor_name
        self.epoch = epoch
        self.step = step
        super().__init__(
            f"non-finite values in '{tensor_name}' at epoch {epoch}, step {step}"
        )
