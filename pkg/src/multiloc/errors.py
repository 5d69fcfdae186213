"""Exception hierarchy shared by every pipeline stage."""


class MultilocError(Exception):
    """Base class for all errors raised by multiloc."""


class DegenerateInputError(MultilocError, ValueError):
    pass


class GeometryError(MultilocError, ValueError):
    pass


class ConfigurationError(MultilocError, ValueError):
    pass


class ModelError(MultilocError, ValueError):
    pass


class ShapeError(MultilocError, ValueError):
    pass


class NoSignalError(MultilocError, ValueError):
    """Raised when a correlation window carries no energy."""


class AssociationError(MultilocError, ValueError):
    pass


class RankDeficiencyError(MultilocError, ValueError):
    pass


class DivergenceError(MultilocError, RuntimeError):
    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class PipelineError(MultilocError, RuntimeError):
    pass


class ValidationError(MultilocError, ValueError):
    """Config validation failure carrying per-field messages."""

    def __init__(self, fields: dict[str, str]):
        self.fields = dict(fields)
        text = "; ".join(f"{k}: {v}" for k, v in self.fields.items())
        super().__init__(text or "invalid configuration")
