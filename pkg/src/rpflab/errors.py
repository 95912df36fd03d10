class ConfigurationError(ValueError):
    """Invalid user-facing configuration (bad parameters, missing files)."""


class DomainError(ValueError):
    """An input lies outside the domain of a model function."""


class FilterDegeneracyError(RuntimeError):
    """All particle weights vanished; the run cannot continue.

    ``step`` is the filtering step at which it happened, when known.
    """

    def __init__(self, message, step=None):
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
        self.step = step
