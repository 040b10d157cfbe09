"""Exception types shared across the package."""


class ContractError(ValueError):
    """An operation was called with arguments violating its preconditions."""


class NumericalError(FloatingPointError):
    """A computation produced non-finite values.

    ``phase`` names the pipeline stage that produced them, when known.
    """

    def __init__(self, message, phase=None):
        super().__init__(message)
        self.phase = phase


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""
