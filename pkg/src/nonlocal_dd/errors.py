"""Exception types raised by the library and mapped to CLI exit codes."""


class ParameterError(ValueError):
    """A configuration value is out of range. ``field`` names the offender."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericalError(RuntimeError):
    """Base class for failures that map to exit code 1."""


class ConvergenceError(NumericalError):
    def __init__(self, message, bracket=None):
        self.bracket = bracket
        super().__init__(message)


class PartitionError(NumericalError):
    def __init__(self, message, pair=None):
        self.pair = pair
        super().__init__(message)


class SingularBlockError(NumericalError):
    def __init__(self, message, smallest=None):
        self.smallest = smallest
        super().__init__(message)
