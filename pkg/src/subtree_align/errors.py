"""Exception hierarchy shared by all modules."""


class AlignError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(AlignError, ValueError):
    pass


class GenerationError(AlignError, RuntimeError):
    pass


class DegenerateLawError(AlignError, ValueError):
    pass


class CapacityError(AlignError, RuntimeError):
    pass


class DataError(AlignError, ValueError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateRowError(AlignError, ValueError):
    pass


class IncompleteGridError(AlignError, ValueError):
    pass


class ConfigError(AlignError, ValueError):
    pass
