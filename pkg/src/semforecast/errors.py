"""Exception hierarchy shared by all modules."""


class SemForecastError(Exception):
    """Base class for every error raised by this package."""


class CorpusError(SemForecastError, ValueError):
    """Bad corpus input. ``line`` holds the 1-based record line when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class LexiconError(SemForecastError, ValueError):
    pass


class RankDeficientError(SemForecastError, ValueError):
    pass


class ConvergenceError(SemForecastError, RuntimeError):
    """Iterative solver ran out of iterations; ``delta`` is the last change measure."""

    def __init__(self, message, delta=None):
        self.delta = delta
        super().__init__(message)


class DegenerateError(SemForecastError, ValueError):
    pass


class DatasetError(SemForecastError, ValueError):
    pass


class PlanError(SemForecastError, ValueError):
    pass


class AlignmentError(SemForecastError, ValueError):
    pass


class ModelTypeError(SemForecastError, TypeError):
    """Operation not supported by this kind of fitted model."""
