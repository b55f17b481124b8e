"""Exception types raised by the separation routines."""


class DimensionError(ValueError):
    """Array shapes do not agree with what an operation expects."""

    def __init__(self, what, expected, actual):
        self.what = what
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected shape {expected}, got {actual}")


class DegenerateError(ArithmeticError):
    """Base class for numerically degenerate situations."""


class DegenerateContrastError(DegenerateError):
    """The extractor output has (numerically) zero power."""


class DegenerateDirectionError(DegenerateError):
    """A vector vanished after projection onto an orthogonal complement."""


class DegeneratePolynomialError(DegenerateError):
    """A polynomial with all-zero coefficients was passed to the root solver."""


class RankDeficientError(DegenerateError):
    def __init__(self, requested, rank):
        self.requested = requested
        self.rank = rank
        super().__init__(
            f"cannot whiten to dimension {requested}: numerical rank is {rank}")


class ConfigError(ValueError):
    """Invalid experiment or algorithm configuration."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
