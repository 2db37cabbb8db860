"""Exception hierarchy shared by all fifkit modules."""


class FifError(Exception):
    """Base class for every error raised by fifkit."""


class InvalidDataError(FifError, ValueError):
    pass


class InvalidScalingError(FifError, ValueError):
    pass


class DomainError(FifError, ValueError):
    pass


class PreconditionError(FifError, ValueError):
    pass


class ContinuityError(FifError, ArithmeticError):
    """Two operator branches disagree at a shared knot."""


class PolicyError(FifError, ValueError):
    """A seam policy was requested on data that does not support it."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ResourceError(FifError, MemoryError):
    pass


class NonConvergenceError(FifError, RuntimeError):
    """Fixed-point iteration hit ``max_iter`` before reaching ``tol``."""

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ParseError(FifError, ValueError):
    """Malformed input file; ``line``/``column`` are 1-based when known."""

    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


class CompletenessError(ParseError):
    pass


class DuplicateError(ParseError):
    pass
