"""Exception types shared across the package."""


class CurvlabError(Exception):
    """Base class for all package errors."""


class ParseError(CurvlabError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class MetricFileError(CurvlabError):
    def __init__(self, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


class EvaluationError(CurvlabError, ValueError):
    """Raised when an expression or tensor cannot be evaluated at a point."""


class SingularMetricError(EvaluationError):
    pass


class SingularPointError(EvaluationError):
    """A residual system hit a zero denominator (distinct from a large residual)."""
