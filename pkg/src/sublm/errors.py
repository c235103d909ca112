"""Exception types shared across the toolkit."""


class SublmError(Exception):
    """Base class for all toolkit errors."""


class DataFormatError(SublmError):
    """Malformed input data (corpus files, model files, reports).

    Carries an optional 1-based line number so CLI users can locate the
    offending line.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ContractViolationError(SublmError):
    """An internal invariant or a component contract was breached."""
