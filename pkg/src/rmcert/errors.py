"""Exception taxonomy shared by all modules.

The CLI maps these to distinct exit codes; library users can catch the
base class ``RmcertError``.
"""


class RmcertError(Exception):
    """Base class for all package errors."""


class ValidationError(RmcertError, ValueError):
    """Invalid argument or state (bad ranges, mismatched shapes, ...)."""


class ResourceLimitError(RmcertError, RuntimeError):
    """Requested computation exceeds the enforced memory/compute budget."""


class IngestionError(RmcertError, ValueError):
    """Malformed record file. Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InfeasiblePlanError(RmcertError, ValueError):
    """No measurement budget can achieve the requested certification."""
