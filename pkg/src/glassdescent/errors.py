"""Exception types raised by the library.

All of them derive from ``ValueError`` (or ``IndexError``) so callers that
only care about "bad input" can catch the builtin.
"""


class DimensionError(ValueError):
    """A spin vector does not match the instance size."""


class InstanceFormatError(ValueError):
    """An instance file could not be parsed."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class OracleGuardError(ValueError):
    """Exhaustive enumeration was requested for a size above the guard."""


class PlanValidationError(ValueError):
    """An experiment plan failed validation.

    ``problems`` holds one ``(field, message)`` pair per offending field.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        text = "; ".join(f"{field}: {msg}" for field, msg in self.problems)
        super().__init__(f"invalid plan: {text}")


class InvariantViolation(RuntimeError):
    """An internal consistency check failed (a bug, not bad input)."""
