"""Error types shared across the toolkit.

The CLI maps these onto exit codes, so the split matters: bad input data is
a different failure mode than a statistic that is undefined for valid input.
"""


class SegtoolError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(SegtoolError):
    """Input data violates a documented precondition or invariant."""


class SchemaError(ValidationError):
    """A file failed schema validation.

    The message names the offending field and its location, e.g.
    ``phrases[3].pause_before: expected number or null``.
    """

    def __init__(self, location: str, problem: str):
        self.location = location
        self.problem = problem
        super().__init__(f"{location}: {problem}")


class DegenerateDataError(SegtoolError):
    """A statistic is undefined for this input (no variance under the null)."""
