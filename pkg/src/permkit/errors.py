"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so anything a user can
trigger from a file or a flag should raise one of the classes below
rather than a bare ValueError.
"""

from __future__ import annotations


class PermanentError(Exception):
    """Base class for all package-specific failures."""


class StructureError(PermanentError):
    """A matrix structure is internally inconsistent (bad pointers, CRS/CCS mismatch, ...)."""


class ParseError(PermanentError):
    """An input file could not be parsed. Carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ImpossibleError(PermanentError):
    """The computation would need a kernel invocation with n > 63.

    The Gray-code iteration state must fit a single 64-bit word, so
    matrices beyond 63 rows are refused outright.
    """


class DecompTimeout(PermanentError):
    """A decomposition run exceeded its task-count or wall-clock budget."""

    def __init__(self, message: str, tasks_done: int = 0, elapsed: float = 0.0):
        self.tasks_done = tasks_done
        self.elapsed = elapsed
        super().__init__(message)


class PolicyError(PermanentError):
    """The requested accumulator policy cannot be applied to this matrix kind."""
