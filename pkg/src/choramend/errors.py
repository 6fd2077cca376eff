"""Exception types shared across the package.

Every error that crosses a module boundary lives here so callers can catch
one family instead of importing from half the package.
"""

from __future__ import annotations


class ChoramendError(Exception):
    """Base class for all package-specific errors."""


class CaptureError(ChoramendError):
    """Substitution would capture a variable and renaming was disabled."""


class UnsupportedTheory(ChoramendError):
    """A formula strays outside linear integer arithmetic."""


class BudgetExceeded(ChoramendError):
    """Bounded enumeration would evaluate more assignments than allowed."""


class SolverError(ChoramendError):
    """The external solver failed, answered 'unknown', or misbehaved."""


class SolverTimeout(SolverError):
    """A validity query exceeded its time budget."""


class ParseError(ChoramendError):
    """Source text rejected by the lexer or parser.

    Carries the 1-based position of the offending token.
    """

    def __init__(self, message: str, line: int, column: int, end_line: int | None = None,
                 end_column: int | None = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column
        self.end_line = end_line if end_line is not None else line
        self.end_column = end_column if end_column is not None else column

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}"


class NodeNotFound(ChoramendError):
    """A node id does not exist in the assertion tree."""


class StaleChoice(ChoramendError):
    """A repair choice was issued for an earlier session state."""


class EmptyHistory(ChoramendError):
    """Undo requested on a session with no applied repairs."""
