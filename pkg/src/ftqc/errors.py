"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to.
"""

from __future__ import annotations


class FtqcError(Exception):
    exit_code = 1

    def __init__(self, message: str, *, stage: str | None = None):
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class RejectedInputError(FtqcError, ValueError):
    """Input outside an operation's domain."""

    exit_code = 2


class ConvergenceError(FtqcError):
    """An iterative solver stopped without meeting its target."""

    exit_code = 3

    def __init__(self, message: str, *, best: float | None = None, stage: str | None = None):
        super().__init__(message, stage=stage)
        self.best = best


class InfeasibleError(FtqcError):
    """No parameter choice within the configured caps satisfies the constraint."""

    exit_code = 3


class ResourceLimitError(FtqcError):
    """A configured size cap (matrix dimension, net entries, Trotter steps) was hit."""

    exit_code = 4


def with_stage(exc: FtqcError, stage: str) -> FtqcError:
    """Attach a pipeline stage label unless one is already present."""
    if exc.stage is None:
        exc.stage = stage
    return exc
