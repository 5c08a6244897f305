"""Exception types shared across the package."""


class NndlabError(Exception):
    """Base class for all package errors."""


class InputError(NndlabError, ValueError):
    """A precondition on arguments was violated."""


class NotConcordantError(InputError):
    """An operation requiring a concordant ranking system got a cyclic one.

    Carries the offending cycle of point pairs as ``cycle``.
    """

    def __init__(self, message, cycle):
        super().__init__(message)
        self.cycle = cycle


class ResourceLimitError(NndlabError, RuntimeError):
    """Refusal to run a computation whose cost explodes combinatorially."""


class ScheduleExhausted(NndlabError):
    """Normal termination signal: no further radius solves the update equation."""
