"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: parse/validation problems
exit with 2, statistical precondition failures with 3.
"""

from __future__ import annotations


class HallustatError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(HallustatError):
    """A record line is not syntactically valid."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class ValidationError(HallustatError):
    """A record is well-formed but violates a field invariant."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class DuplicateIdError(ValidationError):
    """The same example id appeared twice in one stream."""


class PreconditionError(HallustatError):
    """A statistical operation was called on data that cannot support it
    (empty sample, missing label group, zero baseline distance)."""
