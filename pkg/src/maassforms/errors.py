"""Exception hierarchy.

Everything raised on purpose derives from MaassError so the CLI can map
domain failures to a single exit code.
"""


class MaassError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(MaassError):
    """Input outside the mathematical domain of an operation."""


class PrecisionError(MaassError):
    """Working precision is insufficient to decide or certify a result."""


class SingularSystemError(MaassError):
    """Linear system is singular or too ill-conditioned to solve."""


class SpuriousBracketError(MaassError):
    """A sign-change bracket did not survive refinement."""


class FormatError(MaassError):
    """Malformed serialized data."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line
