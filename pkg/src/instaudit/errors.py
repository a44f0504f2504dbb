"""Exception hierarchy shared by the pipeline stages.

The CLI maps ``DataError`` subclasses to exit code 3 and ``InvariantError``
to exit code 4; everything else that is a plain ``ValueError`` is a caller
mistake and surfaces with its message.
"""


class AuditError(Exception):
    """Base class for all errors raised by this package."""


class DataError(AuditError, ValueError):
    """Input data could not be turned into a valid dataset."""


class MalformedInput(DataError):
    """The document is not parseable (bad JSON, wrong top-level shape)."""


class SchemaViolation(DataError):
    """A record is missing a field, has an unknown one, or a wrong type."""


class DomainViolation(DataError):
    """A field has the right type but an impossible value (negative count)."""


class InsufficientSupport(DataError):
    """A class has too few rows for the requested split or fold count."""


class InvariantError(AuditError, AssertionError):
    """An internal consistency check failed."""
