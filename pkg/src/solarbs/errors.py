"""Exception hierarchy shared by every module.

All errors derive from :class:`SolarBSError` so callers (the CLI in
particular) can map a whole family to one exit code.
"""


class SolarBSError(Exception):
    """Base class."""


class DataError(SolarBSError, ValueError):
    """Input data is malformed, inconsistent or too short."""


class SchemaError(DataError):
    def __init__(self, field, message=None):
        self.field = field
        super().__init__(message or f"missing or invalid field: {field!r}")


class ParseError(DataError):
    def __init__(self, row, message):
        self.row = row
        super().__init__(f"row {row}: {message}")


class ContinuityError(DataError):
    pass


class SizingError(DataError):
    """Not enough rows for the requested split/window."""


class EmptyInputError(DataError):
    pass


class ShapeError(DataError):
    pass


class AlignmentError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class DomainError(SolarBSError, ValueError):
    """Parameters outside the range where a model is defined."""


class StateError(SolarBSError, RuntimeError):
    """Object used before it was fitted/initialised."""


class InfeasibleError(SolarBSError):
    """No (n, m) configuration satisfies the outage budget."""

    def __init__(self, message, block=None, bounds=None):
        self.block = block
        self.bounds = bounds
        super().__init__(message)
