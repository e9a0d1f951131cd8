"""Exception types shared across the package."""


class PhcError(Exception):
    """Base class for all errors raised by this package."""


class DataError(PhcError):
    """Bad input data: malformed CSV, schema violations, dimension mismatches."""


class SchemaError(DataError):
    """The schema document itself is invalid."""


class DatasetUnavailable(DataError):
    """A named benchmark dataset could not be found on the search path."""

    def __init__(self, name: str, hint: str = ""):
        self.name = name
        self.hint = hint
        message = f"dataset {name!r} not found"
        if hint:
            message = f"{message}; {hint}"
        super().__init__(message)


class OracleInconsistencyError(PhcError):
    """The label source returned two different categories for the same row."""
