"""Exception types shared across the package."""


class DataError(Exception):
    """Raised when an input file or stream cannot be used (bad format, missing data)."""
