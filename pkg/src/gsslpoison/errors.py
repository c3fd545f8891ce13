"""Exception types shared across the package."""


class ParseError(ValueError):
    """Malformed input file; message carries the offending line number."""


class NumericError(RuntimeError):
    """A numerical routine failed to converge or produced non-finite values."""
