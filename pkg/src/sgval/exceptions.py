"""Exception hierarchy shared by all stages."""


class SGVALError(Exception):
    """Base class for every error raised by this package."""


class DataFormatError(SGVALError, ValueError):
    """Input data violates a shape, range or file-format invariant."""


class DimensionMismatchError(DataFormatError):
    pass


class NonFiniteError(DataFormatError):
    pass


class LabelRangeError(DataFormatError):
    pass


class ZeroRowError(DataFormatError):
    pass


class BadMagicError(DataFormatError):
    def __init__(self, expected, found):
        self.expected = expected
        self.found = found
        super().__init__(f"bad magic: expected {expected!r}, found {found!r}")


class VersionMismatchError(DataFormatError):
    pass


class TruncatedFileError(DataFormatError):
    pass


class DivergenceError(SGVALError, FloatingPointError):
    """Training produced a non-finite loss."""
