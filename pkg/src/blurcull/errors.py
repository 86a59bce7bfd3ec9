"""Exception types shared across the package."""


class DataError(Exception):
    """An input file or record violates its documented schema."""


class DetectorHookError(Exception):
    """An external detector command failed or emitted unusable output."""
