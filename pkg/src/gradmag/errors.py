"""Shared exception types."""


class ArgumentError(ValueError):
    """An operation was called with arguments violating its preconditions."""


class FormatError(Exception):
    """On-disk data (clip directory, PPM frame, tensor file) is malformed."""
