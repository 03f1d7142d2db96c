"""Exception types shared across the package."""


class BimclassError(Exception):
    """Base class for data/model errors raised by this package."""


class UnsupportedFormatError(BimclassError):
    """Image file is not one of the supported formats (binary PGM, 8-bit PNG)."""


class CorruptDataError(BimclassError):
    """Image file is recognized but its payload is truncated or malformed."""


class InvalidArchitectureError(BimclassError):
    """A network layout collapses an intermediate spatial dimension below 1."""


class ModelKindMismatchError(BimclassError):
    """A stored model is of a different kind than the caller expected."""


class DatasetError(BimclassError):
    """Dataset is empty, unbalanced, or otherwise unusable for the request."""
