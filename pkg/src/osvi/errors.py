"""Exception hierarchy shared by all modules.

CLI exit-code mapping: usage errors exit 1, DataError exits 2,
EvaluationError (and any non-finite numeric failure) exits 3.
"""


class OsviError(Exception):
    """Base class for all package errors."""


class DimensionError(OsviError):
    """Shape/dimension mismatch between arrays."""


class ContractError(OsviError):
    """An API precondition was violated."""


class GeometryError(OsviError):
    """Invalid spatial geometry (e.g. resolution not divisible by 4)."""


class ModeError(OsviError):
    """Invalid mode for the requested operation (e.g. pooling to upscale)."""


class EvaluationError(OsviError):
    """A numeric evaluation produced non-finite values."""


class DataError(OsviError):
    """Missing or malformed files on disk."""
