"""Exception hierarchy shared across the engine.

Exit-code mapping used by the CLI:
    VerificationError -> 1, UsageError -> 2, DataError/FormatError -> 3,
    StorageError -> 4.
"""


class NnskyError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(NnskyError):
    """Caller violated a precondition (bad argument, mismatched dimensions)."""


class DataError(NnskyError):
    """Input data could not be parsed or is inconsistent."""


class FormatError(DataError):
    """On-disk bytes do not match the expected file or block format."""


class StorageError(NnskyError):
    """An I/O operation on a block store failed."""


class VerificationError(NnskyError):
    """Engines and oracle disagree on a result."""
