"""Exception taxonomy shared by all modules.

Exit-code mapping used by the CLI: validation/config problems map to 2,
accuracy/non-convergence to 3, file I/O to 4.
"""


class CollapseRecoveryError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CollapseRecoveryError):
    """An input violates a documented precondition."""


class DimensionError(ValidationError):
    """Matrix is not square or its dimension is unsupported."""


class NotPSDError(ValidationError):
    """Matrix has an eigenvalue below the PSD tolerance."""


class DegenerateHeraldError(CollapseRecoveryError):
    """The herald success probability vanishes; no accepted state exists."""


class AccuracyError(CollapseRecoveryError):
    """A numerical result failed to converge to the requested accuracy."""


class FileError(CollapseRecoveryError):
    """An output file could not be written or an input file read."""
