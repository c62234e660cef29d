class AlgodistError(Exception):
    """Base class for errors raised by this package."""


class IndexRangeError(AlgodistError, IndexError):
    pass


class EmptyDistributionError(AlgodistError, ValueError):
    pass


class KMismatchError(AlgodistError, ValueError):
    pass


class UndefinedCorrelationError(AlgodistError, ValueError):
    """A rank vector has zero variance, so rho is not defined."""


class OversizeError(AlgodistError, ValueError):
    """Input exceeds a size guard. Inputs are rejected, never truncated."""


class CorruptPayloadError(AlgodistError, ValueError):
    pass


class CodebookMismatchError(CorruptPayloadError):
    pass


class FormatError(AlgodistError, ValueError):
    pass


class ConfigError(AlgodistError, ValueError):
    pass
