class StegoError(Exception):
    """Base class of every failure raised by the toolkit."""

    exit_code = 3


class ConfigError(StegoError, ValueError):
    exit_code = 2


class DataError(StegoError):
    exit_code = 3


class KeyFileError(StegoError):
    exit_code = 4


# Asset and array errors


class MalformedHeader(DataError, ValueError):
    pass


class MalformedRecord(DataError, ValueError):
    pass


class TruncatedPayload(DataError, ValueError):
    pass


class NonFiniteValue(DataError, ValueError):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message if index is None else f"{message} (primitive {index})")
        self.index = index


class IoFailure(DataError, OSError):
    pass


class IndexOutOfRange(DataError, IndexError):
    pass


class OutOfRange(DataError, ValueError):
    pass


class ShiftOverflow(DataError, ValueError):
    pass


class ShapeMismatch(DataError, ValueError):
    pass


class DivergenceDetected(DataError, ArithmeticError):
    pass


class StaleProduct(DataError, ValueError):
    pass


class ImageTooSmall(DataError, ValueError):
    pass


class InvalidRatio(DataError, ValueError):
    pass


class ZeroBaseline(DataError, ZeroDivisionError):
    pass


class EmptyViews(DataError, ValueError):
    pass


# Key file errors


class KeyVersionMismatch(KeyFileError, ValueError):
    pass


class ChecksumMismatch(KeyFileError, ValueError):
    pass
