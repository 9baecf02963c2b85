"""Exception hierarchy shared by every module."""


class ShapeflowError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(ShapeflowError, ValueError):
    pass


class LengthMismatch(ShapeflowError, ValueError):
    pass


class EmptyMask(ShapeflowError, ValueError):
    """A mask that must select at least one pixel is empty.

    ``frame_index`` is set when the error comes out of a sequence operation.
    """

    def __init__(self, message, frame_index=None):
        super().__init__(message)
        self.frame_index = frame_index


class FieldTooSmall(ShapeflowError, ValueError):
    pass


class InvalidParams(ShapeflowError, ValueError):
    pass


class InvalidSpec(ShapeflowError, ValueError):
    pass


class NoKnownPixels(ShapeflowError, ValueError):
    pass


class NoValidPixels(ShapeflowError, ValueError):
    pass


class EmptyUnion(ShapeflowError, ValueError):
    pass


class NonConvergence(ShapeflowError, RuntimeError):
    """Solver hit its iteration budget; the best iterate travels with the error."""

    def __init__(self, message, flow=None, report=None):
        super().__init__(message)
        self.flow = flow
        self.report = report


class FormatError(ShapeflowError, ValueError):
    """Malformed file content."""


class BadMagic(FormatError):
    pass


class TruncatedFile(FormatError):
    pass


class NonFiniteValue(FormatError):
    pass


class BadHeader(FormatError):
    pass


class UnsupportedMaxval(FormatError):
    pass


class IoFailure(ShapeflowError, OSError):
    pass


class LayoutError(ShapeflowError, ValueError):
    """Sequence directory is missing files or has gaps in its numbering."""


class ConfigError(ShapeflowError, ValueError):
    pass
