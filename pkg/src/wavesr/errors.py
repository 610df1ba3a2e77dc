"""Exception hierarchy shared by all wavesr modules."""


class WavesrError(Exception):
    """Base class for all toolkit errors."""


class ShapeMismatch(WavesrError):
    pass


class NonFiniteValue(WavesrError):
    pass


class ChannelMismatch(WavesrError):
    pass


class ShiftTooLarge(WavesrError):
    pass


class NonScalarLoss(WavesrError):
    pass


class OddSpatialSize(WavesrError):
    pass


class ChannelNotDivisibleBy4(WavesrError):
    pass


class NotDivisible(WavesrError):
    pass


class InvalidConfig(WavesrError):
    pass


class ShapeIncompatible(WavesrError):
    pass


class BadTransformId(WavesrError):
    pass


class ImageTooSmall(WavesrError):
    pass


class DegenerateOutput(WavesrError):
    pass


class TooSmall(WavesrError):
    pass


class DecodeError(WavesrError):
    pass


class BadSize(WavesrError):
    pass


class VersionMismatch(WavesrError):
    pass


class CorruptPayload(WavesrError):
    pass
