"""Exception hierarchy shared by all lcemd modules."""


class LcEmdError(Exception):
    """Base class for all errors raised by lcemd."""


class AllZeroMass(LcEmdError, ValueError):
    pass


class IndexOutOfRange(LcEmdError, IndexError):
    pass


class VocabularyMismatch(LcEmdError, ValueError):
    pass


class LabelCountMismatch(LcEmdError, ValueError):
    pass


class DimensionMismatch(LcEmdError, ValueError):
    pass


class ShapeMismatch(LcEmdError, ValueError):
    pass


class InstanceTooLarge(LcEmdError, ValueError):
    pass


class IterationOutOfRange(LcEmdError, ValueError):
    pass


class EllTooLarge(LcEmdError, ValueError):
    pass


class ListTooShort(LcEmdError, ValueError):
    pass


# file formats

class FormatError(LcEmdError, ValueError):
    pass


class BadMagic(FormatError):
    pass


class CountMismatch(FormatError):
    pass


class TruncatedFile(FormatError):
    pass


class MalformedHeader(FormatError):
    pass


class DimensionDrift(FormatError):
    pass


class NonFiniteValue(FormatError):
    pass


class VersionMismatch(FormatError):
    pass


class ChecksumFailure(FormatError):
    pass


class EmptyAfterFiltering(LcEmdError, ValueError):
    pass
