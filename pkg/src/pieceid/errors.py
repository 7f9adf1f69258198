"""Exception hierarchy.

Everything raised on purpose derives from :class:`PieceIdError`, so callers
(and the CLI) can separate data problems from programming errors.
"""


class PieceIdError(Exception):
    pass


class ZeroVector(PieceIdError, ValueError):
    pass


class DimensionMismatch(PieceIdError, ValueError):
    pass


class EmptySequence(PieceIdError, ValueError):
    pass


class EmptyCorpus(PieceIdError, ValueError):
    pass


class MissingView(PieceIdError, KeyError):
    pass


class EmptyIndex(PieceIdError, ValueError):
    pass


class InvalidConfig(PieceIdError, ValueError):
    pass


class FragmentTooLong(PieceIdError, ValueError):
    pass


class NonPositive(PieceIdError, ValueError):
    pass


class TruthMissing(PieceIdError, LookupError):
    pass


class EmptyRanks(PieceIdError, ValueError):
    pass


class SizeTooLarge(PieceIdError, ValueError):
    pass


class FormatError(PieceIdError):
    """Base for problems with files on disk."""


class MissingFile(FormatError, FileNotFoundError):
    pass


class BadMagic(FormatError):
    pass


class BadLength(FormatError):
    pass


class DimMismatch(FormatError, DimensionMismatch):
    pass


class DuplicateId(FormatError, ValueError):
    pass
