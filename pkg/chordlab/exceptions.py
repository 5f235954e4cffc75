"""Errors raised by chordlab"""

from typing import Optional


class ChordLabError(Exception):
    """Base class for every data error raised by the package."""

    pass


class ConfigError(ChordLabError, ValueError):
    """A configuration value is out of range."""

    pass


class ChordSyntaxError(ChordLabError, ValueError):
    """A chord label does not follow the Harte grammar.

    The offending position (0-based character offset) is kept so callers
    can point at it.
    """

    def __init__(self, message: str, text: str = "", position: int = 0):
        self.text = text
        self.position = position
        super().__init__(f"{message} at position {position} in {text!r}")


class UnknownQualityError(ChordLabError, ValueError):
    """The label is well formed but its quality is not one of the 14."""

    def __init__(self, quality: str, text: str = ""):
        self.quality = quality
        self.text = text
        super().__init__(f"unknown chord quality {quality!r} in {text!r}")


class AlphabetMismatchError(ChordLabError, ValueError):
    """Two chord classes (or a model and its data) use different alphabets."""

    pass


class NonPositiveKError(ChordLabError, ValueError):
    """The similarity smoothing constant K must be strictly positive."""

    pass


class AsymmetricInputError(ChordLabError, ValueError):
    """A distance matrix is not square, not symmetric or negative."""

    pass


class IndexOutOfAlphabetError(ChordLabError, IndexError):
    """A class index does not exist in the alphabet."""

    pass


class LengthMismatchError(ChordLabError, ValueError):
    """Two vectors that must be aligned have different lengths."""

    pass


class ShapeError(ChordLabError, ValueError):
    """An array does not have the shape a layer expects."""

    pass


class EmptyDatasetError(ChordLabError, ValueError):
    """Training was asked to run on zero frames."""

    pass


class MalformedLineError(ChordLabError, ValueError):
    """A `.lab` line could not be read."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class OverlapError(ChordLabError, ValueError):
    """Two segments of an annotation track overlap."""

    pass


class EmptyReferenceError(ChordLabError, ValueError):
    """The reference track has no duration to evaluate."""

    pass


class MissingKeyError(ChordLabError, ValueError):
    """A harmonic degree was requested without a key."""

    pass


class DatasetFileError(ChordLabError, FileNotFoundError):
    """A dataset CSV or its JSON sidecar is missing."""

    pass
