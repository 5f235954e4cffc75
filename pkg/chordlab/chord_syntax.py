"""Harte chord labels: parsing, printing and transposition"""

import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Optional, Tuple, Union

from .exceptions import ChordSyntaxError, UnknownQualityError

PitchClass = int

NO_CHORD_SYMBOL = "N"

# Canonical spelling uses sharps
PITCH_CLASS_NAMES = (
    "C",
    "C#",
    "D",
    "D#",
    "E",
    "F",
    "F#",
    "G",
    "G#",
    "A",
    "A#",
    "B",
)

NATURAL_PITCH_CLASSES = {
    "C": 0,
    "D": 2,
    "E": 4,
    "F": 5,
    "G": 7,
    "A": 9,
    "B": 11,
}


class Quality(str, Enum):
    """The 14 chord qualities of the largest alphabet, in index order."""

    MAJ = "maj"
    MIN = "min"
    DIM = "dim"
    AUG = "aug"
    MAJ6 = "maj6"
    MIN6 = "min6"
    MAJ7 = "maj7"
    MINMAJ7 = "minmaj7"
    MIN7 = "min7"
    DOM7 = "7"
    DIM7 = "dim7"
    HDIM7 = "hdim7"
    SUS2 = "sus2"
    SUS4 = "sus4"

    def __str__(self) -> str:
        return self.value


# Shorthands found in reference annotations, only honoured on request
QUALITY_ALIASES: Dict[str, Quality] = {
    "9": Quality.DOM7,
    "11": Quality.DOM7,
    "13": Quality.DOM7,
    "maj9": Quality.MAJ7,
    "maj11": Quality.MAJ7,
    "maj13": Quality.MAJ7,
    "min9": Quality.MIN7,
    "min11": Quality.MIN7,
    "min13": Quality.MIN7,
    "6": Quality.MAJ6,
    "m": Quality.MIN,
    "hdim": Quality.HDIM7,
}

_ROOT = re.compile(r"[A-G][#b]*")
_QUALITY = re.compile(r"[A-Za-z0-9]+")
_EXTENSION = re.compile(r"\*?[#b]*[0-9]+")
_INTERVAL = re.compile(r"[#b]*[0-9]+")


@dataclass(frozen=True)
class ChordLabel:
    """A parsed Harte chord, or the no-chord marker when root is None.

    Extensions and bass are carried verbatim; classification never reads
    them.
    """

    root: Optional[PitchClass] = None
    quality: Optional[Quality] = None
    extensions: Tuple[str, ...] = ()
    bass: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "extensions", tuple(self.extensions))
        if self.root is None:
            if (
                self.quality is not None
                or self.extensions
                or self.bass is not None
            ):
                raise ValueError("N carries no quality, extensions or bass")
            return
        if not 0 <= self.root <= 11:
            raise ValueError(f"pitch class out of range: {self.root}")
        if self.quality is None:
            raise ValueError("a chord with a root needs a quality")
        object.__setattr__(self, "quality", Quality(self.quality))

    @property
    def is_no_chord(self) -> bool:
        return self.root is None

    def __str__(self) -> str:
        return format_chord(self)


NO_CHORD = ChordLabel()


def parse_root(name: str) -> PitchClass:
    """Map a root spelling (C, Db, E#, Cbb, ...) to its pitch class."""
    if not _ROOT.fullmatch(name):
        raise ChordSyntaxError("expected a root note (A-G)", name, 0)
    pitch = NATURAL_PITCH_CLASSES[name[0]]
    pitch += name.count("#") - name.count("b")
    return pitch % 12


def pitch_class_name(pitch_class: PitchClass) -> str:
    return PITCH_CLASS_NAMES[pitch_class % 12]


def _resolve_quality(
    token: str, text: str, resolve_aliases: bool
) -> Tuple[Quality, Tuple[str, ...]]:
    try:
        return Quality(token), ()
    except ValueError:
        pass
    if resolve_aliases and token in QUALITY_ALIASES:
        return QUALITY_ALIASES[token], (token,)
    raise UnknownQualityError(token, text)


def _parse_extensions(text: str, pos: int) -> Tuple[Tuple[str, ...], int]:
    """Read `(tok,tok,...)` starting at the opening parenthesis."""
    tokens = []
    pos += 1
    while True:
        match = _EXTENSION.match(text, pos)
        if match is None:
            raise ChordSyntaxError("expected an extension interval", text, pos)
        tokens.append(match.group())
        pos = match.end()
        if pos >= len(text):
            raise ChordSyntaxError("unterminated extension list", text, pos)
        if text[pos] == ")":
            return tuple(tokens), pos + 1
        if text[pos] != ",":
            raise ChordSyntaxError(
                f"unexpected character {text[pos]!r} in extensions", text, pos
            )
        pos += 1


def parse_chord(
    text: Union[str, bytes], resolve_aliases: bool = False
) -> ChordLabel:
    """
    Parse a Harte chord label.

    Grammar: `N` | `root` | `root:quality` | `root:quality(ext,...)`,
    each optionally followed by `/interval`. A bare root is major.

    Args:
        text: The label, already trimmed
        resolve_aliases: Map shorthands such as `9` or `min9` onto the 14
            qualities (the shorthand is kept as an extension)

    Returns:
        The parsed ChordLabel

    Raises:
        ChordSyntaxError: malformed label, with the failing position
        UnknownQualityError: well-formed label with an unknown quality
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ChordSyntaxError(
                "label is not valid UTF-8", repr(text), e.start
            ) from e
    if not isinstance(text, str):
        raise ChordSyntaxError("label must be a string", repr(text), 0)
    if not text:
        raise ChordSyntaxError("empty chord label", text, 0)

    if text[0] == NO_CHORD_SYMBOL:
        if len(text) > 1:
            raise ChordSyntaxError("unexpected text after 'N'", text, 1)
        return NO_CHORD

    match = _ROOT.match(text)
    if match is None:
        raise ChordSyntaxError("expected a root note (A-G) or 'N'", text, 0)
    root = parse_root(match.group())
    pos = match.end()

    quality = Quality.MAJ
    extensions: Tuple[str, ...] = ()
    if pos < len(text) and text[pos] == ":":
        pos += 1
        match = _QUALITY.match(text, pos)
        if match is None:
            raise ChordSyntaxError("expected a chord quality", text, pos)
        quality, alias_tokens = _resolve_quality(
            match.group(), text, resolve_aliases
        )
        pos = match.end()
        if pos < len(text) and text[pos] == "(":
            extensions, pos = _parse_extensions(text, pos)
        extensions = alias_tokens + extensions

    bass = None
    if pos < len(text) and text[pos] == "/":
        match = _INTERVAL.match(text, pos + 1)
        if match is None:
            raise ChordSyntaxError("expected a bass interval", text, pos + 1)
        bass = match.group()
        pos = match.end()

    if pos != len(text):
        raise ChordSyntaxError(
            f"unexpected character {text[pos]!r}", text, pos
        )

    return ChordLabel(root, quality, extensions, bass)


def strip_to_core(label: ChordLabel) -> ChordLabel:
    """Drop extensions and bass: F:maj7(11)/3 -> F:maj7."""
    if label.is_no_chord:
        return label
    return replace(label, extensions=(), bass=None)


def format_chord(label: ChordLabel) -> str:
    if label.is_no_chord:
        return NO_CHORD_SYMBOL
    text = f"{pitch_class_name(label.root)}:{label.quality.value}"
    if label.extensions:
        text += "(" + ",".join(label.extensions) + ")"
    if label.bass is not None:
        text += "/" + label.bass
    return text


def transpose(label: ChordLabel, semitones: int) -> ChordLabel:
    """Shift the root by a number of semitones; N is a fixed point."""
    if label.is_no_chord:
        return label
    return replace(label, root=(label.root + semitones) % 12)
