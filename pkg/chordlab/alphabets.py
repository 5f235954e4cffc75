"""Chord alphabets A0/A1/A2 and reduction down the quality hierarchy"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Dict, Iterator, List, Optional, Tuple, Union

import pandas as pd

from .chord_syntax import (
    NO_CHORD,
    ChordLabel,
    Quality,
    format_chord,
    parse_chord,
    strip_to_core,
)
from .exceptions import IndexOutOfAlphabetError

HIERARCHY_RESOURCE = "quality_hierarchy.csv"


class AlphabetId(str, Enum):
    """Alphabet levels, from major/minor only up to 14 qualities."""

    A0 = "A0"
    A1 = "A1"
    A2 = "A2"

    def __str__(self) -> str:
        return self.value

    @property
    def qualities(self) -> Tuple[Quality, ...]:
        return ALPHABET_QUALITIES[self]


ALPHABET_QUALITIES: Dict[AlphabetId, Tuple[Quality, ...]] = {
    AlphabetId.A0: (Quality.MAJ, Quality.MIN),
    AlphabetId.A1: (
        Quality.MAJ,
        Quality.MIN,
        Quality.DIM,
        Quality.MAJ7,
        Quality.MIN7,
        Quality.DOM7,
    ),
    AlphabetId.A2: tuple(Quality),
}


@dataclass(frozen=True)
class ChordClass:
    """One class of an alphabet. Index 0 is always N."""

    index: int
    label: ChordLabel
    alphabet: AlphabetId

    @property
    def is_no_chord(self) -> bool:
        return self.label.is_no_chord

    def __str__(self) -> str:
        return format_chord(self.label)


@dataclass(frozen=True)
class QualityHierarchy:
    """Parent of every A2 quality in A1 and in A0 (None means N)."""

    parents: Dict[AlphabetId, Dict[Quality, Optional[Quality]]]

    def parent(
        self, quality: Quality, level: AlphabetId
    ) -> Optional[Quality]:
        if level == AlphabetId.A2:
            return quality
        return self.parents[level][quality]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for quality in Quality:
            row = {"quality": quality.value}
            for level in (AlphabetId.A1, AlphabetId.A0):
                parent = self.parents[level][quality]
                row[f"parent_{level.value}"] = (
                    parent.value if parent is not None else "N"
                )
            rows.append(row)
        return pd.DataFrame(rows)


def load_quality_hierarchy() -> QualityHierarchy:
    """Read the parent table shipped with the package."""
    source = (
        resources.files("chordlab")
        .joinpath("data")
        .joinpath(HIERARCHY_RESOURCE)
    )
    with source.open("r") as f:
        table = pd.read_csv(f, dtype=str, keep_default_na=False)

    def _parent(token: str) -> Optional[Quality]:
        return None if token == "N" else Quality(token)

    parents = {AlphabetId.A1: {}, AlphabetId.A0: {}}
    for row in table.itertuples(index=False):
        quality = Quality(row.quality)
        parents[AlphabetId.A1][quality] = _parent(row.parent_A1)
        parents[AlphabetId.A0][quality] = _parent(row.parent_A0)

    missing = set(Quality) - set(parents[AlphabetId.A1])
    if missing:
        raise ValueError(f"hierarchy table misses qualities: {missing}")
    return QualityHierarchy(parents)


QUALITY_HIERARCHY = load_quality_hierarchy()


class Alphabet:
    """
    Enumerated class set of one alphabet level.

    Classes are ordered N first, then roots C..B, and within a root by the
    quality order of the alphabet.
    """

    def __init__(self, alphabet_id: Union[AlphabetId, str]):
        self.id = AlphabetId(alphabet_id)
        self.qualities = self.id.qualities

        classes = [ChordClass(0, NO_CHORD, self.id)]
        for root in range(12):
            for quality in self.qualities:
                classes.append(
                    ChordClass(
                        len(classes), ChordLabel(root, quality), self.id
                    )
                )
        self.classes: Tuple[ChordClass, ...] = tuple(classes)
        self._index = {
            (c.label.root, c.label.quality): c.index for c in classes[1:]
        }

    def __len__(self) -> int:
        return len(self.classes)

    def __iter__(self) -> Iterator[ChordClass]:
        return iter(self.classes)

    def __repr__(self) -> str:
        return f"Alphabet({self.id.value}, {len(self)} classes)"

    @property
    def no_chord(self) -> ChordClass:
        return self.classes[0]

    def class_at(self, index: int) -> ChordClass:
        if not 0 <= index < len(self.classes):
            raise IndexOutOfAlphabetError(
                f"index {index} outside {self.id.value} "
                f"(size {len(self.classes)})"
            )
        return self.classes[index]

    def index_of(self, label: ChordLabel) -> int:
        """Index of a label that is resident in this alphabet."""
        if label.is_no_chord:
            return 0
        key = (label.root, label.quality)
        if key not in self._index:
            raise IndexOutOfAlphabetError(
                f"{format_chord(label)} is not a class of {self.id.value}"
            )
        return self._index[key]

    def lookup(self, root: int, quality: Quality) -> ChordClass:
        return self.classes[self._index[(root, quality)]]

    def labels(self) -> List[str]:
        return [str(c) for c in self.classes]


@lru_cache(maxsize=None)
def get_alphabet(alphabet_id: Union[AlphabetId, str]) -> Alphabet:
    return Alphabet(AlphabetId(alphabet_id))


def enumerate_classes(target: Union[AlphabetId, str]) -> List[ChordClass]:
    return list(get_alphabet(target).classes)


def reduce(
    label: ChordLabel, target: Union[AlphabetId, str]
) -> ChordClass:
    """
    Reduce a chord to its class in the target alphabet.

    Each quality is mapped to its parent when it exists, otherwise to N.
    Extensions and bass are ignored.
    """
    alphabet = get_alphabet(target)
    if label.is_no_chord:
        return alphabet.no_chord
    quality = QUALITY_HIERARCHY.parent(label.quality, alphabet.id)
    if quality is None:
        return alphabet.no_chord
    return alphabet.lookup(label.root, quality)


def reduce_class(
    chord_class: ChordClass, target: Union[AlphabetId, str]
) -> ChordClass:
    """Move a class of one alphabet into another (e.g. A2 -> A0)."""
    return reduce(chord_class.label, target)


def class_of(
    label: Union[ChordLabel, str], target: Union[AlphabetId, str]
) -> ChordClass:
    if isinstance(label, str):
        label = parse_chord(label)
    return reduce(strip_to_core(label), target)
