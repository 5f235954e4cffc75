"""Chord distances: categorical (D0), Tonnetz path (D1), pitch vector (D2)"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd

from .alphabets import AlphabetId, ChordClass, get_alphabet, reduce
from .chord_syntax import ChordLabel, Quality, pitch_class_name
from .exceptions import AlphabetMismatchError, ConfigError

logger = logging.getLogger(__name__)

# Semitone intervals above the root for each quality
QUALITY_INTERVALS: Dict[Quality, Tuple[int, ...]] = {
    Quality.MAJ: (0, 4, 7),
    Quality.MIN: (0, 3, 7),
    Quality.DIM: (0, 3, 6),
    Quality.AUG: (0, 4, 8),
    Quality.MAJ6: (0, 4, 7, 9),
    Quality.MIN6: (0, 3, 7, 9),
    Quality.MAJ7: (0, 4, 7, 11),
    Quality.MINMAJ7: (0, 3, 7, 11),
    Quality.MIN7: (0, 3, 7, 10),
    Quality.DOM7: (0, 4, 7, 10),
    Quality.DIM7: (0, 3, 6, 9),
    Quality.HDIM7: (0, 3, 6, 10),
    Quality.SUS2: (0, 2, 7),
    Quality.SUS4: (0, 5, 7),
}

TRIAD_MODES = (Quality.MAJ, Quality.MIN)


class DistanceKind(str, Enum):
    D0 = "D0"
    D1 = "D1"
    D2 = "D2"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class DistanceConfig:
    """
    Tunables of the Tonnetz distance.

    reduction_cost: extra cost paid by a chord that had to be reduced to
        reach a major/minor triad
    surcharge_per_operand: pay the extra cost once per reduced operand
        (True) or at most once per pair (False)
    """

    reduction_cost: float = 1.0
    surcharge_per_operand: bool = True

    def __post_init__(self):
        if self.reduction_cost < 0:
            raise ConfigError("reduction_cost must be non-negative")


DEFAULT_DISTANCE_CONFIG = DistanceConfig()


def pitch_vector(label: ChordLabel) -> np.ndarray:
    """12-dimensional binary vector of the pitch classes in the chord."""
    vector = np.zeros(12, dtype=np.int64)
    if label.is_no_chord:
        return vector
    for interval in QUALITY_INTERVALS[label.quality]:
        vector[(label.root + interval) % 12] = 1
    return vector


def pitch_set(label: ChordLabel) -> FrozenSet[int]:
    return frozenset(int(i) for i in np.flatnonzero(pitch_vector(label)))


@dataclass(frozen=True, order=True)
class TriadNode:
    root: int
    mode: Quality

    def __str__(self) -> str:
        return f"{pitch_class_name(self.root)}:{self.mode.value}"


class TonnetzGraph:
    """
    Major and minor triads linked by the P, R and L transformations.

    Every transformation changes one note of the triad and costs 1.
    """

    TRANSFORMATIONS = ("P", "R", "L")

    def __init__(self):
        self.graph = nx.Graph()
        nodes = [
            TriadNode(root, mode) for root in range(12) for mode in TRIAD_MODES
        ]
        self.graph.add_nodes_from(nodes)
        for node in nodes:
            for name in self.TRANSFORMATIONS:
                self.graph.add_edge(
                    node, self.transform(node, name), transformation=name
                )
        self._lengths = dict(nx.all_pairs_shortest_path_length(self.graph))

    @staticmethod
    def transform(node: TriadNode, name: str) -> TriadNode:
        major = node.mode == Quality.MAJ
        if name == "P":
            return TriadNode(
                node.root, Quality.MIN if major else Quality.MAJ
            )
        if name == "R":
            if major:
                return TriadNode((node.root + 9) % 12, Quality.MIN)
            return TriadNode((node.root + 3) % 12, Quality.MAJ)
        if name == "L":
            if major:
                return TriadNode((node.root + 4) % 12, Quality.MIN)
            return TriadNode((node.root + 8) % 12, Quality.MAJ)
        raise ValueError(f"unknown transformation {name!r}")

    @property
    def nodes(self) -> List[TriadNode]:
        return sorted(self.graph.nodes)

    def neighbors(self, node: TriadNode) -> List[TriadNode]:
        return sorted(self.graph.neighbors(node))

    def shortest_path_length(self, a: TriadNode, b: TriadNode) -> int:
        return self._lengths[a][b]

    @property
    def diameter(self) -> int:
        return nx.diameter(self.graph)

    @staticmethod
    def triad_of(label: ChordLabel) -> Optional[TriadNode]:
        """The A0 triad a chord reduces to, or None when it reduces to N."""
        reduced = reduce(label, AlphabetId.A0)
        if reduced.is_no_chord:
            return None
        return TriadNode(reduced.label.root, reduced.label.quality)


@lru_cache(maxsize=None)
def get_tonnetz() -> TonnetzGraph:
    return TonnetzGraph()


def _check_same_alphabet(a: ChordClass, b: ChordClass):
    if a.alphabet != b.alphabet:
        raise AlphabetMismatchError(
            f"{a} is in {a.alphabet.value} but {b} is in {b.alphabet.value}"
        )


def _tonnetz_cost(
    a: ChordLabel, b: ChordLabel, config: DistanceConfig
) -> Optional[float]:
    """Path length plus reduction surcharge; None if a chord has no triad."""
    tonnetz = get_tonnetz()
    triad_a, triad_b = tonnetz.triad_of(a), tonnetz.triad_of(b)
    if triad_a is None or triad_b is None:
        return None
    reduced = sum(label.quality not in TRIAD_MODES for label in (a, b))
    if not config.surcharge_per_operand:
        reduced = min(reduced, 1)
    path = tonnetz.shortest_path_length(triad_a, triad_b)
    return float(path + reduced * config.reduction_cost)


def _fill_no_harmony(matrix: np.ndarray, undefined: np.ndarray):
    """N-like entries take the largest finite chord-chord distance."""
    finite = matrix[~undefined]
    ceiling = float(finite.max()) if finite.size else 0.0
    matrix[undefined] = ceiling
    np.fill_diagonal(matrix, 0.0)


def _build_d1(
    alphabet_id: AlphabetId, config: DistanceConfig
) -> np.ndarray:
    classes = get_alphabet(alphabet_id).classes
    size = len(classes)
    matrix = np.zeros((size, size))
    undefined = np.zeros((size, size), dtype=bool)
    for i in range(size):
        for j in range(i + 1, size):
            cost = _tonnetz_cost(classes[i].label, classes[j].label, config)
            if cost is None:
                undefined[i, j] = undefined[j, i] = True
            else:
                matrix[i, j] = matrix[j, i] = cost
    _fill_no_harmony(matrix, undefined)
    return matrix


def _build_d2(alphabet_id: AlphabetId) -> np.ndarray:
    classes = get_alphabet(alphabet_id).classes
    vectors = np.array([pitch_vector(c.label) for c in classes])
    diff = vectors[:, None, :] - vectors[None, :, :]
    matrix = np.sqrt((diff**2).sum(axis=-1).astype(float))
    undefined = np.zeros_like(matrix, dtype=bool)
    undefined[0, :] = undefined[:, 0] = True
    _fill_no_harmony(matrix, undefined)
    return matrix


@lru_cache(maxsize=None)
def _cached_matrix(
    kind: DistanceKind, alphabet_id: AlphabetId, config: DistanceConfig
) -> np.ndarray:
    size = len(get_alphabet(alphabet_id))
    if kind == DistanceKind.D0:
        matrix = 1.0 - np.eye(size)
    elif kind == DistanceKind.D1:
        matrix = _build_d1(alphabet_id, config)
    else:
        matrix = _build_d2(alphabet_id)
    logger.debug(
        "Built %s distance matrix for %s (%dx%d)",
        kind.value,
        alphabet_id.value,
        size,
        size,
    )
    matrix.flags.writeable = False
    return matrix


def d0(a: ChordClass, b: ChordClass) -> float:
    """Categorical distance: 0 for the same class, 1 otherwise."""
    _check_same_alphabet(a, b)
    return 0.0 if a.index == b.index else 1.0


def d1(
    a: ChordClass,
    b: ChordClass,
    config: DistanceConfig = DEFAULT_DISTANCE_CONFIG,
) -> float:
    """
    Tonnetz distance.

    Both chords are reduced to their major/minor triad, the shortest
    P/R/L path is counted, and each chord that needed reducing pays
    `config.reduction_cost`. N and chords without a triad (dim, aug, sus,
    ...) sit at the largest finite distance of the alphabet.
    """
    _check_same_alphabet(a, b)
    if a.index == b.index:
        return 0.0
    cost = _tonnetz_cost(a.label, b.label, config)
    if cost is None:
        matrix = _cached_matrix(DistanceKind.D1, a.alphabet, config)
        return float(matrix[a.index, b.index])
    return cost


def d2(a: ChordClass, b: ChordClass) -> float:
    """Euclidean distance between binary pitch vectors (N: largest)."""
    _check_same_alphabet(a, b)
    if a.index == b.index:
        return 0.0
    if a.is_no_chord or b.is_no_chord:
        matrix = _cached_matrix(
            DistanceKind.D2, a.alphabet, DEFAULT_DISTANCE_CONFIG
        )
        return float(matrix[a.index, b.index])
    diff = pitch_vector(a.label) - pitch_vector(b.label)
    return float(np.sqrt(np.sum(diff**2)))


def distance(
    kind: Union[DistanceKind, str],
    a: ChordClass,
    b: ChordClass,
    config: DistanceConfig = DEFAULT_DISTANCE_CONFIG,
) -> float:
    kind = DistanceKind(kind)
    if kind == DistanceKind.D0:
        return d0(a, b)
    if kind == DistanceKind.D1:
        return d1(a, b, config)
    return d2(a, b)


def distance_matrix(
    kind: Union[DistanceKind, str],
    alphabet: Union[AlphabetId, str],
    config: DistanceConfig = DEFAULT_DISTANCE_CONFIG,
) -> np.ndarray:
    """Symmetric |A| x |A| matrix with a zero diagonal, in class order."""
    kind = DistanceKind(kind)
    if kind != DistanceKind.D1:
        config = DEFAULT_DISTANCE_CONFIG
    return _cached_matrix(kind, AlphabetId(alphabet), config).copy()


def distance_frame(
    kind: Union[DistanceKind, str],
    alphabet: Union[AlphabetId, str],
    config: DistanceConfig = DEFAULT_DISTANCE_CONFIG,
) -> pd.DataFrame:
    """Distance matrix labelled with canonical chord strings."""
    labels = get_alphabet(alphabet).labels()
    return pd.DataFrame(
        distance_matrix(kind, alphabet, config), index=labels, columns=labels
    )
