"""Similarity matrix, soft targets and the similarity-weighted loss"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import pandas as pd
from scipy.special import softmax

from .alphabets import AlphabetId, ChordClass, get_alphabet
from .distances import DEFAULT_DISTANCE_CONFIG, DistanceConfig, distance_matrix
from .exceptions import (
    AsymmetricInputError,
    IndexOutOfAlphabetError,
    LengthMismatchError,
    NonPositiveKError,
)

logger = logging.getLogger(__name__)

LOG_EPSILON = 1e-12
SYMMETRY_TOLERANCE = 1e-12
DEFAULT_K = 1.0


@dataclass(frozen=True)
class SimilarityMatrix:
    """Pairwise similarity ratios 1 / (D + K), normalized by their maximum."""

    entries: np.ndarray
    K: float
    normalized: bool = True
    alphabet: Optional[AlphabetId] = None

    def __len__(self) -> int:
        return self.entries.shape[0]

    def row(self, index: int) -> np.ndarray:
        return self.entries[index].copy()


@dataclass(frozen=True)
class TargetDistribution:
    weights: np.ndarray
    source_index: int


@dataclass(frozen=True)
class PredictionDistribution:
    probabilities: np.ndarray

    def __post_init__(self):
        probabilities = np.asarray(self.probabilities, dtype=float)
        if np.any(probabilities < 0) or abs(probabilities.sum() - 1) > 1e-9:
            raise ValueError("probabilities must be >= 0 and sum to 1")
        object.__setattr__(self, "probabilities", probabilities)


def _as_vector(values) -> np.ndarray:
    if isinstance(values, TargetDistribution):
        values = values.weights
    elif isinstance(values, PredictionDistribution):
        values = values.probabilities
    return np.asarray(values, dtype=float)


def build_similarity(
    dist: np.ndarray,
    K: float = DEFAULT_K,
    alphabet: Optional[Union[AlphabetId, str]] = None,
) -> SimilarityMatrix:
    """
    Turn a distance matrix into a normalized similarity matrix.

    Args:
        dist: Symmetric, non-negative distance matrix
        K: Smoothing constant, strictly positive
        alphabet: Alphabet the rows are indexed by, if known

    Returns:
        SimilarityMatrix whose maximum entry (and diagonal) is 1
    """
    if not K > 0:
        raise NonPositiveKError(f"K must be positive, got {K}")
    dist = np.asarray(dist, dtype=float)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise AsymmetricInputError(
            f"distance matrix must be square, got shape {dist.shape}"
        )
    if not np.allclose(dist, dist.T, rtol=0, atol=SYMMETRY_TOLERANCE):
        raise AsymmetricInputError("distance matrix is not symmetric")
    if np.any(dist < 0):
        raise AsymmetricInputError("distance matrix has negative entries")

    entries = 1.0 / (dist + K)
    entries = entries / entries.max()
    entries.flags.writeable = False
    return SimilarityMatrix(
        entries=entries,
        K=float(K),
        normalized=True,
        alphabet=AlphabetId(alphabet) if alphabet is not None else None,
    )


def similarity_for(
    kind: str,
    alphabet: Union[AlphabetId, str],
    K: float = DEFAULT_K,
    config: DistanceConfig = DEFAULT_DISTANCE_CONFIG,
) -> SimilarityMatrix:
    """Similarity matrix of one distance over one alphabet."""
    return build_similarity(
        distance_matrix(kind, alphabet, config), K, alphabet
    )


def similarity_frame(matrix: SimilarityMatrix) -> pd.DataFrame:
    labels = (
        get_alphabet(matrix.alphabet).labels()
        if matrix.alphabet is not None
        else list(range(len(matrix)))
    )
    return pd.DataFrame(matrix.entries, index=labels, columns=labels)


def soft_target(
    chord: Union[ChordClass, int],
    matrix: SimilarityMatrix,
    renormalize: bool = False,
) -> TargetDistribution:
    """
    Soft target of one class: the one-hot vector times the matrix.

    With a symmetric matrix this selects the class's row.
    """
    if isinstance(chord, ChordClass):
        if (
            matrix.alphabet is not None
            and chord.alphabet != matrix.alphabet
        ):
            raise IndexOutOfAlphabetError(
                f"{chord} belongs to {chord.alphabet.value}, matrix is "
                f"{matrix.alphabet.value}"
            )
        index = chord.index
    else:
        index = int(chord)
    if not 0 <= index < len(matrix):
        raise IndexOutOfAlphabetError(
            f"class index {index} outside matrix of size {len(matrix)}"
        )
    weights = matrix.row(index)
    if renormalize:
        weights = weights / weights.sum()
    return TargetDistribution(weights=weights, source_index=index)


def soft_targets(
    indices: np.ndarray,
    matrix: Optional[SimilarityMatrix],
    size: Optional[int] = None,
    renormalize: bool = False,
) -> np.ndarray:
    """
    Target rows for a batch of class indices.

    Without a matrix the targets are one-hot (categorical distance).
    """
    indices = np.asarray(indices, dtype=int)
    if matrix is None:
        if size is None:
            raise ValueError("size is required for one-hot targets")
        return np.eye(size)[indices]
    if indices.size and (indices.min() < 0 or indices.max() >= len(matrix)):
        raise IndexOutOfAlphabetError("class index outside the matrix")
    targets = np.array(matrix.entries[indices], dtype=float)
    if renormalize:
        targets = targets / targets.sum(axis=1, keepdims=True)
    return targets


def weighted_loss(target, pred, epsilon: float = LOG_EPSILON) -> float:
    """Cross-entropy of a prediction against a (soft) target vector."""
    target, pred = _as_vector(target), _as_vector(pred)
    if target.shape != pred.shape:
        raise LengthMismatchError(
            f"target has {target.size} entries, prediction {pred.size}"
        )
    return float(-np.sum(target * np.log(np.maximum(pred, epsilon))))


def loss_gradient(target, logits) -> np.ndarray:
    """Gradient of weighted_loss(target, softmax(logits)) w.r.t. logits."""
    target, logits = _as_vector(target), _as_vector(logits)
    if target.shape != logits.shape:
        raise LengthMismatchError(
            f"target has {target.size} entries, logits {logits.size}"
        )
    return target.sum() * softmax(logits) - target


def batch_loss(
    targets: np.ndarray, probabilities: np.ndarray
) -> float:
    """Mean weighted loss over the rows of a batch."""
    targets = np.asarray(targets, dtype=float)
    probabilities = np.asarray(probabilities, dtype=float)
    if targets.shape != probabilities.shape:
        raise LengthMismatchError(
            f"targets {targets.shape} vs predictions {probabilities.shape}"
        )
    log_p = np.log(np.maximum(probabilities, LOG_EPSILON))
    return float(-np.sum(targets * log_p) / targets.shape[0])


def batch_loss_gradient(
    targets: np.ndarray, logits: np.ndarray
) -> np.ndarray:
    """Gradient of batch_loss(targets, softmax(logits)) w.r.t. logits."""
    targets = np.asarray(targets, dtype=float)
    if targets.shape != logits.shape:
        raise LengthMismatchError(
            f"targets {targets.shape} vs logits {logits.shape}"
        )
    probabilities = softmax(logits, axis=1)
    mass = targets.sum(axis=1, keepdims=True)
    return (mass * probabilities - targets) / targets.shape[0]
