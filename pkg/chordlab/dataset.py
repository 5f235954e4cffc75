"""Labelled feature frames: synthetic chroma, splits and CSV bundles"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .alphabets import AlphabetId, get_alphabet
from .distances import pitch_vector
from .exceptions import (
    ConfigError,
    DatasetFileError,
    IndexOutOfAlphabetError,
    ShapeError,
)

logger = logging.getLogger(__name__)

CHROMA_BINS = 12
DEFAULT_SPLIT = (0.6, 0.2, 0.2)


@dataclass
class ChordDataset:
    """Feature frames with their class indices in one alphabet."""

    features: np.ndarray
    labels: np.ndarray
    alphabet: AlphabetId

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        self.alphabet = AlphabetId(self.alphabet)
        if self.features.shape[0] != self.labels.shape[0]:
            raise ShapeError(
                f"{self.features.shape[0]} frames but "
                f"{self.labels.shape[0]} labels"
            )
        if not np.all(np.isfinite(self.features)):
            raise ShapeError("feature frames must be finite")
        size = len(get_alphabet(self.alphabet))
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= size
        ):
            raise IndexOutOfAlphabetError(
                f"label outside {self.alphabet.value} (size {size})"
            )

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def frame_shape(self) -> Tuple[int, ...]:
        return tuple(self.features.shape[1:])

    def subset(self, indices: Sequence[int]) -> "ChordDataset":
        indices = np.asarray(indices, dtype=int)
        return ChordDataset(
            self.features[indices], self.labels[indices], self.alphabet
        )

    def label_names(self):
        labels = get_alphabet(self.alphabet).labels()
        return [labels[i] for i in self.labels]


def synth_dataset(
    alphabet: Union[AlphabetId, str],
    frames_per_class: int,
    noise_std: float = 0.0,
    seed: int = 0,
) -> ChordDataset:
    """
    Synthetic chroma: every class's pitch-class template plus Gaussian
    noise, N drawn as pure noise. Frames are grouped by class index.
    """
    if noise_std < 0:
        raise ConfigError("noise_std must be >= 0")
    if frames_per_class < 0:
        raise ConfigError("frames_per_class must be >= 0")

    rng = np.random.default_rng(seed)
    classes = get_alphabet(alphabet).classes
    templates = np.array([pitch_vector(c.label) for c in classes], dtype=float)
    features = np.repeat(templates, frames_per_class, axis=0)
    if noise_std > 0:
        features = features + rng.normal(0.0, noise_std, features.shape)
    labels = np.repeat(np.arange(len(classes)), frames_per_class)
    logger.debug(
        "Synthesized %d frames over %d classes", len(labels), len(classes)
    )
    return ChordDataset(features, labels, alphabet)


def split_dataset(
    dataset: ChordDataset,
    fractions: Sequence[float] = DEFAULT_SPLIT,
    seed: int = 0,
) -> Tuple[ChordDataset, ChordDataset, ChordDataset]:
    """Seeded random training / validation / test split."""
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise ConfigError("fractions must be three non-negative numbers")
    if not np.isclose(sum(fractions), 1.0):
        raise ConfigError("fractions must sum to 1")

    order = np.random.default_rng(seed).permutation(len(dataset))
    n_train = int(round(fractions[0] * len(dataset)))
    n_val = int(round(fractions[1] * len(dataset)))
    return (
        dataset.subset(order[:n_train]),
        dataset.subset(order[n_train : n_train + n_val]),
        dataset.subset(order[n_train + n_val :]),
    )


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def save_dataset(dataset: ChordDataset, path: Union[str, Path]):
    """
    Write frames to CSV (one row per frame, flattened features, then the
    class index and label) and the alphabet/frame shape to a JSON sidecar.
    """
    path = Path(path)
    flat = dataset.features.reshape(len(dataset), -1)
    df = pd.DataFrame(flat, columns=[f"f{i}" for i in range(flat.shape[1])])
    df["label_index"] = dataset.labels
    df["label"] = dataset.label_names()
    df.to_csv(path, index=False)
    with open(_sidecar(path), "w") as f:
        json.dump(
            {
                "alphabet": dataset.alphabet.value,
                "frame_shape": list(dataset.frame_shape),
            },
            f,
            indent=2,
            sort_keys=True,
        )


def load_dataset(path: Union[str, Path]) -> ChordDataset:
    path = Path(path)
    for required in (path, _sidecar(path)):
        if not required.exists():
            raise DatasetFileError(f"dataset file {required} not found")
    with open(_sidecar(path), "r") as f:
        meta = json.load(f)
    df = pd.read_csv(path)
    feature_cols = [c for c in df.columns if c.startswith("f")]
    features = df[feature_cols].to_numpy(dtype=float)
    features = features.reshape((len(df),) + tuple(meta["frame_shape"]))
    return ChordDataset(
        features, df["label_index"].to_numpy(dtype=int), meta["alphabet"]
    )
