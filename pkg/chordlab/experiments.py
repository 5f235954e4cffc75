"""Alphabet x distance comparison on synthetic chroma"""

import logging
from dataclasses import replace
from typing import Optional, Sequence, Union

import pandas as pd

from .alphabets import AlphabetId
from .dataset import ChordDataset, split_dataset, synth_dataset
from .distances import DEFAULT_DISTANCE_CONFIG, DistanceConfig, DistanceKind
from .evaluation import EvalVocabulary, class_accuracy
from .exceptions import AlphabetMismatchError, ConfigError
from .learner import TrainConfig, build_dense_model, train
from .similarity import DEFAULT_K, similarity_for

logger = logging.getLogger(__name__)

GRID_COLUMNS = [
    "alphabet",
    "distance",
    "fold",
    "vocabulary",
    "accuracy",
    "best_epoch",
]

_ALPHABET_ORDER = list(AlphabetId)


def vocabularies_for(alphabet: Union[AlphabetId, str]):
    """Vocabularies a model of this alphabet can be reduced to."""
    level = _ALPHABET_ORDER.index(AlphabetId(alphabet))
    return [
        v
        for v in EvalVocabulary
        if _ALPHABET_ORDER.index(v.alphabet) <= level
    ]


def run_configuration(
    alphabet: Union[AlphabetId, str],
    distance: Union[DistanceKind, str],
    dataset: ChordDataset,
    config: TrainConfig = TrainConfig.desk(),
    folds: int = 5,
    K: float = DEFAULT_K,
    hidden: Sequence[int] = (64,),
    distance_config: DistanceConfig = DEFAULT_DISTANCE_CONFIG,
) -> pd.DataFrame:
    """
    Train and test one alphabet/distance pair over repeated random splits.

    Each fold draws a fresh seeded 60/20/20 split, trains on the first part
    with the second as validation, and scores the third under every
    vocabulary the alphabet reduces to. D0 trains on one-hot targets.

    Returns:
        DataFrame with one row per fold and vocabulary
    """
    alphabet = AlphabetId(alphabet)
    distance = DistanceKind(distance)
    if dataset.alphabet != alphabet:
        raise AlphabetMismatchError(
            f"dataset is labelled in {dataset.alphabet.value}, "
            f"not {alphabet.value}"
        )
    if folds < 1:
        raise ConfigError("folds must be at least 1")

    similarity = (
        None
        if distance == DistanceKind.D0
        else similarity_for(distance, alphabet, K, distance_config)
    )
    n_inputs = int(dataset.features.reshape(len(dataset), -1).shape[1])

    rows = []
    for fold in range(folds):
        fold_config = replace(config, seed=config.seed + fold)
        train_set, val_set, test_set = split_dataset(
            dataset, seed=fold_config.seed
        )
        model = build_dense_model(
            alphabet, n_inputs, hidden, seed=fold_config.seed
        )
        state = train(model, train_set, similarity, fold_config, val_set)
        predictions = model.predict(test_set.features)
        for vocab in vocabularies_for(alphabet):
            rows.append(
                [
                    alphabet.value,
                    distance.value,
                    fold,
                    vocab.value,
                    class_accuracy(
                        test_set.labels, predictions, alphabet, vocab
                    ),
                    state.best_epoch,
                ]
            )
        logger.info(
            "%s-%s fold %d: best epoch %d, val acc %.4f",
            alphabet.value,
            distance.value,
            fold,
            state.best_epoch,
            state.best_val_accuracy,
        )
    return pd.DataFrame(rows, columns=GRID_COLUMNS)


def run_grid(
    alphabets: Sequence[Union[AlphabetId, str]] = tuple(AlphabetId),
    distances: Sequence[Union[DistanceKind, str]] = tuple(DistanceKind),
    frames_per_class: int = 10,
    noise_std: float = 0.1,
    config: TrainConfig = TrainConfig.desk(),
    folds: int = 5,
    K: float = DEFAULT_K,
    hidden: Sequence[int] = (64,),
    distance_config: Optional[DistanceConfig] = None,
) -> pd.DataFrame:
    """Every alphabet/distance pair on a synthetic dataset per alphabet."""
    results = []
    for alphabet in alphabets:
        dataset = synth_dataset(
            alphabet, frames_per_class, noise_std, seed=config.seed
        )
        for distance in distances:
            results.append(
                run_configuration(
                    alphabet,
                    distance,
                    dataset,
                    config,
                    folds,
                    K,
                    hidden,
                    distance_config or DEFAULT_DISTANCE_CONFIG,
                )
            )
    return pd.concat(results, ignore_index=True)


def summarize_grid(df: pd.DataFrame) -> pd.DataFrame:
    """Mean and standard deviation of accuracy per cell."""
    return (
        df.groupby(["alphabet", "distance", "vocabulary"], sort=True)[
            "accuracy"
        ]
        .agg(mean="mean", std=lambda s: float(s.std(ddof=0)))
        .reset_index()
    )
