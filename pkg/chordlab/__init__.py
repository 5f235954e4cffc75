"""Chord label algebra, chord distances and error analysis for ACE"""

from .alphabets import AlphabetId, ChordClass, class_of, enumerate_classes
from .analyzer import ACEAnalyzer, ErrorPair, analyze, match_substitutions
from .chord_syntax import ChordLabel, Quality, parse_chord, transpose
from .distances import DistanceConfig, DistanceKind, distance_matrix
from .evaluation import AnnotationTrack, ChordEvaluator, parse_lab, score
from .learner import TrainConfig, build_dense_model, train
from .similarity import build_similarity, soft_target, weighted_loss

__version__ = "0.1.0"
__all__ = [
    "AlphabetId",
    "ChordClass",
    "class_of",
    "enumerate_classes",
    "ACEAnalyzer",
    "ErrorPair",
    "analyze",
    "match_substitutions",
    "ChordLabel",
    "Quality",
    "parse_chord",
    "transpose",
    "DistanceConfig",
    "DistanceKind",
    "distance_matrix",
    "AnnotationTrack",
    "ChordEvaluator",
    "parse_lab",
    "score",
    "TrainConfig",
    "build_dense_model",
    "train",
    "build_similarity",
    "soft_target",
    "weighted_loss",
]
