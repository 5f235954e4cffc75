"""Classification of chord recognition errors: substitutions and degrees"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import (
    Callable,
    Dict,
    FrozenSet,
    List,
    Optional,
    Sequence,
    Union,
)

import numpy as np
import pandas as pd
from tabulate import tabulate

from .alphabets import (
    QUALITY_HIERARCHY,
    AlphabetId,
    ChordClass,
    get_alphabet,
)
from .alphabets import reduce as reduce_label
from .chord_syntax import Quality
from .distances import pitch_set
from .evaluation import (
    AnnotationTrack,
    Key,
    KeySegment,
    Mode,
    frame_sample,
    intersect_tracks,
    load_key_lab,
    load_lab,
    pair_lab_files,
)
from .exceptions import (
    AlphabetMismatchError,
    ConfigError,
    EmptyReferenceError,
    MissingKeyError,
)

logger = logging.getLogger(__name__)

WEIGHTINGS = ("duration", "count")

# Scale degree (semitones above the tonic) -> (numeral, triad quality)
MAJOR_DEGREES = {
    0: ("I", Quality.MAJ),
    2: ("ii", Quality.MIN),
    4: ("iii", Quality.MIN),
    5: ("IV", Quality.MAJ),
    7: ("V", Quality.MAJ),
    9: ("vi", Quality.MIN),
    11: ("vii°", Quality.DIM),
}

# Natural minor
MINOR_DEGREES = {
    0: ("i", Quality.MIN),
    2: ("ii°", Quality.DIM),
    3: ("III", Quality.MAJ),
    5: ("iv", Quality.MIN),
    7: ("v", Quality.MIN),
    8: ("VI", Quality.MAJ),
    10: ("VII", Quality.MAJ),
}

# Order in which the two numerals of a degree pair are written
FUNCTIONAL_ORDER = {
    Mode.MAJOR: ("I", "IV", "V", "vi", "ii", "iii", "vii°"),
    Mode.MINOR: ("i", "iv", "v", "VI", "ii°", "III", "VII"),
}

HEADLINE_DEGREE_PAIRS = ("I~IV", "I~V", "IV~V", "I~vi", "IV~ii", "I~iii")

# A1 quality -> the triad it extends
_TRIAD_OF_A1 = {
    Quality.MAJ: Quality.MAJ,
    Quality.MAJ7: Quality.MAJ,
    Quality.DOM7: Quality.MAJ,
    Quality.MIN: Quality.MIN,
    Quality.MIN7: Quality.MIN,
    Quality.DIM: Quality.DIM,
}


@dataclass(frozen=True)
class ErrorPair:
    """A stretch of time where the predicted class differs from the target."""

    target: ChordClass
    predicted: ChordClass
    duration: float = 1.0
    key: Optional[Key] = None

    def __post_init__(self):
        if self.target.alphabet != self.predicted.alphabet:
            raise AlphabetMismatchError(
                f"target in {self.target.alphabet.value}, prediction in "
                f"{self.predicted.alphabet.value}"
            )
        if self.target.index == self.predicted.index:
            raise ValueError(f"{self.target} predicted correctly: no error")


@dataclass(frozen=True)
class DegreeOutcome:
    """Numerals of both chords (None: non-diatonic) and their pair tag."""

    target: Optional[str]
    predicted: Optional[str]
    tag: Optional[str] = None

    @property
    def target_diatonic(self) -> bool:
        return self.target is not None

    @property
    def predicted_diatonic(self) -> bool:
        return self.predicted is not None

    @property
    def preserving(self) -> bool:
        return self.target is not None and self.target == self.predicted


def _triad(chord: ChordClass):
    """(root, maj|min) of the A0 image, or None."""
    reduced = reduce_label(chord.label, AlphabetId.A0)
    if reduced.is_no_chord:
        return None
    return reduced.label.root, reduced.label.quality


def _is_dominant(chord: ChordClass) -> bool:
    if chord.is_no_chord:
        return False
    parent = QUALITY_HIERARCHY.parent(chord.label.quality, AlphabetId.A1)
    return parent == Quality.DOM7


def _interval(pair: ErrorPair) -> int:
    return (pair.predicted.label.root - pair.target.label.root) % 12


def _inclusion(mode: Quality) -> Callable[[ErrorPair], bool]:
    def rule(pair: ErrorPair) -> bool:
        target, predicted = _triad(pair.target), _triad(pair.predicted)
        if target is None or predicted is None:
            return False
        if target != predicted or target[1] != mode:
            return False
        a, b = pitch_set(pair.target.label), pitch_set(pair.predicted.label)
        return a <= b or b <= a

    return rule


def _triad_move(
    target_mode: Quality, predicted_mode: Quality, interval: int
) -> Callable[[ErrorPair], bool]:
    def rule(pair: ErrorPair) -> bool:
        target, predicted = _triad(pair.target), _triad(pair.predicted)
        if target is None or predicted is None:
            return False
        return (
            target[1] == target_mode
            and predicted[1] == predicted_mode
            and (predicted[0] - target[0]) % 12 == interval
        )

    return rule


def _tonic_substitution(pair: ErrorPair) -> bool:
    return _triad_move(Quality.MAJ, Quality.MIN, 4)(pair) or _triad_move(
        Quality.MIN, Quality.MAJ, 8
    )(pair)


def _tritone_substitution(pair: ErrorPair) -> bool:
    return (
        _is_dominant(pair.target)
        and _is_dominant(pair.predicted)
        and _interval(pair) == 6
    )


def _substitute_dominant(pair: ErrorPair) -> bool:
    return (
        not pair.target.is_no_chord
        and _is_dominant(pair.predicted)
        and _interval(pair) == 7
    )


def _dim7_equivalence(pair: ErrorPair) -> bool:
    return (
        pair.target.label.quality == Quality.DIM7
        and pair.predicted.label.quality == Quality.DIM7
        and _interval(pair) % 3 == 0
    )


SUBSTITUTION_RULES: Dict[str, Callable[[ErrorPair], bool]] = {
    "incl_maj": _inclusion(Quality.MAJ),
    "incl_min": _inclusion(Quality.MIN),
    "rel_M": _triad_move(Quality.MIN, Quality.MAJ, 3),
    "rel_m": _triad_move(Quality.MAJ, Quality.MIN, 9),
    "tonic_subs_2": _tonic_substitution,
    "m_to_M": _triad_move(Quality.MIN, Quality.MAJ, 0),
    "M_to_m": _triad_move(Quality.MAJ, Quality.MIN, 0),
    "tritone_subs": _tritone_substitution,
    "subs_dominant": _substitute_dominant,
    "dim7_equiv": _dim7_equivalence,
}


def match_substitutions(pair: ErrorPair) -> FrozenSet[str]:
    """Every substitution rule the error satisfies (empty for N)."""
    if pair.target.is_no_chord or pair.predicted.is_no_chord:
        return frozenset()
    return frozenset(
        name for name, rule in SUBSTITUTION_RULES.items() if rule(pair)
    )


def degree_of(chord: ChordClass, key: Optional[Key]) -> Optional[str]:
    """
    Roman numeral of a chord in a key, or None if it is non-diatonic.

    A chord sits on a degree when its root is that scale degree and the
    triad it extends is the degree's diatonic triad.
    """
    if key is None:
        raise MissingKeyError("a key is needed to name harmonic degrees")
    if chord.is_no_chord:
        return None
    parent = QUALITY_HIERARCHY.parent(chord.label.quality, AlphabetId.A1)
    triad = _TRIAD_OF_A1.get(parent)
    if triad is None:
        return None
    degrees = MAJOR_DEGREES if key.mode == Mode.MAJOR else MINOR_DEGREES
    numeral, quality = degrees.get(
        (chord.label.root - key.tonic) % 12, (None, None)
    )
    return numeral if quality == triad else None


def degree_pair_tag(a: str, b: str, mode: Mode) -> str:
    order = FUNCTIONAL_ORDER[Mode(mode)]
    first, second = sorted((a, b), key=order.index)
    return f"{first}~{second}"


def degree_outcome(pair: ErrorPair) -> DegreeOutcome:
    target = degree_of(pair.target, pair.key)
    predicted = degree_of(pair.predicted, pair.key)
    tag = None
    if target is not None and predicted is not None and target != predicted:
        tag = degree_pair_tag(target, predicted, pair.key.mode)
    return DegreeOutcome(target, predicted, tag)


@dataclass
class ErrorReport:
    """
    Error statistics.

    Substitution fractions are over all errors. Degree fractions are over
    errors with a key: the non-diatonic target share over all of them, the
    rest over errors whose target is diatonic.
    """

    total_errors: int = 0
    total_weight: float = 0.0
    weighting: str = "duration"
    explained_fraction: float = 0.0
    rule_fractions: Dict[str, float] = field(
        default_factory=lambda: {name: 0.0 for name in SUBSTITUTION_RULES}
    )
    explained_count: int = 0
    # Number of errors per rule, whatever the weighting
    rule_counts: Dict[str, int] = field(
        default_factory=lambda: {name: 0 for name in SUBSTITUTION_RULES}
    )
    keyed_weight: float = 0.0
    non_diatonic_target_fraction: float = 0.0
    non_diatonic_prediction_fraction: float = 0.0
    degree_preserving_fraction: float = 0.0
    degree_pair_fractions: Dict[str, float] = field(
        default_factory=lambda: {tag: 0.0 for tag in HEADLINE_DEGREE_PAIRS}
    )

    def to_dict(self) -> Dict:
        return {
            "total_errors": self.total_errors,
            "total_weight": self.total_weight,
            "weighting": self.weighting,
            "substitutions": {
                "Tot.": self.explained_fraction,
                **self.rule_fractions,
            },
            "substitution_counts": {
                "Tot.": self.explained_count,
                **self.rule_counts,
            },
            "degrees": {
                "keyed_weight": self.keyed_weight,
                "non_diatonic_target": self.non_diatonic_target_fraction,
                "non_diatonic_prediction": (
                    self.non_diatonic_prediction_fraction
                ),
                "degree_preserving": self.degree_preserving_fraction,
                "pairs": dict(self.degree_pair_fractions),
            },
        }


def _share(part: float, whole: float) -> float:
    return float(part / whole) if whole > 0 else 0.0


def analyze(
    errors: Sequence[ErrorPair],
    weighting: str = "duration",
    min_fraction: float = 0.0,
) -> ErrorReport:
    """
    Substitution and degree statistics of a list of errors.

    Args:
        errors: Error pairs, with keys where known
        weighting: "duration" weights each error by its length, "count"
            counts them
        min_fraction: Degree pairs outside the headline set are kept only
            at or above this fraction

    Returns:
        ErrorReport
    """
    if weighting not in WEIGHTINGS:
        raise ValueError(f"weighting must be one of {WEIGHTINGS}")
    report = ErrorReport(total_errors=len(errors), weighting=weighting)
    if not errors:
        return report

    weights = np.array(
        [e.duration if weighting == "duration" else 1.0 for e in errors]
    )
    total = float(weights.sum())
    report.total_weight = total

    # Substitution rules, over every error
    matched = [match_substitutions(e) for e in errors]
    report.explained_count = sum(1 for m in matched if m)
    report.explained_fraction = _share(
        sum(w for w, m in zip(weights, matched) if m), total
    )
    for name in SUBSTITUTION_RULES:
        report.rule_counts[name] = sum(1 for m in matched if name in m)
        report.rule_fractions[name] = _share(
            sum(w for w, m in zip(weights, matched) if name in m), total
        )

    # Degrees, over errors with a key
    keyed = [(w, degree_outcome(e)) for w, e in zip(weights, errors) if e.key]
    keyed_weight = sum(w for w, _ in keyed)
    diatonic = [(w, o) for w, o in keyed if o.target_diatonic]
    diatonic_weight = sum(w for w, _ in diatonic)
    report.keyed_weight = float(keyed_weight)
    report.non_diatonic_target_fraction = _share(
        keyed_weight - diatonic_weight, keyed_weight
    )
    report.non_diatonic_prediction_fraction = _share(
        sum(w for w, o in diatonic if not o.predicted_diatonic),
        diatonic_weight,
    )
    report.degree_preserving_fraction = _share(
        sum(w for w, o in diatonic if o.preserving), diatonic_weight
    )

    # Degree pairs; rare ones outside the headline set are dropped
    pair_weights: Dict[str, float] = {}
    for w, outcome in diatonic:
        if outcome.tag is not None:
            pair_weights[outcome.tag] = pair_weights.get(outcome.tag, 0) + w
    for tag, weight in sorted(pair_weights.items()):
        fraction = _share(weight, diatonic_weight)
        if tag in HEADLINE_DEGREE_PAIRS or fraction >= min_fraction:
            report.degree_pair_fractions[tag] = fraction
    return report


def _key_lookup(keys: Sequence[KeySegment]) -> AnnotationTrack:
    return AnnotationTrack([], list(keys))


def _key_pieces(lookup: AnnotationTrack, start: float, end: float):
    """Split [start, end) at every key change inside it."""
    cuts = sorted(
        {t for k in lookup.keys for t in (k.start, k.end) if start < t < end}
    )
    bounds = [start, *cuts, end]
    for left, right in zip(bounds, bounds[1:]):
        yield left, right, lookup.key_at((left + right) / 2)


def align_errors(
    reference: AnnotationTrack,
    estimate: AnnotationTrack,
    keys: Optional[Sequence[KeySegment]] = None,
    alphabet: Union[AlphabetId, str] = AlphabetId.A2,
    hop: Optional[float] = None,
) -> List[ErrorPair]:
    """
    Mismatching stretches of two tracks as error pairs.

    Args:
        reference: Target chords
        estimate: Predicted chords
        keys: Key segments; the reference's own keys when omitted
        alphabet: Alphabet both tracks are reduced to
        hop: If given, one pair per mismatching frame of this hop size
            instead of one per intersected interval

    Returns:
        Error pairs in time order; an error spanning a key change is
        split so each piece carries one key
    """
    alphabet = get_alphabet(alphabet)
    lookup = _key_lookup(reference.keys if keys is None else keys)

    if hop is not None:
        if not reference.segments or reference.duration <= 0:
            raise EmptyReferenceError(
                f"reference {reference.name!r} has no duration"
            )
        kwargs = dict(
            hop=hop,
            duration=reference.duration,
            alphabet=alphabet.id,
            start=reference.start,
        )
        targets = frame_sample(reference, **kwargs)
        predictions = frame_sample(estimate, **kwargs)
        return [
            ErrorPair(
                target,
                predicted,
                hop,
                lookup.key_at(reference.start + (i + 0.5) * hop),
            )
            for i, (target, predicted) in enumerate(zip(targets, predictions))
            if target.index != predicted.index
        ]

    intervals, ref_labels, est_labels = intersect_tracks(
        reference, estimate, alphabet.id
    )
    errors = []
    for (start, end), target, predicted in zip(
        intervals, ref_labels, est_labels
    ):
        if target == predicted or end <= start:
            continue
        for left, right, key in _key_pieces(lookup, start, end):
            errors.append(
                ErrorPair(
                    alphabet.class_at(target),
                    alphabet.class_at(predicted),
                    float(right - left),
                    key,
                )
            )
    return errors


def classify_pairs(errors: Sequence[ErrorPair]) -> pd.DataFrame:
    """One row per error with its rules and degrees, for CSV export."""
    rows = []
    for error in errors:
        outcome = degree_outcome(error) if error.key else None
        rows.append(
            {
                "target": str(error.target),
                "predicted": str(error.predicted),
                "duration": error.duration,
                "key": str(error.key) if error.key else "",
                "rules": ";".join(sorted(match_substitutions(error))),
                "target_degree": (
                    outcome.target or "non-diatonic" if outcome else ""
                ),
                "predicted_degree": (
                    outcome.predicted or "non-diatonic" if outcome else ""
                ),
                "degree_pair": outcome.tag or "" if outcome else "",
            }
        )
    return pd.DataFrame(
        rows,
        columns=[
            "target",
            "predicted",
            "duration",
            "key",
            "rules",
            "target_degree",
            "predicted_degree",
            "degree_pair",
        ],
    )


class ACEAnalyzer:
    """Collects and classifies the errors of estimated chord tracks"""

    def __init__(
        self,
        alphabet: Union[AlphabetId, str] = AlphabetId.A2,
        weighting: str = "duration",
        hop: Optional[float] = None,
        min_fraction: float = 0.0,
        on_error: str = "raise",
    ):
        """
        Initialize the analyzer.

        Args:
            alphabet: Alphabet both tracks are reduced to
            weighting: "duration" or "count"
            hop: Frame hop for frame-wise errors (None: intervals)
            min_fraction: Reporting threshold for minor degree pairs
            on_error: How `.lab` readers treat unreadable lines
        """
        if weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}")
        if hop is not None and not hop > 0:
            raise ConfigError(f"hop must be positive, got {hop}")
        self.alphabet = AlphabetId(alphabet)
        self.weighting = weighting
        self.hop = hop
        self.min_fraction = min_fraction
        self.on_error = on_error

    def collect_errors(
        self,
        ref_dir: Union[str, Path],
        est_dir: Union[str, Path],
        keys_dir: Optional[Union[str, Path]] = None,
    ) -> List[ErrorPair]:
        pairs = pair_lab_files(ref_dir, est_dir)
        if not pairs:
            raise EmptyReferenceError(
                f"no matching .lab files in {ref_dir} and {est_dir}"
            )
        errors: List[ErrorPair] = []
        for stem, ref_path, est_path in pairs:
            keys: List[KeySegment] = []
            if keys_dir is not None:
                key_path = Path(keys_dir) / ref_path.name
                if key_path.exists():
                    keys = load_key_lab(key_path, on_error=self.on_error)
                else:
                    logger.warning("No key annotation for %s", stem)
            reference = load_lab(ref_path, on_error=self.on_error)
            estimate = load_lab(est_path, on_error=self.on_error)
            song_errors = align_errors(
                reference, estimate, keys, self.alphabet, self.hop
            )
            logger.info("%s: %d errors", stem, len(song_errors))
            errors.extend(song_errors)
        return errors

    def analyze(self, errors: Sequence[ErrorPair]) -> ErrorReport:
        return analyze(errors, self.weighting, self.min_fraction)

    def print_report(self, report: ErrorReport):
        """Print substitution and degree tables."""
        print("\n" + "=" * 70)
        print(
            f"ERROR ANALYSIS ({report.total_errors} errors, "
            f"weighted by {report.weighting})"
        )
        print("=" * 70)

        substitutions = [["Tot.", f"{report.explained_fraction:.1%}"]] + [
            [name, f"{fraction:.1%}"]
            for name, fraction in report.rule_fractions.items()
            if fraction >= self.min_fraction
        ]
        print(
            tabulate(
                substitutions,
                headers=["substitution", "share"],
                tablefmt="grid",
            )
        )

        degrees = [
            ["non-diatonic target", report.non_diatonic_target_fraction],
            [
                "non-diatonic prediction",
                report.non_diatonic_prediction_fraction,
            ],
            ["same degree", report.degree_preserving_fraction],
        ] + [
            [tag, fraction]
            for tag, fraction in report.degree_pair_fractions.items()
        ]
        print(
            tabulate(
                [[name, f"{value:.1%}"] for name, value in degrees],
                headers=["degrees", "share"],
                tablefmt="grid",
            )
        )
        print("=" * 70)
