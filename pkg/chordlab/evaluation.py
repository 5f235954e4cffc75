"""Annotation tracks and duration-weighted recall over MIREX vocabularies"""

import logging
import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import mir_eval
import numpy as np
import pandas as pd
from tabulate import tabulate

from .alphabets import AlphabetId, ChordClass, get_alphabet, reduce
from .chord_syntax import (
    NO_CHORD,
    ChordLabel,
    parse_chord,
    parse_root,
    pitch_class_name,
)
from .chord_syntax import transpose as transpose_label
from .exceptions import (
    ChordLabError,
    ConfigError,
    EmptyReferenceError,
    LengthMismatchError,
    MalformedLineError,
    OverlapError,
)

logger = logging.getLogger(__name__)

DEFAULT_HOP = 2048 / 44100
TIME_TOLERANCE = 1e-9
LAB_SUFFIX = ".lab"


class EvalVocabulary(str, Enum):
    """MIREX vocabularies and the alphabet each one reduces to."""

    MAJMIN = "majmin"
    SEVENTHS = "sevenths"
    TETRADS = "tetrads"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str):
            for member in cls:
                if member.value == value.lower():
                    return member
        return None

    @property
    def alphabet(self) -> AlphabetId:
        return {
            EvalVocabulary.MAJMIN: AlphabetId.A0,
            EvalVocabulary.SEVENTHS: AlphabetId.A1,
            EvalVocabulary.TETRADS: AlphabetId.A2,
        }[self]


class Mode(str, Enum):
    MAJOR = "major"
    MINOR = "minor"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Key:
    tonic: int
    mode: Mode = Mode.MAJOR

    def __post_init__(self):
        object.__setattr__(self, "tonic", self.tonic % 12)
        object.__setattr__(self, "mode", Mode(self.mode))

    def __str__(self) -> str:
        return f"{pitch_class_name(self.tonic)}:{self.mode.value}"


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    label: ChordLabel

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class KeySegment:
    """A stretch of time in one key; key None marks silence."""

    start: float
    end: float
    key: Optional[Key]


def _check_ordered(spans: Sequence, what: str):
    for span in spans:
        if not 0 <= span.start < span.end:
            raise OverlapError(
                f"{what} [{span.start}, {span.end}] needs 0 <= start < end"
            )
    for previous, current in zip(spans, spans[1:]):
        if current.start < previous.end - TIME_TOLERANCE:
            raise OverlapError(
                f"{what} starting at {current.start} overlaps the one "
                f"ending at {previous.end}"
            )


@dataclass
class AnnotationTrack:
    """Sorted, non-overlapping chord segments; gaps read as N."""

    segments: List[Segment] = field(default_factory=list)
    keys: List[KeySegment] = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        self.segments = sorted(self.segments, key=lambda s: s.start)
        self.keys = sorted(self.keys, key=lambda k: k.start)
        _check_ordered(self.segments, "segment")
        _check_ordered(self.keys, "key segment")
        self._starts = [s.start for s in self.segments]
        self._key_starts = [k.start for k in self.keys]

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def start(self) -> float:
        return self.segments[0].start if self.segments else 0.0

    @property
    def end(self) -> float:
        return self.segments[-1].end if self.segments else 0.0

    @property
    def duration(self) -> float:
        return self.end - self.start

    def label_at(self, time: float) -> ChordLabel:
        i = bisect_right(self._starts, time) - 1
        if i >= 0 and time < self.segments[i].end:
            return self.segments[i].label
        return NO_CHORD

    def key_at(self, time: float) -> Optional[Key]:
        i = bisect_right(self._key_starts, time) - 1
        if i >= 0 and time < self.keys[i].end:
            return self.keys[i].key
        return None

    def filled(self) -> List[Segment]:
        """Segments with every gap between them turned into an N segment."""
        out: List[Segment] = []
        for segment in self.segments:
            if out and segment.start > out[-1].end + TIME_TOLERANCE:
                out.append(Segment(out[-1].end, segment.start, NO_CHORD))
            out.append(segment)
        return out

    def with_keys(self, keys: Sequence[KeySegment]) -> "AnnotationTrack":
        return AnnotationTrack(list(self.segments), list(keys), self.name)

    def transposed(self, semitones: int) -> "AnnotationTrack":
        """Shift every chord and key; used for pitch-shift augmentation."""
        segments = [
            replace(s, label=transpose_label(s.label, semitones))
            for s in self.segments
        ]
        keys = [
            replace(
                k,
                key=(
                    Key(k.key.tonic + semitones, k.key.mode)
                    if k.key is not None
                    else None
                ),
            )
            for k in self.keys
        ]
        return AnnotationTrack(segments, keys, self.name)


def _lab_lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield number, line


def _split_line(line: str, number: int) -> Tuple[float, float, str]:
    fields = line.split(maxsplit=2)
    if len(fields) != 3:
        raise MalformedLineError(
            "expected 'start end label'", line_number=number
        )
    try:
        start, end = float(fields[0]), float(fields[1])
    except ValueError:
        raise MalformedLineError(
            f"times must be numbers, got {fields[0]!r} {fields[1]!r}",
            line_number=number,
        )
    if not (math.isfinite(start) and math.isfinite(end)):
        raise MalformedLineError("times must be finite", line_number=number)
    if not 0 <= start < end:
        raise MalformedLineError(
            f"need 0 <= start < end, got {start} {end}", line_number=number
        )
    return start, end, fields[2].strip()


def parse_lab(
    text: str,
    on_error: str = "raise",
    resolve_aliases: bool = False,
    name: str = "",
) -> AnnotationTrack:
    """
    Read a chord `.lab` file: one `start end label` per line.

    Args:
        text: File contents
        on_error: "raise" stops at the first bad line, "skip" logs it and
            moves on
        resolve_aliases: Accept shorthand qualities (see parse_chord)
        name: Track name, usually the file stem

    Returns:
        AnnotationTrack sorted by start time
    """
    if on_error not in ("raise", "skip"):
        raise ValueError("on_error must be 'raise' or 'skip'")
    segments = []
    for number, line in _lab_lines(text):
        try:
            start, end, label = _split_line(line, number)
            try:
                chord = parse_chord(label, resolve_aliases=resolve_aliases)
            except ChordLabError as e:
                raise MalformedLineError(str(e), line_number=number) from e
        except MalformedLineError as e:
            if on_error == "raise":
                raise
            logger.warning("Skipping %s: %s", name or "lab", e)
            continue
        segments.append(Segment(start, end, chord))
    return AnnotationTrack(segments, name=name)


def parse_key_label(token: str) -> Optional[Key]:
    """`C`, `C:major`, `A:minor`, `Key Eb:minor`; Silence or N -> None."""
    token = token.strip()
    if token in ("N", "Silence", "silence"):
        return None
    if token.startswith("Key "):
        token = token[4:].strip()
    tonic, _, mode = token.partition(":")
    mode = mode.strip().lower() or "major"
    if mode in ("maj", "major"):
        mode = Mode.MAJOR
    elif mode in ("min", "minor"):
        mode = Mode.MINOR
    else:
        raise ValueError(f"unknown key mode {mode!r}")
    return Key(parse_root(tonic.strip()), mode)


def parse_key_lab(text: str, on_error: str = "raise") -> List[KeySegment]:
    """Read a key annotation file into key segments."""
    keys = []
    for number, line in _lab_lines(text):
        try:
            start, end, label = _split_line(line, number)
            try:
                key = parse_key_label(label)
            except ValueError as e:
                raise MalformedLineError(str(e), line_number=number) from e
        except MalformedLineError as e:
            if on_error == "raise":
                raise
            logger.warning("Skipping key line: %s", e)
            continue
        keys.append(KeySegment(start, end, key))
    keys.sort(key=lambda k: k.start)
    _check_ordered(keys, "key segment")
    return keys


def load_lab(path: Union[str, Path], **kwargs) -> AnnotationTrack:
    path = Path(path)
    return parse_lab(path.read_text(), name=path.stem, **kwargs)


def load_key_lab(path: Union[str, Path], **kwargs) -> List[KeySegment]:
    return parse_key_lab(Path(path).read_text(), **kwargs)


@dataclass
class ScoreReport:
    """Recall = matching duration / evaluated duration."""

    recall: float
    duration: float
    correct: float
    vocabulary: EvalVocabulary
    song_mean_recall: Optional[float] = None
    per_song: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "vocabulary": self.vocabulary.value,
            "recall": self.recall,
            "duration": self.duration,
            "correct": self.correct,
            "song_mean_recall": self.song_mean_recall,
            "per_song": dict(self.per_song),
        }


def _reduced_intervals(
    track: AnnotationTrack, alphabet: AlphabetId
) -> Tuple[np.ndarray, List[int]]:
    segments = track.filled()
    if not segments:
        return np.zeros((0, 2)), []
    intervals = np.array([[s.start, s.end] for s in segments])
    labels = [reduce(s.label, alphabet).index for s in segments]
    return intervals, labels


def intersect_tracks(
    reference: AnnotationTrack,
    estimate: AnnotationTrack,
    alphabet: Union[AlphabetId, str],
) -> Tuple[np.ndarray, List[int], List[int]]:
    """
    Common segmentation of two tracks over the reference's time span.

    The estimate is clipped to the reference span and padded with N.

    Returns:
        (intervals, reference class indices, estimate class indices)
    """
    alphabet = AlphabetId(alphabet)
    if not reference.segments or reference.duration <= 0:
        raise EmptyReferenceError(
            f"reference {reference.name!r} has no duration"
        )
    t_min, t_max = reference.start, reference.end
    # Gaps become N segments in both tracks
    ref_intervals, ref_labels = _reduced_intervals(reference, alphabet)
    est_intervals, est_labels = _reduced_intervals(estimate, alphabet)
    if (
        not est_labels
        or estimate.end <= t_min
        or estimate.start >= t_max
    ):
        est_intervals, est_labels = np.array([[t_min, t_max]]), [0]

    # Clip the estimate to the reference span, padding with N
    est_intervals, est_labels = mir_eval.util.adjust_intervals(
        est_intervals,
        list(est_labels),
        t_min=t_min,
        t_max=t_max,
        start_label=0,
        end_label=0,
    )
    # Cut both tracks at every boundary of either
    intervals, ref_out, est_out = mir_eval.util.merge_labeled_intervals(
        ref_intervals, ref_labels, est_intervals, est_labels
    )
    return intervals, list(ref_out), list(est_out)


def score(
    reference: AnnotationTrack,
    estimate: AnnotationTrack,
    vocab: Union[EvalVocabulary, str] = EvalVocabulary.MAJMIN,
) -> ScoreReport:
    """Duration-weighted recall of an estimate under one vocabulary."""
    vocab = EvalVocabulary(vocab)
    intervals, ref_labels, est_labels = intersect_tracks(
        reference, estimate, vocab.alphabet
    )
    durations = mir_eval.util.intervals_to_durations(intervals)
    matches = np.asarray(ref_labels) == np.asarray(est_labels)
    total = float(durations.sum())
    correct = float(durations[matches].sum())
    recall = correct / total if total > 0 else 0.0
    report = ScoreReport(recall, total, correct, vocab)
    if reference.name:
        report.per_song[reference.name] = recall
    return report


def merge_reports(reports: Sequence[ScoreReport]) -> ScoreReport:
    """Duration-weighted recall over songs, plus the plain song mean."""
    if not reports:
        raise EmptyReferenceError("no reports to merge")
    vocab = reports[0].vocabulary
    if any(r.vocabulary != vocab for r in reports):
        raise ValueError("cannot merge reports of different vocabularies")
    total = sum(r.duration for r in reports)
    correct = sum(r.correct for r in reports)
    per_song: Dict[str, float] = {}
    for r in reports:
        per_song.update(r.per_song)
    return ScoreReport(
        recall=correct / total if total > 0 else 0.0,
        duration=total,
        correct=correct,
        vocabulary=vocab,
        song_mean_recall=float(np.mean([r.recall for r in reports])),
        per_song=per_song,
    )


def frame_sample(
    track: AnnotationTrack,
    hop: float = DEFAULT_HOP,
    duration: Optional[float] = None,
    alphabet: Union[AlphabetId, str] = AlphabetId.A2,
    start: float = 0.0,
) -> List[ChordClass]:
    """
    Class at each frame center start + (i + 0.5) * hop.

    Frames cover `duration` seconds (default: up to the track's end);
    frames in gaps or past the last segment are N.
    """
    if not hop > 0:
        raise ConfigError(f"hop must be positive, got {hop}")
    if duration is None:
        duration = max(track.end - start, 0.0)
    n_frames = max(math.ceil(duration / hop - TIME_TOLERANCE), 0)
    return [
        reduce(track.label_at(start + (i + 0.5) * hop), alphabet)
        for i in range(n_frames)
    ]


def frame_score(
    reference: AnnotationTrack,
    estimate: AnnotationTrack,
    vocab: Union[EvalVocabulary, str] = EvalVocabulary.MAJMIN,
    hop: float = DEFAULT_HOP,
) -> float:
    """Frame-wise agreement over the reference's span."""
    vocab = EvalVocabulary(vocab)
    if not reference.segments or reference.duration <= 0:
        raise EmptyReferenceError(
            f"reference {reference.name!r} has no duration"
        )
    kwargs = dict(
        hop=hop,
        duration=reference.duration,
        alphabet=vocab.alphabet,
        start=reference.start,
    )
    ref = frame_sample(reference, **kwargs)
    est = frame_sample(estimate, **kwargs)
    return float(np.mean([a.index == b.index for a, b in zip(ref, est)]))


def class_accuracy(
    reference: Sequence[int],
    estimate: Sequence[int],
    alphabet: Union[AlphabetId, str],
    vocab: Union[EvalVocabulary, str],
) -> float:
    """Agreement of two class-index arrays after reduction to a vocabulary."""
    reference, estimate = np.asarray(reference), np.asarray(estimate)
    if reference.shape != estimate.shape:
        raise LengthMismatchError(
            f"{reference.size} reference frames, {estimate.size} estimated"
        )
    if reference.size == 0:
        raise EmptyReferenceError("no frames to score")
    source = get_alphabet(alphabet)
    target = EvalVocabulary(vocab).alphabet
    mapping = np.array([reduce(c.label, target).index for c in source])
    return float(np.mean(mapping[reference] == mapping[estimate]))


def pair_lab_files(
    ref_dir: Union[str, Path], est_dir: Union[str, Path]
) -> List[Tuple[str, Path, Path]]:
    """Reference/estimate `.lab` files matched by filename stem."""
    refs = {p.stem: p for p in Path(ref_dir).glob(f"*{LAB_SUFFIX}")}
    ests = {p.stem: p for p in Path(est_dir).glob(f"*{LAB_SUFFIX}")}
    for stem in sorted(set(refs) ^ set(ests)):
        logger.warning("No counterpart for %s, skipping", stem)
    return [
        (stem, refs[stem], ests[stem])
        for stem in sorted(refs)
        if stem in ests
    ]


class ChordEvaluator:
    """Scores estimated chord tracks against references"""

    def __init__(
        self,
        vocabularies: Sequence[Union[EvalVocabulary, str]] = tuple(
            EvalVocabulary
        ),
        on_error: str = "raise",
    ):
        """
        Initialize the evaluator.

        Args:
            vocabularies: Vocabularies to score under
            on_error: How `.lab` readers treat unreadable lines
        """
        self.vocabularies = [EvalVocabulary(v) for v in vocabularies]
        self.on_error = on_error

    def evaluate_pair(
        self, reference: AnnotationTrack, estimate: AnnotationTrack
    ) -> Dict:
        """
        Score one song under every vocabulary.

        Returns:
            Dictionary with the song name, duration and one recall per
            vocabulary
        """
        row = {"song": reference.name, "duration": reference.duration}
        for vocab in self.vocabularies:
            report = score(reference, estimate, vocab)
            row[vocab.value] = report.recall
            row[f"{vocab.value}_correct"] = report.correct
        return row

    def evaluate_directories(
        self, ref_dir: Union[str, Path], est_dir: Union[str, Path]
    ) -> pd.DataFrame:
        """
        Score every paired song of two directories.

        Returns:
            DataFrame with one row per song, sorted by name
        """
        pairs = pair_lab_files(ref_dir, est_dir)
        if not pairs:
            raise EmptyReferenceError(
                f"no matching {LAB_SUFFIX} files in {ref_dir} and {est_dir}"
            )
        results = []
        for stem, ref_path, est_path in pairs:
            reference = load_lab(ref_path, on_error=self.on_error)
            estimate = load_lab(est_path, on_error=self.on_error)
            results.append(self.evaluate_pair(reference, estimate))
            logger.info("Scored %s", stem)
        return pd.DataFrame(results)

    def summarize(self, df: pd.DataFrame) -> Dict[str, Dict[str, float]]:
        """Duration-weighted and song-mean recall per vocabulary."""
        total = float(df["duration"].sum())
        summary = {}
        for vocab in self.vocabularies:
            summary[vocab.value] = {
                "duration_weighted": (
                    float(df[f"{vocab.value}_correct"].sum()) / total
                    if total > 0
                    else 0.0
                ),
                "song_mean": float(df[vocab.value].mean()),
            }
        return summary

    def print_summary_table(self, df: pd.DataFrame):
        """Print per-song recall and the overall summary."""
        display_cols = ["song", "duration"] + [
            v.value for v in self.vocabularies
        ]
        display_df = df[display_cols].copy()
        display_df["duration"] = display_df["duration"].apply(
            lambda x: f"{x:,.1f}s"
        )
        for vocab in self.vocabularies:
            display_df[vocab.value] = display_df[vocab.value].apply(
                lambda x: f"{x:.1%}"
            )

        print("\n" + "=" * 70)
        print("CHORD RECALL")
        print("=" * 70)
        print(
            tabulate(
                display_df,
                headers="keys",
                tablefmt="grid",
                showindex=False,
            )
        )
        for name, values in self.summarize(df).items():
            print(
                f"  {name:<10} weighted: {values['duration_weighted']:.1%}"
                f"   song mean: {values['song_mean']:.1%}"
            )
        print("=" * 70)
