"""Tests for substitution and harmonic-degree error analysis"""

import json
from pathlib import Path

import numpy as np
import pytest

from chordlab.alphabets import class_of, enumerate_classes
from chordlab.analyzer import (
    ACEAnalyzer,
    ErrorPair,
    align_errors,
    analyze,
    classify_pairs,
    degree_of,
    degree_outcome,
    degree_pair_tag,
    match_substitutions,
)
from chordlab.chord_syntax import parse_chord, transpose
from chordlab.distances import d2
from chordlab.evaluation import (
    Key,
    Mode,
    parse_key_lab,
    parse_key_label,
    parse_lab,
)
from chordlab.exceptions import (
    AlphabetMismatchError,
    ConfigError,
    MissingKeyError,
)


def load_fixture():
    with open(Path(__file__).parent / "analyzer_pairs.json") as f:
        return json.load(f)


def pair(target, predicted, duration=1.0, key="C:major", alphabet="A2"):
    return ErrorPair(
        class_of(target, alphabet),
        class_of(predicted, alphabet),
        duration,
        parse_key_label(key) if key else None,
    )


class TestSubstitutions:
    """Substitution rules on single errors"""

    def setup_method(self):
        """Set up test fixtures"""
        self.fixture = load_fixture()

    def test_fixture_rules(self):
        """Test each fixture error matches exactly its listed rules"""
        for item in self.fixture["pairs"]:
            error = pair(item["target"], item["predicted"])
            assert match_substitutions(error) == set(item["rules"]), item

    def test_no_chord_matches_nothing(self):
        """Test errors involving N are never substitutions"""
        assert match_substitutions(pair("N", "C:maj")) == set()
        assert match_substitutions(pair("G:7", "N")) == set()

    def test_dim7_equivalence(self):
        """Test diminished sevenths a minor third apart"""
        assert "dim7_equiv" in match_substitutions(pair("C:dim7", "A:dim7"))
        assert "dim7_equiv" not in match_substitutions(
            pair("C:dim7", "D:dim7")
        )

    def test_dim7_equivalents_share_pitches(self):
        """Test every dim7_equiv pair is at pitch-vector distance zero"""
        base = parse_chord("C:dim7")
        for root in range(12):
            for shift in (3, 6, 9):
                target = class_of(transpose(base, root), "A2")
                predicted = class_of(transpose(base, root + shift), "A2")
                error = ErrorPair(target, predicted, key=None)

                assert "dim7_equiv" in match_substitutions(error)
                assert d2(target, predicted) == 0

    def test_error_pair_validation(self):
        """Test correct predictions and mixed alphabets are rejected"""
        with pytest.raises(ValueError):
            pair("C:maj", "C:maj")
        with pytest.raises(AlphabetMismatchError):
            ErrorPair(class_of("C:maj", "A0"), class_of("A:min", "A1"))


class TestDegrees:
    """Roman numerals in a key"""

    def test_major_key(self):
        """Test diatonic chords and their sevenths in C major"""
        key = Key(0, Mode.MAJOR)

        assert degree_of(class_of("C:maj", "A2"), key) == "I"
        assert degree_of(class_of("C:maj7", "A2"), key) == "I"
        assert degree_of(class_of("G:7", "A2"), key) == "V"
        assert degree_of(class_of("B:hdim7", "A2"), key) == "vii°"
        assert degree_of(class_of("C:min", "A2"), key) is None
        assert degree_of(class_of("C:aug", "A2"), key) is None
        assert degree_of(class_of("N", "A2"), key) is None

    def test_minor_key(self):
        """Test natural minor degrees"""
        key = parse_key_label("A:minor")

        assert degree_of(class_of("A:min", "A2"), key) == "i"
        assert degree_of(class_of("E:min", "A2"), key) == "v"
        assert degree_of(class_of("G:maj", "A2"), key) == "VII"
        assert degree_of(class_of("E:maj", "A2"), key) is None

    def test_transposition_equivariance(self):
        """Test moving chord and key together keeps the numeral"""
        classes = enumerate_classes("A2")
        for shift in range(1, 12):
            moved = [
                class_of(transpose(c.label, shift), "A2") for c in classes
            ]
            for tonic in range(12):
                for mode in Mode:
                    key = Key(tonic, mode)
                    shifted_key = Key(tonic + shift, mode)
                    for chord, chord_moved in zip(classes, moved):
                        assert degree_of(chord_moved, shifted_key) == (
                            degree_of(chord, key)
                        )

    def test_missing_key(self):
        """Test naming a degree needs a key"""
        with pytest.raises(MissingKeyError):
            degree_of(class_of("C:maj", "A2"), None)

    def test_pair_tag_order(self):
        """Test numerals are written in functional order"""
        assert degree_pair_tag("vi", "I", Mode.MAJOR) == "I~vi"
        assert degree_pair_tag("ii", "IV", Mode.MAJOR) == "IV~ii"
        assert degree_pair_tag("v", "i", Mode.MINOR) == "i~v"

    def test_outcome(self):
        """Test preserving and non-diatonic outcomes"""
        same = degree_outcome(pair("C:maj7", "C:maj"))
        assert same.preserving and same.tag is None

        outside = degree_outcome(pair("C:maj", "C#:maj"))
        assert outside.target_diatonic and not outside.predicted_diatonic


class TestAnalyze:
    """Aggregated statistics"""

    def setup_method(self):
        """Set up test fixtures"""
        self.fixture = load_fixture()
        self.errors = [
            pair(p["target"], p["predicted"], key=self.fixture["key"])
            for p in self.fixture["pairs"]
        ]

    def test_fixture_report(self):
        """Test every reported fraction on the twenty-error fixture"""
        expected = self.fixture["expected"]
        diatonic = expected["diatonic_targets"]
        report = analyze(self.errors)

        assert report.total_errors == 20
        assert report.total_weight == pytest.approx(20)
        substitutions = report.to_dict()["substitutions"]
        counts = report.to_dict()["substitution_counts"]
        for name, value in expected["substitutions"].items():
            assert substitutions[name] == pytest.approx(value), name
            assert counts[name] == round(value * 20), name

        assert report.non_diatonic_target_fraction == pytest.approx(
            expected["non_diatonic_target"]
        )
        assert report.non_diatonic_prediction_fraction == pytest.approx(
            expected["non_diatonic_prediction"] / diatonic
        )
        assert report.degree_preserving_fraction == pytest.approx(
            expected["degree_preserving"] / diatonic
        )
        for tag, count in expected["pairs"].items():
            assert report.degree_pair_fractions[tag] == pytest.approx(
                count / diatonic
            ), tag

    def test_duration_weighting(self):
        """Test longer errors weigh more"""
        errors = [
            pair("C:maj", "A:min", duration=3.0),
            pair("C:maj", "F:maj", duration=1.0),
        ]

        by_duration = analyze(errors)
        by_count = analyze(errors, weighting="count")
        assert by_duration.rule_fractions["rel_m"] == pytest.approx(0.75)
        assert by_count.rule_fractions["rel_m"] == pytest.approx(0.5)
        assert by_duration.rule_counts["rel_m"] == 1
        assert by_duration.explained_count == 1

    def test_total_bounds(self):
        """Test Tot. lies between the largest rule share and their sum"""
        rng = np.random.default_rng(8)
        classes = enumerate_classes("A2")
        errors = []
        while len(errors) < 300:
            a, b = rng.integers(0, len(classes), size=2)
            if a != b:
                errors.append(
                    ErrorPair(classes[a], classes[b], rng.uniform(0.1, 3.0))
                )

        for report in (analyze(errors), analyze(self.errors)):
            fractions = report.rule_fractions.values()
            assert report.explained_fraction >= max(fractions) - 1e-12
            assert report.explained_fraction <= sum(fractions) + 1e-12

    def test_min_fraction(self):
        """Test rare non-headline degree pairs are filtered"""
        errors = [
            pair("G:maj", "A:min", duration=1.0),
            pair("C:maj", "F:maj", duration=9.0),
        ]

        dropped = analyze(errors, min_fraction=0.2).to_dict()["degrees"]
        assert "V~vi" not in dropped["pairs"]
        kept = analyze(errors, min_fraction=0.05).degree_pair_fractions
        assert kept["V~vi"] == pytest.approx(0.1)
        assert kept["I~IV"] == pytest.approx(0.9)

    def test_errors_without_key(self):
        """Test degree statistics skip unkeyed errors"""
        report = analyze([pair("C:maj", "A:min", key=None)])

        assert report.rule_fractions["rel_m"] == 1.0
        assert report.keyed_weight == 0.0
        assert report.degree_preserving_fraction == 0.0

    def test_empty(self):
        """Test no errors gives an all-zero report"""
        report = analyze([])

        assert report.total_errors == 0
        assert report.explained_fraction == 0.0
        with pytest.raises(ValueError):
            analyze([], weighting="frames")

    def test_classify_pairs(self):
        """Test the per-error table"""
        df = classify_pairs(self.errors)

        assert len(df) == 20
        assert df.loc[2, "rules"] == "rel_m"
        assert df.loc[2, "degree_pair"] == "I~vi"
        assert df.loc[16, "predicted_degree"] == "non-diatonic"
        assert df.loc[0, "key"] == "C:major"


class TestAlignErrors:
    """Turning two tracks into error pairs"""

    def setup_method(self):
        """Set up test fixtures"""
        self.reference = parse_lab("0 2 C:maj\n2 4 G:maj\n")
        self.estimate = parse_lab("0 2 A:min\n2 4 G:maj\n")
        self.keys = parse_key_lab("0 4 C:major\n")

    def test_intervals(self):
        """Test one error per mismatching interval"""
        errors = align_errors(self.reference, self.estimate, self.keys)

        assert len(errors) == 1
        assert str(errors[0].target) == "C:maj"
        assert str(errors[0].predicted) == "A:min"
        assert errors[0].duration == pytest.approx(2.0)
        assert errors[0].key == Key(0, Mode.MAJOR)

    def test_frames(self):
        """Test one error per mismatching frame"""
        errors = align_errors(
            self.reference, self.estimate, self.keys, hop=0.5
        )

        assert len(errors) == 4
        assert all(e.duration == 0.5 for e in errors)

    def test_key_change_splits_error(self):
        """Test an error across a modulation takes each key in turn"""
        reference = parse_lab("0 4 C:maj\n")
        estimate = parse_lab("0 4 A:min\n")
        keys = parse_key_lab("0 2 C:major\n2 4 G:major\n")
        errors = align_errors(reference, estimate, keys)

        assert [(e.duration, str(e.key)) for e in errors] == [
            (2.0, "C:major"),
            (2.0, "G:major"),
        ]
        report = analyze(errors)
        assert report.degree_pair_fractions["I~vi"] == pytest.approx(0.5)
        assert report.degree_pair_fractions["IV~ii"] == pytest.approx(0.5)

    def test_reference_keys(self):
        """Test the reference's own keys are the default"""
        keyed = self.reference.with_keys(self.keys)
        errors = align_errors(keyed, self.estimate)

        assert errors[0].key == Key(0, Mode.MAJOR)
        assert align_errors(self.reference, self.estimate)[0].key is None


class TestACEAnalyzer:
    """Directory analysis"""

    def write_dirs(self, tmp_path):
        dirs = {}
        for name in ("ref", "est", "keys"):
            dirs[name] = tmp_path / name
            dirs[name].mkdir()
        (dirs["ref"] / "song.lab").write_text("0 2 C:maj\n2 4 G:maj\n")
        (dirs["est"] / "song.lab").write_text("0 2 A:min\n2 4 G:maj\n")
        (dirs["keys"] / "song.lab").write_text("0 4 C:major\n")
        return dirs

    def test_collect_and_analyze(self, tmp_path):
        """Test errors, keys and fractions from files"""
        dirs = self.write_dirs(tmp_path)
        analyzer = ACEAnalyzer()
        errors = analyzer.collect_errors(
            dirs["ref"], dirs["est"], dirs["keys"]
        )
        report = analyzer.analyze(errors)

        assert report.rule_fractions["rel_m"] == 1.0
        assert report.degree_pair_fractions["I~vi"] == 1.0

    def test_frame_counts(self, tmp_path):
        """Test count weighting over frames"""
        dirs = self.write_dirs(tmp_path)
        analyzer = ACEAnalyzer(weighting="count", hop=0.5)
        report = analyzer.analyze(
            analyzer.collect_errors(dirs["ref"], dirs["est"], dirs["keys"])
        )

        assert report.total_errors == 4
        assert report.total_weight == 4

    def test_print_report(self, tmp_path, capsys):
        """Test the printed tables"""
        dirs = self.write_dirs(tmp_path)
        analyzer = ACEAnalyzer()
        analyzer.print_report(
            analyzer.analyze(analyzer.collect_errors(dirs["ref"], dirs["est"]))
        )
        out = capsys.readouterr().out

        assert "ERROR ANALYSIS" in out
        assert "rel_m" in out

    def test_bad_weighting(self):
        """Test the weighting is validated"""
        with pytest.raises(ValueError):
            ACEAnalyzer(weighting="frames")
        with pytest.raises(ConfigError):
            ACEAnalyzer(hop=0)
