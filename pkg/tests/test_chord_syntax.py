"""Tests for Harte chord parsing and printing"""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from chordlab.chord_syntax import (
    NO_CHORD,
    ChordLabel,
    Quality,
    format_chord,
    parse_chord,
    parse_root,
    strip_to_core,
    transpose,
)
from chordlab.exceptions import (
    ChordLabError,
    ChordSyntaxError,
    UnknownQualityError,
)

labels = st.builds(
    ChordLabel,
    root=st.integers(0, 11),
    quality=st.sampled_from(list(Quality)),
    extensions=st.lists(
        st.sampled_from(["9", "11", "b13", "*3", "#5"]), max_size=3
    ).map(tuple),
    bass=st.sampled_from([None, "3", "5", "b7"]),
)


class TestParseChord:
    """Parsing of single chord labels"""

    def test_full_label(self):
        """Test root, quality, extensions and bass are all read"""
        chord = parse_chord("F:maj7(11)/3")

        assert chord.root == 5
        assert chord.quality == Quality.MAJ7
        assert chord.extensions == ("11",)
        assert chord.bass == "3"

    def test_no_chord(self):
        """Test N parses to the no-chord label"""
        chord = parse_chord("N")

        assert chord.is_no_chord
        assert chord == NO_CHORD
        assert format_chord(chord) == "N"

    def test_bare_root_is_major(self):
        """Test a root without quality means a major triad"""
        assert parse_chord("G") == ChordLabel(7, Quality.MAJ)

    def test_root_spellings(self):
        """Test flats, sharps and enharmonic spellings"""
        assert parse_chord("Db:min").root == 1
        assert parse_chord("C#:min").root == 1
        assert parse_root("Cb") == 11
        assert parse_root("E#") == 5
        assert parse_root("Bbb") == 9

    def test_canonical_output_uses_sharps(self):
        """Test printing spells roots with sharps"""
        assert format_chord(parse_chord("Bb:min")) == "A#:min"
        assert str(parse_chord("F:maj7(11)/3")) == "F:maj7(11)/3"

    def test_accepts_bytes(self):
        """Test UTF-8 byte input"""
        assert parse_chord(b"A:min7") == ChordLabel(9, Quality.MIN7)

    def test_bad_root_reports_position(self):
        """Test an unknown root fails at position 0"""
        with pytest.raises(ChordSyntaxError) as excinfo:
            parse_chord("X:wrong")

        assert excinfo.value.position == 0
        assert "position 0" in str(excinfo.value)

    def test_trailing_text_after_n(self):
        """Test N must stand alone"""
        with pytest.raises(ChordSyntaxError) as excinfo:
            parse_chord("N:maj")

        assert excinfo.value.position == 1

    def test_unterminated_extensions(self):
        """Test an open extension list is rejected"""
        with pytest.raises(ChordSyntaxError):
            parse_chord("C:maj7(9")
        with pytest.raises(ChordSyntaxError):
            parse_chord("C:maj7(")

    def test_missing_bass(self):
        """Test a slash must be followed by an interval"""
        with pytest.raises(ChordSyntaxError) as excinfo:
            parse_chord("C:maj/")

        assert excinfo.value.position == 6

    def test_empty_label(self):
        """Test the empty string is not a chord"""
        with pytest.raises(ChordSyntaxError):
            parse_chord("")

    def test_unknown_quality(self):
        """Test a well-formed label with an unknown quality"""
        with pytest.raises(UnknownQualityError) as excinfo:
            parse_chord("C:9")

        assert excinfo.value.quality == "9"
        assert isinstance(excinfo.value, ValueError)

    def test_aliases_on_request(self):
        """Test shorthand qualities map onto the 14 qualities"""
        chord = parse_chord("C:9", resolve_aliases=True)
        assert chord.quality == Quality.DOM7
        assert chord.extensions == ("9",)

        chord = parse_chord("A:min9(11)", resolve_aliases=True)
        assert chord.quality == Quality.MIN7
        assert chord.extensions == ("min9", "11")

    @given(labels)
    def test_format_then_parse(self, label):
        """Test printed labels parse back to the same chord"""
        assert parse_chord(format_chord(label)) == label

    @given(st.text(max_size=20))
    def test_arbitrary_text(self, text):
        """Test arbitrary input parses or raises a chordlab error"""
        try:
            chord = parse_chord(text)
        except ChordLabError:
            return
        assert chord.is_no_chord or 0 <= chord.root <= 11


class TestChordHelpers:
    """Stripping and transposition"""

    def test_strip_to_core(self):
        """Test extensions and bass are dropped"""
        chord = strip_to_core(parse_chord("F:maj7(11)/3"))

        assert chord == ChordLabel(5, Quality.MAJ7)
        assert strip_to_core(NO_CHORD) == NO_CHORD

    def test_transpose(self):
        """Test roots wrap around the octave"""
        assert transpose(parse_chord("C:maj"), 2) == parse_chord("D:maj")
        assert transpose(parse_chord("C:min7"), -1) == parse_chord("B:min7")
        assert transpose(NO_CHORD, 5) == NO_CHORD

    @given(labels, st.integers(-24, 24))
    def test_transpose_inverse(self, label, k):
        """Test shifting up then down restores the chord"""
        assert transpose(transpose(label, k), -k) == label

    def test_label_invariants(self):
        """Test invalid labels cannot be built"""
        with pytest.raises(ValueError):
            ChordLabel(12, Quality.MAJ)
        with pytest.raises(ValueError):
            ChordLabel(None, Quality.MAJ)
        with pytest.raises(ValueError):
            ChordLabel(0, None)
