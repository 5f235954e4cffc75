"""Tests for alphabets and reduction"""

import pytest

from chordlab.alphabets import (
    QUALITY_HIERARCHY,
    AlphabetId,
    class_of,
    enumerate_classes,
    get_alphabet,
    load_quality_hierarchy,
    reduce,
    reduce_class,
)
from chordlab.chord_syntax import ChordLabel, Quality, parse_chord, transpose
from chordlab.exceptions import IndexOutOfAlphabetError


class TestAlphabets:
    """Class enumeration"""

    def test_cardinalities(self):
        """Test 25, 73 and 169 classes"""
        assert len(enumerate_classes(AlphabetId.A0)) == 25
        assert len(enumerate_classes(AlphabetId.A1)) == 73
        assert len(enumerate_classes(AlphabetId.A2)) == 169

    def test_class_order(self):
        """Test N first, then roots, then qualities in alphabet order"""
        classes = enumerate_classes("A0")

        assert classes[0].is_no_chord
        assert str(classes[1]) == "C:maj"
        assert str(classes[2]) == "C:min"
        assert str(classes[3]) == "C#:maj"
        assert str(classes[24]) == "B:min"
        assert [c.index for c in classes] == list(range(25))

    def test_a1_qualities(self):
        """Test the six A1 qualities in order"""
        labels = get_alphabet("A1").labels()

        assert labels[1:7] == [
            "C:maj",
            "C:min",
            "C:dim",
            "C:maj7",
            "C:min7",
            "C:7",
        ]

    def test_a2_contains_every_quality(self):
        """Test every quality appears twelve times in A2"""
        classes = enumerate_classes("A2")[1:]
        for quality in Quality:
            assert sum(c.label.quality == quality for c in classes) == 12

    def test_class_at_out_of_range(self):
        """Test indices outside the alphabet"""
        alphabet = get_alphabet("A0")
        with pytest.raises(IndexOutOfAlphabetError):
            alphabet.class_at(25)
        with pytest.raises(IndexOutOfAlphabetError):
            alphabet.class_at(-1)

    def test_index_of(self):
        """Test label lookup and rejection of non-resident labels"""
        alphabet = get_alphabet("A0")

        assert alphabet.index_of(ChordLabel(9, Quality.MIN)) == 20
        with pytest.raises(IndexOutOfAlphabetError):
            alphabet.index_of(ChordLabel(0, Quality.MAJ7))


class TestReduction:
    """Reduction down the quality hierarchy"""

    def test_parse_strip_reduce(self):
        """Test F:maj7(11)/3 reduces to F:maj7 in A1"""
        assert str(class_of("F:maj7(11)/3", "A1")) == "F:maj7"
        assert str(class_of("F:maj7(11)/3", "A0")) == "F:maj"

    def test_reductions_to_a0(self):
        """Test the A0 parents of the richer qualities"""
        cases = {
            "C:7": "C:maj",
            "C:min7": "C:min",
            "C:minmaj7": "C:min",
            "C:maj6": "C:maj",
            "C:dim": "N",
            "C:hdim7": "N",
            "C:aug": "N",
            "C:sus4": "N",
            "N": "N",
        }
        for label, expected in cases.items():
            assert str(class_of(label, "A0")) == expected

    def test_reductions_to_a1(self):
        """Test the A1 parents of A2 qualities"""
        cases = {
            "C:hdim7": "C:dim",
            "C:dim7": "C:dim",
            "C:maj6": "C:maj",
            "C:min6": "C:min",
            "C:minmaj7": "C:min",
            "C:aug": "N",
            "C:sus2": "N",
        }
        for label, expected in cases.items():
            assert str(class_of(label, "A1")) == expected

    def test_resident_chords_are_fixed(self):
        """Test reducing a class into its own alphabet is the identity"""
        for alphabet in AlphabetId:
            for chord in enumerate_classes(alphabet):
                assert reduce(chord.label, alphabet) == chord

    def test_reduction_chain(self):
        """Test A2 -> A1 -> A0 equals A2 -> A0"""
        for chord in enumerate_classes("A2"):
            via_a1 = reduce_class(reduce_class(chord, "A1"), "A0")
            assert via_a1 == reduce_class(chord, "A0")

    def test_transposition_commutes_with_reduction(self):
        """Test reducing a transposed chord equals transposing its class"""
        labels = [c.label for c in enumerate_classes("A2")] + [
            parse_chord(text)
            for text in ("F:maj7(11)/3", "Bb:min7(*b3,9)", "E:7(9,13)")
        ]
        for label in labels:
            for alphabet in AlphabetId:
                reduced = class_of(label, alphabet)
                for shift in range(12):
                    moved = class_of(transpose(label, shift), alphabet)
                    assert moved == class_of(
                        transpose(reduced.label, shift), alphabet
                    )

    def test_bass_is_ignored(self):
        """Test inversions reduce like root position"""
        assert class_of("G:7/b7", "A1") == class_of("G:7", "A1")

    def test_hierarchy_table(self):
        """Test the shipped table covers all 14 qualities"""
        hierarchy = load_quality_hierarchy()
        frame = hierarchy.to_frame()

        assert len(frame) == 14
        assert hierarchy == QUALITY_HIERARCHY
        assert hierarchy.parent(Quality.DOM7, AlphabetId.A1) == Quality.DOM7
        assert hierarchy.parent(Quality.AUG, AlphabetId.A0) is None
        assert hierarchy.parent(Quality.AUG, AlphabetId.A2) == Quality.AUG

    def test_parse_chord_object(self):
        """Test class_of accepts parsed labels"""
        chord = parse_chord("D:min7(9)")
        assert str(class_of(chord, "A1")) == "D:min7"
