"""Tests for similarity matrices and the weighted loss"""

import numpy as np
import pytest
from scipy.special import softmax

from chordlab.alphabets import AlphabetId, class_of
from chordlab.distances import DistanceKind, distance_matrix
from chordlab.exceptions import (
    AsymmetricInputError,
    IndexOutOfAlphabetError,
    LengthMismatchError,
    NonPositiveKError,
)
from chordlab.similarity import (
    PredictionDistribution,
    batch_loss,
    batch_loss_gradient,
    build_similarity,
    loss_gradient,
    similarity_for,
    similarity_frame,
    soft_target,
    soft_targets,
    weighted_loss,
)


def relative_error(a, b):
    return np.linalg.norm(a - b) / (np.linalg.norm(a) + np.linalg.norm(b))


class TestBuildSimilarity:
    """Distance to similarity conversion"""

    def test_d0_off_diagonal_is_half(self):
        """Test D0 with K=1 gives 1 on the diagonal and 0.5 elsewhere"""
        matrix = similarity_for("D0", "A0", K=1.0)
        entries = matrix.entries

        assert np.allclose(np.diag(entries), 1.0, atol=1e-12)
        off = entries[~np.eye(25, dtype=bool)]
        assert np.allclose(off, 0.5, atol=1e-12)

    @pytest.mark.parametrize("kind", list(DistanceKind))
    @pytest.mark.parametrize("alphabet", list(AlphabetId))
    def test_normalized(self, kind, alphabet):
        """Test symmetry, unit diagonal and unit maximum"""
        entries = similarity_for(kind, alphabet).entries

        assert np.allclose(entries, entries.T, atol=1e-12)
        assert np.allclose(np.diag(entries), 1.0, atol=1e-12)
        assert entries.max() == pytest.approx(1.0, abs=1e-12)
        assert np.all(entries > 0)

    def test_larger_k_flattens(self):
        """Test K controls how quickly similarity decays"""
        dist = distance_matrix("D1", "A0")
        sharp = build_similarity(dist, K=0.5).entries
        flat = build_similarity(dist, K=10.0).entries

        assert flat.min() > sharp.min()

    def test_non_positive_k(self):
        """Test K must be strictly positive"""
        dist = distance_matrix("D0", "A0")
        with pytest.raises(NonPositiveKError):
            build_similarity(dist, K=0)
        with pytest.raises(NonPositiveKError):
            build_similarity(dist, K=-1)

    def test_bad_distance_matrices(self):
        """Test non-square, asymmetric and negative input"""
        with pytest.raises(AsymmetricInputError):
            build_similarity(np.zeros((2, 3)))
        with pytest.raises(AsymmetricInputError):
            build_similarity(np.array([[0.0, 1.0], [2.0, 0.0]]))
        with pytest.raises(AsymmetricInputError):
            build_similarity(np.array([[0.0, -1.0], [-1.0, 0.0]]))

    def test_entries_are_read_only(self):
        """Test the matrix cannot be modified in place"""
        matrix = similarity_for("D2", "A0")
        with pytest.raises(ValueError):
            matrix.entries[0, 0] = 5

    def test_frame(self):
        """Test the labelled DataFrame"""
        frame = similarity_frame(similarity_for("D0", "A0"))
        assert frame.loc["C:maj", "C:min"] == pytest.approx(0.5)


class TestSoftTargets:
    """Soft target rows"""

    def setup_method(self):
        """Set up test fixtures"""
        self.matrix = similarity_for("D1", "A0")

    def test_row_of_the_matrix(self):
        """Test the target equals the one-hot vector times the matrix"""
        chord = class_of("C:maj", "A0")
        target = soft_target(chord, self.matrix)
        one_hot = np.eye(25)[chord.index]

        assert np.allclose(target.weights, one_hot @ self.matrix.entries)
        assert target.weights[chord.index] == pytest.approx(1.0)
        assert target.source_index == chord.index

    @pytest.mark.parametrize("kind", ["D0", "D1"])
    @pytest.mark.parametrize("alphabet", list(AlphabetId))
    def test_peak_at_source_class(self, kind, alphabet):
        """Test every target row peaks only at its own class"""
        matrix = similarity_for(kind, alphabet)
        for index in range(len(matrix)):
            weights = soft_target(index, matrix).weights

            assert np.argmax(weights) == index
            assert np.sum(weights == weights.max()) == 1

    def test_renormalized(self):
        """Test optional normalization to a distribution"""
        target = soft_target(3, self.matrix, renormalize=True)
        assert target.weights.sum() == pytest.approx(1.0)

    def test_out_of_alphabet(self):
        """Test indices and classes outside the matrix"""
        with pytest.raises(IndexOutOfAlphabetError):
            soft_target(25, self.matrix)
        with pytest.raises(IndexOutOfAlphabetError):
            soft_target(class_of("C:maj", "A1"), self.matrix)

    def test_batch(self):
        """Test batch targets with and without a matrix"""
        targets = soft_targets([0, 1], self.matrix)
        assert np.allclose(targets[1], self.matrix.entries[1])

        one_hot = soft_targets([0, 3], None, size=25)
        assert one_hot.shape == (2, 25)
        assert one_hot[1, 3] == 1 and one_hot.sum() == 2

        with pytest.raises(IndexOutOfAlphabetError):
            soft_targets([30], self.matrix)


class TestWeightedLoss:
    """Loss value and gradients"""

    def setup_method(self):
        """Set up test fixtures"""
        self.rng = np.random.default_rng(7)

    def test_one_hot_against_uniform(self):
        """Test the cross-entropy of a uniform prediction"""
        target = np.eye(25)[4]
        pred = np.full(25, 1 / 25)

        assert weighted_loss(target, pred) == pytest.approx(np.log(25))

    def test_zero_probability_is_clamped(self):
        """Test log(0) is replaced by log(epsilon)"""
        loss = weighted_loss([1.0, 0.0], [0.0, 1.0])
        assert np.isfinite(loss)
        assert loss == pytest.approx(-np.log(1e-12))

    def test_length_mismatch(self):
        """Test vectors must be aligned"""
        with pytest.raises(LengthMismatchError):
            weighted_loss(np.ones(3), np.ones(4) / 4)
        with pytest.raises(LengthMismatchError):
            loss_gradient(np.ones(3), np.zeros(4))

    def test_prediction_distribution_validation(self):
        """Test probability vectors must sum to one"""
        with pytest.raises(ValueError):
            PredictionDistribution(np.array([0.5, 0.6]))
        PredictionDistribution(np.array([0.25, 0.75]))

    def test_gradient_matches_finite_differences(self):
        """Test the analytic logit gradient on 100 random instances"""
        step = 1e-5
        for _ in range(100):
            size = int(self.rng.integers(2, 30))
            target = self.rng.random(size)
            logits = self.rng.normal(size=size)

            def loss(z):
                return weighted_loss(target, softmax(z))

            numeric = np.array(
                [
                    (loss(logits + step * e) - loss(logits - step * e))
                    / (2 * step)
                    for e in np.eye(size)
                ]
            )
            analytic = loss_gradient(target, logits)
            assert relative_error(analytic, numeric) < 1e-5

    def test_one_hot_optimum_and_zero_target(self):
        """Test the gradient vanishes at a one-hot optimum and for no mass"""
        for size in (2, 25, 169):
            index = int(self.rng.integers(size))
            logits = np.zeros(size)
            logits[index] = 50.0

            gradient = loss_gradient(np.eye(size)[index], logits)
            assert np.linalg.norm(gradient) < 1e-6

            zero = loss_gradient(np.zeros(size), self.rng.normal(size=size))
            assert np.array_equal(zero, np.zeros(size))

    def test_minimizer_is_normalized_target(self):
        """Test the loss is smallest at target / sum(target)"""
        for _ in range(50):
            size = int(self.rng.integers(2, 30))
            target = self.rng.random(size) + 0.01
            best = target / target.sum()

            assert np.linalg.norm(loss_gradient(target, np.log(best))) < 1e-10
            floor = weighted_loss(target, best)
            for other in self.rng.dirichlet(np.ones(size), size=20):
                assert weighted_loss(target, other) >= floor - 1e-12

    def test_batch_gradient(self):
        """Test the batch gradient is the mean of row gradients"""
        targets = self.rng.random((5, 7))
        logits = self.rng.normal(size=(5, 7))

        rows = np.array(
            [loss_gradient(t, z) for t, z in zip(targets, logits)]
        )
        assert np.allclose(batch_loss_gradient(targets, logits), rows / 5)
        assert batch_loss(targets, softmax(logits, axis=1)) == pytest.approx(
            np.mean(
                [
                    weighted_loss(t, softmax(z))
                    for t, z in zip(targets, logits)
                ]
            )
        )
