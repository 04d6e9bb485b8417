"""Tests for the agreement classifier and augmented labeled set."""

import numpy as np
import pytest

from altmas.data.pool import LabeledPairs, TestPool, create_label_state
from altmas.errors import SurrogateError
from altmas.harness.synth import make_blobs_pool
from altmas.surrogate.agreement import (
    THRESHOLD_GRID,
    AgreementClassifier,
    AugmentedSet,
    assemble_training_set,
    augmented_size,
    build_augmented_set,
    oversample,
    train_agreement_classifier,
    tune_threshold,
)
from altmas.surrogate.mlp import MlpConfig


class FixedAgreement:
    """Agreement classifier double returning preset probabilities per pool row."""

    def __init__(self, probabilities):
        self.probabilities = np.asarray(probabilities, dtype=float)

    def agree_probability(self, features):
        return self.probabilities[features[:, 0].astype(int)]


def indexed_pool(n, num_classes=3, seed=0):
    """Pool whose single feature is the row index."""
    rng = np.random.default_rng(seed)
    truth = rng.integers(0, num_classes, n)
    preds = rng.integers(0, num_classes, n)
    return TestPool(np.arange(n, dtype=float), preds, truth, num_classes)


@pytest.fixture
def agreement_config():
    return MlpConfig(layer_sizes=(2, 16, 16, 2), learning_rate=0.05, epochs=20, batch_size=16)


class TestAugmentedSize:
    """Test the squared-precision size rule."""

    def test_half_precision_keeps_a_quarter(self):
        assert augmented_size(0.5, 100) == 25

    def test_extremes(self):
        assert augmented_size(1.0, 40) == 40
        assert augmented_size(0.0, 40) == 0

    def test_floor(self):
        assert augmented_size(0.9, 10) == 8

    def test_exponent(self):
        assert augmented_size(0.5, 100, exponent=1.0) == 50


class TestBuildAugmentedSet:
    """Test selecting confident agreeing points."""

    def test_half_precision_on_100_candidates(self):
        pool = indexed_pool(100)
        augmented = build_augmented_set(
            FixedAgreement(np.ones(100)), 0.5, 0.5, pool, np.arange(100)
        )
        assert len(augmented) == 25
        assert augmented.num_candidates == 100

    def test_most_confident_first_then_lowest_index(self):
        pool = indexed_pool(6)
        probabilities = [0.6, 0.9, 0.9, 0.4, 0.95, 0.7]
        augmented = build_augmented_set(
            FixedAgreement(probabilities), 0.55, 0.8, pool, np.arange(6)
        )
        # 5 candidates at or above 0.55, floor(0.64 * 5) = 3 kept
        np.testing.assert_array_equal(augmented.indices, [4, 1, 2])

    def test_labels_are_model_outputs(self):
        pool = indexed_pool(10)
        augmented = build_augmented_set(FixedAgreement(np.ones(10)), 0.5, 1.0, pool, np.arange(10))
        np.testing.assert_array_equal(augmented.labels, pool.mut_predictions[augmented.indices])

    def test_only_unlabeled_points(self):
        pool = indexed_pool(10)
        unlabeled = np.array([1, 3, 5])
        augmented = build_augmented_set(FixedAgreement(np.ones(10)), 0.5, 1.0, pool, unlabeled)
        assert set(augmented.indices.tolist()) <= {1, 3, 5}

    def test_no_unlabeled(self):
        pool = indexed_pool(4)
        augmented = build_augmented_set(FixedAgreement(np.ones(4)), 0.5, 1.0, pool, np.array([], dtype=int))
        assert len(augmented) == 0


class TestAssembleTrainingSet:
    def test_concatenates(self):
        pairs = LabeledPairs([0, 1], [2, 0])
        augmented = AugmentedSet(np.array([5]), np.array([1]), 1.0)
        training = assemble_training_set(pairs, augmented)
        np.testing.assert_array_equal(training.indices, [0, 1, 5])
        np.testing.assert_array_equal(training.labels, [2, 0, 1])

    def test_empty_augmentation(self):
        pairs = LabeledPairs([0, 1], [2, 0])
        assert assemble_training_set(pairs, AugmentedSet.empty()) is pairs

    def test_overlap_rejected(self):
        pairs = LabeledPairs([0, 1], [2, 0])
        with pytest.raises(SurrogateError, match="overlaps"):
            assemble_training_set(pairs, AugmentedSet(np.array([1]), np.array([0]), 1.0))


class TestThresholdTuning:
    """Test the precision-maximizing threshold sweep."""

    def test_grid(self):
        assert len(THRESHOLD_GRID) == 101
        assert THRESHOLD_GRID[0] == 0.5 and THRESHOLD_GRID[-1] == 1.0

    def test_picks_precise_threshold(self):
        probabilities = np.array([0.55, 0.6, 0.8, 0.9025])
        targets = np.array([0, 0, 1, 1])
        threshold, precision = tune_threshold(probabilities, targets)
        assert precision == 1.0
        # ties go to the highest threshold still selecting a positive
        assert threshold == pytest.approx(0.9)

    def test_no_positive_predictions(self):
        threshold, precision = tune_threshold(np.array([0.1, 0.2]), np.array([1, 1]))
        assert precision == 0.0
        assert threshold == 1.0


class TestOversample:
    def test_balances_classes(self):
        features = np.arange(10, dtype=float).reshape(-1, 1)
        targets = np.array([1] * 8 + [0] * 2)
        x, y = oversample(features, targets, seed=0)
        assert np.sum(y == 0) == np.sum(y == 1) == 8
        assert set(x[y == 0, 0].tolist()) <= {8.0, 9.0}

    def test_balanced_unchanged(self):
        features = np.zeros((4, 1))
        targets = np.array([0, 1, 0, 1])
        x, y = oversample(features, targets)
        assert len(y) == 4


class TestTrainAgreementClassifier:
    """Test training on the labeled pairs."""

    def test_too_few_pairs(self, agreement_config):
        pool = make_blobs_pool(n=50, seed=0)
        with pytest.raises(SurrogateError, match="at least 10"):
            train_agreement_classifier(LabeledPairs(np.arange(5), pool.truth[:5]), pool, agreement_config)

    def test_always_agreeing_model_gives_constant_classifier(self, agreement_config):
        pool = make_blobs_pool(n=100, mut_accuracy=1.0, seed=0)
        pairs = LabeledPairs(np.arange(30), pool.truth[:30])
        fit = train_agreement_classifier(pairs, pool, agreement_config, seed=0)
        assert fit.classifier.is_trivial
        assert fit.validation_precision == 1.0
        assert fit.threshold == 0.5
        augmented = build_augmented_set(
            fit.classifier, fit.threshold, fit.validation_precision, pool, np.arange(30, 100)
        )
        assert len(augmented) == 70

    def test_trained_classifier(self, agreement_config):
        pool = make_blobs_pool(n=600, mut_accuracy=0.7, error_mode="region", seed=1)
        state = create_label_state(pool, 0, n0=150, seed=1)
        fit = train_agreement_classifier(state.pairs(), pool, agreement_config, seed=3)
        assert not fit.classifier.is_trivial
        assert 0.5 <= fit.threshold <= 1.0
        assert 0.0 <= fit.validation_precision <= 1.0
        probabilities = fit.classifier.agree_probability(pool.features)
        assert probabilities.shape == (600,)
        assert ((probabilities >= 0) & (probabilities <= 1)).all()

    def test_deterministic(self, agreement_config):
        pool = make_blobs_pool(n=300, mut_accuracy=0.7, seed=2)
        pairs = create_label_state(pool, 0, n0=80, seed=2).pairs()
        first = train_agreement_classifier(pairs, pool, agreement_config, seed=5)
        second = train_agreement_classifier(pairs, pool, agreement_config, seed=5)
        assert first.threshold == second.threshold
        assert first.classifier.mlp.weight_hash() == second.classifier.mlp.weight_hash()

    def test_classifier_needs_one_source(self):
        with pytest.raises(SurrogateError):
            AgreementClassifier()


@pytest.mark.slow
class TestAugmentationQuality:
    """Augmented labels get more reliable as the model-under-test improves."""

    def test_correctness_non_decreasing_in_model_accuracy(self, agreement_config):
        correctness = []
        for accuracy in (0.3, 0.6, 0.9):
            correct = total = 0
            for seed in range(5):
                pool = make_blobs_pool(n=1500, mut_accuracy=accuracy, error_mode="random", seed=seed)
                state = create_label_state(pool, 0, n0=200, seed=seed)
                fit = train_agreement_classifier(state.pairs(), pool, agreement_config, seed=seed)
                augmented = build_augmented_set(
                    fit.classifier,
                    fit.threshold,
                    fit.validation_precision,
                    pool,
                    state.unlabeled_indices,
                )
                correct += int(np.sum(pool.truth[augmented.indices] == augmented.labels))
                total += len(augmented)
            assert total > 0
            correctness.append(correct / total)
        assert correctness[0] <= correctness[1] <= correctness[2]
