"""Tests for confusion counts, metrics, swaps and value grouping."""

import numpy as np
import pytest
from sklearn.metrics import accuracy_score, confusion_matrix, precision_score, recall_score

from altmas.errors import ConfigError, MetricError
from altmas.metrics import (
    Accuracy,
    ConfusionCounts,
    MacroPrecision,
    MacroRecall,
    MetricKind,
    MetricSpec,
    Precision,
    Recall,
    candidate_metric_matrix,
    candidate_metric_values,
    composite_labels,
    confusion_from,
    confusion_stack,
    group_ids,
    group_values,
    metric_value,
    metric_values_stack,
    parse_metric_set,
    swap_label,
)


class TestConfusionCounts:
    """Test building confusion counts."""

    def test_small_example(self):
        cc = confusion_from([0, 0, 1], [0, 1, 1], 2)
        np.testing.assert_array_equal(cc.counts, [[1, 1], [0, 1]])

    def test_matches_sklearn(self):
        """counts[a][y] is sklearn's matrix transposed (sklearn rows are true labels)."""
        rng = np.random.default_rng(0)
        preds, labels = rng.integers(0, 4, 50), rng.integers(0, 4, 50)
        cc = confusion_from(preds, labels, 4)
        np.testing.assert_array_equal(cc.counts, confusion_matrix(labels, preds, labels=range(4)).T)

    def test_total_is_n(self):
        cc = confusion_from([0, 1, 2, 2], [2, 1, 0, 2], 3)
        assert cc.total == 4

    def test_length_mismatch(self):
        with pytest.raises(MetricError, match="length mismatch"):
            confusion_from([0, 1], [0], 2)

    def test_out_of_range_label(self):
        with pytest.raises(MetricError):
            confusion_from([0, 1], [0, 2], 2)

    def test_stack_matches_rows(self):
        rng = np.random.default_rng(1)
        preds = rng.integers(0, 3, 20)
        label_matrix = rng.integers(0, 3, (4, 20))
        stack = confusion_stack(preds, label_matrix, 3)
        for j in range(4):
            np.testing.assert_array_equal(stack[j], confusion_from(preds, label_matrix[j], 3).counts)

    def test_composite_pins_labeled(self):
        samples = np.array([[0, 0, 0], [1, 1, 1]])
        composite = composite_labels(samples, np.array([1]), np.array([2]))
        np.testing.assert_array_equal(composite, [[0, 2, 0], [1, 2, 1]])


class TestMetricValue:
    """Test metric formulas against sklearn."""

    @pytest.fixture
    def data(self):
        rng = np.random.default_rng(3)
        return rng.integers(0, 3, 40), rng.integers(0, 3, 40)

    def test_accuracy(self, data):
        preds, labels = data
        cc = confusion_from(preds, labels, 3)
        assert metric_value(Accuracy, cc) == pytest.approx(accuracy_score(labels, preds), abs=1e-12)

    @pytest.mark.parametrize("c", [0, 1, 2])
    def test_precision_recall(self, data, c):
        preds, labels = data
        cc = confusion_from(preds, labels, 3)
        expected_p = precision_score(labels, preds, labels=[c], average=None, zero_division=0)[0]
        expected_r = recall_score(labels, preds, labels=[c], average=None, zero_division=0)[0]
        assert metric_value(Precision(c), cc) == pytest.approx(expected_p, abs=1e-12)
        assert metric_value(Recall(c), cc) == pytest.approx(expected_r, abs=1e-12)

    def test_macro(self, data):
        preds, labels = data
        cc = confusion_from(preds, labels, 3)
        assert metric_value(MacroPrecision, cc) == pytest.approx(
            precision_score(labels, preds, average="macro", zero_division=0), abs=1e-12
        )
        assert metric_value(MacroRecall, cc) == pytest.approx(
            recall_score(labels, preds, average="macro", zero_division=0), abs=1e-12
        )

    def test_zero_division(self):
        """Precision of a never-predicted class falls back to the convention value."""
        cc = confusion_from([0, 0], [0, 1], 2)
        assert metric_value(Precision(1), cc) == 0.0
        assert metric_value(Precision(1), cc, zero_division=1.0) == 1.0

    def test_perfect_predictions(self):
        cc = confusion_from([0, 1, 2, 1], [0, 1, 2, 1], 3)
        assert metric_value(Accuracy, cc) == 1.0
        assert metric_value(Precision(1), cc) == 1.0

    def test_empty_counts(self):
        with pytest.raises(MetricError, match="empty"):
            metric_value(Accuracy, ConfusionCounts(np.zeros((2, 2))))

    def test_class_out_of_range(self):
        with pytest.raises(MetricError):
            metric_value(Precision(5), confusion_from([0], [0], 2))

    def test_stack(self):
        preds = np.array([0, 1, 1, 0])
        stack = confusion_stack(preds, np.array([[0, 1, 1, 0], [1, 1, 1, 1]]), 2)
        np.testing.assert_allclose(metric_values_stack(Accuracy, stack), [1.0, 0.5])


class TestMetricSpec:
    """Test metric names and parsing."""

    def test_names(self):
        assert Accuracy.name == "accuracy"
        assert Precision(2).name == "precision:2"
        assert str(Recall(0)) == "recall:0"

    def test_parse(self):
        assert MetricSpec.parse("precision:2") == Precision(2)
        assert MetricSpec.parse("macro_recall") == MacroRecall

    @pytest.mark.parametrize("text", ["precision", "accuracy:1", "f1", "recall:x"])
    def test_parse_invalid(self, text):
        with pytest.raises(ConfigError):
            MetricSpec.parse(text)

    def test_full21(self):
        specs = parse_metric_set("full21")
        assert len(specs) == 21
        assert specs[0] == Accuracy
        assert specs[1:3] == [Precision(0), Recall(0)]

    def test_full_set_for_other_class_count(self):
        assert len(parse_metric_set("full21", num_classes=3)) == 7

    def test_parse_list_and_range_check(self):
        specs = parse_metric_set(["accuracy", "recall:1"], num_classes=2)
        assert [s.kind for s in specs] == [MetricKind.ACCURACY, MetricKind.RECALL]
        with pytest.raises(ConfigError):
            parse_metric_set("precision:4", num_classes=3)

    def test_empty_set(self):
        with pytest.raises(ConfigError):
            parse_metric_set(" , ")


class TestSwapLabel:
    """Test single-point label swaps."""

    def test_swap_moves_one_count(self):
        cc = confusion_from([0, 1, 1], [0, 1, 0], 2)
        swapped = swap_label(cc, pred=1, old_label=0, new_label=1)
        np.testing.assert_array_equal(swapped.counts, [[1, 0], [0, 2]])
        assert swapped.total == cc.total

    def test_identity_when_labels_equal(self):
        cc = confusion_from([0, 1], [0, 1], 2)
        assert swap_label(cc, 1, 1, 1) == cc

    def test_inverse(self):
        cc = confusion_from([0, 1, 2], [2, 1, 0], 3)
        assert swap_label(swap_label(cc, 0, 2, 1), 0, 1, 2) == cc

    def test_below_zero(self):
        cc = confusion_from([0, 1], [0, 1], 2)
        with pytest.raises(MetricError, match="below zero"):
            swap_label(cc, 0, 1, 0)

    def test_original_untouched(self):
        cc = confusion_from([0, 1], [0, 1], 2)
        swap_label(cc, 0, 0, 1)
        np.testing.assert_array_equal(cc.counts, [[1, 0], [0, 1]])


def _from_scratch_candidates(spec, preds, label_matrix, x, num_classes):
    q = np.zeros(num_classes)
    for h in range(num_classes):
        values = []
        for labels in label_matrix:
            changed = labels.copy()
            changed[x] = h
            values.append(metric_value(spec, confusion_from(preds, changed, num_classes)))
        q[h] = np.mean(values)
    return q


class TestCandidateValues:
    """Test the per-candidate metric values used by the acquisition function."""

    @pytest.fixture
    def instance(self):
        rng = np.random.default_rng(11)
        preds = rng.integers(0, 3, 10)
        label_matrix = rng.integers(0, 3, (4, 10))
        return preds, label_matrix

    @pytest.mark.parametrize("spec", [Accuracy, Precision(1), Recall(2), MacroPrecision, MacroRecall])
    def test_reference_matches_recomputation(self, instance, spec):
        preds, label_matrix = instance
        x = 4
        per_sample = [confusion_from(preds, labels, 3) for labels in label_matrix]
        q = candidate_metric_values(spec, per_sample, int(preds[x]), label_matrix[:, x])
        np.testing.assert_allclose(q, _from_scratch_candidates(spec, preds, label_matrix, x, 3), atol=1e-12)

    def test_matrix_matches_reference(self, instance):
        preds, label_matrix = instance
        specs = [Accuracy, Precision(0), Recall(1), MacroPrecision, MacroRecall]
        stack = confusion_stack(preds, label_matrix, 3)
        points = np.array([0, 3, 7, 9])
        matrix = candidate_metric_matrix(specs, stack, preds[points], label_matrix[:, points], chunk_size=3)
        assert matrix.shape == (5, 4, 3)
        per_sample = [ConfusionCounts(c) for c in stack]
        for k, spec in enumerate(specs):
            for u, x in enumerate(points):
                q = candidate_metric_values(spec, per_sample, int(preds[x]), label_matrix[:, x])
                np.testing.assert_allclose(matrix[k, u], q, atol=1e-12)

    def test_accuracy_only_depends_on_agreement(self):
        """Accuracy separates the model's own label from every other label."""
        preds = np.array([0, 1, 2, 0])
        stack = confusion_stack(preds, np.array([[0, 1, 2, 1]]), 3)
        q = candidate_metric_matrix([Accuracy], stack, preds[[3]], np.array([[1]]))[0, 0]
        assert q[0] > q[1]
        assert q[1] == q[2]


class TestGrouping:
    """Test grouping of candidate labels by metric value."""

    def test_groups(self):
        groups = group_values([0.5, 0.7, 0.5 + 1e-12], epsilon=1e-9)
        assert [g.members for g in groups] == [(0, 2), (1,)]
        assert groups[1].value == pytest.approx(0.7)

    def test_zero_epsilon_exact_equality(self):
        groups = group_values([0.2, 0.2, 0.3], epsilon=0.0)
        assert [g.members for g in groups] == [(0, 1), (2,)]

    def test_single_group(self):
        assert len(group_values([0.4, 0.4, 0.4, 0.4])) == 1

    def test_partition(self):
        q = np.random.default_rng(0).random(6)
        groups = group_values(q, epsilon=0.1)
        members = sorted(h for g in groups for h in g.members)
        assert members == list(range(6))

    def test_chaining(self):
        """Values within epsilon of a neighbour share a group even if the ends differ more."""
        groups = group_values([0.0, 0.6, 1.2], epsilon=0.7)
        assert len(groups) == 1

    def test_negative_epsilon(self):
        with pytest.raises(ConfigError):
            group_values([0.1], epsilon=-1.0)

    def test_group_ids_match_group_values(self):
        rng = np.random.default_rng(4)
        q = np.round(rng.random((20, 4)), 1)
        ids = group_ids(q, epsilon=1e-9)
        for row, row_ids in zip(q, ids):
            for group in group_values(row, epsilon=1e-9):
                assert len({row_ids[h] for h in group.members}) == 1
            assert len(set(row_ids.tolist())) == len(group_values(row, epsilon=1e-9))
