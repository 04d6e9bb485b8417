"""Confusion-count metrics and their single-label swap updates.

Every supported metric is a function of three per-class statistics of the
confusion counts: true positives (the diagonal), row sums (how often the
model-under-test predicted a class) and column sums (how often a class is the
label). Swapping the label of one point changes at most two entries of each,
which is what makes candidate evaluation O(1) per point and label.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, MetricError

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-9
FULL21_CLASSES = 10


class MetricKind(str, Enum):
    ACCURACY = "accuracy"
    PRECISION = "precision"
    RECALL = "recall"
    MACRO_PRECISION = "macro_precision"
    MACRO_RECALL = "macro_recall"


_PER_CLASS = {MetricKind.PRECISION, MetricKind.RECALL}


@dataclass(frozen=True)
class MetricSpec:
    kind: MetricKind
    class_index: Optional[int] = None

    def __post_init__(self):
        if self.kind in _PER_CLASS and (self.class_index is None or self.class_index < 0):
            raise ConfigError(f"{self.kind.value} needs a non-negative class index")
        if self.kind not in _PER_CLASS and self.class_index is not None:
            raise ConfigError(f"{self.kind.value} takes no class index")

    @property
    def name(self) -> str:
        if self.kind in _PER_CLASS:
            return f"{self.kind.value}:{self.class_index}"
        return self.kind.value

    def validate(self, num_classes: int) -> None:
        if self.class_index is not None and self.class_index >= num_classes:
            raise MetricError(f"{self.name}: class index outside [0, {num_classes})")

    @classmethod
    def parse(cls, text: str) -> "MetricSpec":
        text = text.strip()
        head, _, tail = text.partition(":")
        try:
            kind = MetricKind(head)
        except ValueError:
            raise ConfigError(f"unknown metric {text!r}") from None
        if kind in _PER_CLASS:
            if not tail.strip().isdigit():
                raise ConfigError(f"metric {text!r} needs a class index, e.g. {head}:2")
            return cls(kind, int(tail))
        if tail:
            raise ConfigError(f"metric {text!r} takes no class index")
        return cls(kind)

    def __str__(self) -> str:
        return self.name


Accuracy = MetricSpec(MetricKind.ACCURACY)
MacroPrecision = MetricSpec(MetricKind.MACRO_PRECISION)
MacroRecall = MetricSpec(MetricKind.MACRO_RECALL)


def Precision(class_index: int) -> MetricSpec:
    return MetricSpec(MetricKind.PRECISION, class_index)


def Recall(class_index: int) -> MetricSpec:
    return MetricSpec(MetricKind.RECALL, class_index)


def full_metric_set(num_classes: int) -> List[MetricSpec]:
    """Accuracy plus precision and recall of every class."""
    specs = [Accuracy]
    for c in range(num_classes):
        specs.extend([Precision(c), Recall(c)])
    return specs


def parse_metric_set(
    names: Union[str, Iterable[str]], num_classes: Optional[int] = None
) -> List[MetricSpec]:
    """Parse ``accuracy,precision:2,...``; ``full21`` expands to the full set."""
    if isinstance(names, str):
        names = names.split(",")
    specs: List[MetricSpec] = []
    for name in names:
        name = name.strip()
        if not name:
            continue
        if name == "full21":
            c = FULL21_CLASSES if num_classes is None else num_classes
            if c != FULL21_CLASSES:
                logger.warning(f"full21 expanded for C={c}, giving {1 + 2 * c} metrics")
            specs.extend(full_metric_set(c))
        else:
            specs.append(MetricSpec.parse(name))
    if not specs:
        raise ConfigError("metric set is empty")
    if num_classes is not None:
        for spec in specs:
            if spec.class_index is not None and spec.class_index >= num_classes:
                raise ConfigError(f"{spec.name}: class index outside [0, {num_classes})")
    return specs


@dataclass(frozen=True)
class ConfusionCounts:
    """counts[a][y] = number of points predicted ``a`` whose label is ``y``."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise MetricError(f"confusion counts must be square, got shape {counts.shape}")
        if (counts < 0).any():
            raise MetricError("confusion counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfusionCounts) and np.array_equal(self.counts, other.counts)

    def __hash__(self) -> int:
        return hash(self.counts.tobytes())


def _check_labels(values: np.ndarray, num_classes: int, what: str) -> None:
    if values.size and (values.min() < 0 or values.max() >= num_classes):
        raise MetricError(f"{what} has values outside [0, {num_classes})")


def confusion_from(preds: np.ndarray, labels: np.ndarray, num_classes: int) -> ConfusionCounts:
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape:
        raise MetricError(f"length mismatch: {preds.shape[0]} predictions, {labels.shape[0]} labels")
    _check_labels(preds, num_classes, "predictions")
    _check_labels(labels, num_classes, "labels")
    flat = np.bincount(preds * num_classes + labels, minlength=num_classes * num_classes)
    return ConfusionCounts(flat.reshape(num_classes, num_classes))


def confusion_stack(preds: np.ndarray, label_matrix: np.ndarray, num_classes: int) -> np.ndarray:
    """Confusion counts for every row of an (M, N) label matrix, shape (M, C, C)."""
    preds = np.asarray(preds, dtype=np.int64)
    label_matrix = np.asarray(label_matrix, dtype=np.int64)
    m, n = label_matrix.shape
    if n != preds.shape[0]:
        raise MetricError(f"length mismatch: {preds.shape[0]} predictions, {n} labels per sample")
    _check_labels(label_matrix, num_classes, "labels")
    cc = num_classes * num_classes
    flat = (np.arange(m)[:, None] * cc + preds[None, :] * num_classes + label_matrix).ravel()
    return np.bincount(flat, minlength=m * cc).reshape(m, num_classes, num_classes)


def composite_labels(
    sample_labels: np.ndarray, labeled_indices: np.ndarray, labeled_labels: np.ndarray
) -> np.ndarray:
    """Per-sample label vectors with labeled points pinned to their revealed labels."""
    composite = np.array(sample_labels, dtype=np.int64, copy=True)
    if len(labeled_indices):
        composite[:, labeled_indices] = labeled_labels
    return composite


def _safe_ratio(num: np.ndarray, den: np.ndarray, zero_division: float) -> np.ndarray:
    num, den = np.broadcast_arrays(np.asarray(num, dtype=np.float64), np.asarray(den))
    out = np.full(num.shape, float(zero_division))
    np.divide(num, den, out=out, where=den > 0)
    return out


def metric_from_stats(
    spec: MetricSpec,
    tp: np.ndarray,
    row: np.ndarray,
    col: np.ndarray,
    total: float,
    zero_division: float = 0.0,
) -> np.ndarray:
    """Evaluate ``spec`` on per-class statistics with any leading batch shape."""
    kind = spec.kind
    if kind is MetricKind.ACCURACY:
        return np.sum(tp, axis=-1) / total
    if kind is MetricKind.PRECISION:
        c = spec.class_index
        return _safe_ratio(tp[..., c], row[..., c], zero_division)
    if kind is MetricKind.RECALL:
        c = spec.class_index
        return _safe_ratio(tp[..., c], col[..., c], zero_division)
    if kind is MetricKind.MACRO_PRECISION:
        return _safe_ratio(tp, row, zero_division).mean(axis=-1)
    if kind is MetricKind.MACRO_RECALL:
        return _safe_ratio(tp, col, zero_division).mean(axis=-1)
    raise MetricError(f"unsupported metric kind {kind}")


def _stats(counts: np.ndarray):
    tp = np.diagonal(counts, axis1=-2, axis2=-1)
    return tp, counts.sum(axis=-1), counts.sum(axis=-2)


def metric_value(spec: MetricSpec, cc: ConfusionCounts, zero_division: float = 0.0) -> float:
    """Metric value in [0, 1]; empty per-class denominators give ``zero_division``."""
    total = cc.total
    if total <= 0:
        raise MetricError("cannot evaluate a metric on empty counts")
    spec.validate(cc.num_classes)
    tp, row, col = _stats(cc.counts)
    return float(metric_from_stats(spec, tp, row, col, total, zero_division))


def metric_values_stack(
    spec: MetricSpec, counts_stack: np.ndarray, zero_division: float = 0.0
) -> np.ndarray:
    """One metric value per (M, C, C) slice."""
    total = counts_stack[0].sum() if len(counts_stack) else 0
    if total <= 0:
        raise MetricError("cannot evaluate a metric on empty counts")
    spec.validate(counts_stack.shape[-1])
    tp, row, col = _stats(counts_stack)
    return metric_from_stats(spec, tp, row, col, total, zero_division)


def swap_label(cc: ConfusionCounts, pred: int, old_label: int, new_label: int) -> ConfusionCounts:
    """Move one point predicted ``pred`` from label ``old_label`` to ``new_label``."""
    if old_label == new_label:
        return cc
    if cc.counts[pred, old_label] < 1:
        raise MetricError(
            f"cannot decrement counts[{pred}][{old_label}] below zero"
        )
    counts = cc.counts.copy()
    counts[pred, old_label] -= 1
    counts[pred, new_label] += 1
    return ConfusionCounts(counts)


def candidate_metric_values(
    spec: MetricSpec,
    per_sample_counts: Sequence[ConfusionCounts],
    pred_x: int,
    sampled_labels_x: Sequence[int],
    zero_division: float = 0.0,
) -> np.ndarray:
    """q[h]: metric averaged over samples with the point's label set to ``h``.

    Each ``per_sample_counts[j]`` must already count the point under
    ``sampled_labels_x[j]``.
    """
    if not per_sample_counts:
        raise MetricError("need at least one posterior sample")
    num_classes = per_sample_counts[0].num_classes
    q = np.zeros(num_classes)
    for h in range(num_classes):
        q[h] = np.mean(
            [
                metric_value(spec, swap_label(cc, pred_x, int(old), h), zero_division)
                for cc, old in zip(per_sample_counts, sampled_labels_x)
            ]
        )
    return q


def candidate_metric_matrix(
    specs: Sequence[MetricSpec],
    counts_stack: np.ndarray,
    preds: np.ndarray,
    sampled_labels: np.ndarray,
    zero_division: float = 0.0,
    chunk_size: int = 2048,
) -> np.ndarray:
    """Vectorized ``candidate_metric_values`` for many points and metrics.

    counts_stack: (M, C, C) per-sample composite counts.
    preds: (U,) model-under-test predictions of the scored points.
    sampled_labels: (M, U) the labels those points carry in each sample.
    Returns (K, U, C) for K metrics.
    """
    m, num_classes, _ = counts_stack.shape
    total = counts_stack[0].sum()
    if total <= 0:
        raise MetricError("cannot evaluate a metric on empty counts")
    for spec in specs:
        spec.validate(num_classes)
    preds = np.asarray(preds, dtype=np.int64)
    sampled_labels = np.asarray(sampled_labels, dtype=np.int64)
    u = preds.shape[0]
    tp, row, col = _stats(counts_stack)
    classes = np.arange(num_classes)
    out = np.empty((len(specs), u, num_classes))

    for start in range(0, u, chunk_size):
        stop = min(start + chunk_size, u)
        a = preds[start:stop][None, :, None]
        old = sampled_labels[:, start:stop, None]
        old_onehot = old == classes
        tp_removed = old_onehot & (a == old)
        base_tp = tp[:, None, :] - tp_removed
        base_col = col[:, None, :] - old_onehot
        row_b = np.broadcast_to(row[:, None, :], base_tp.shape)
        for h in range(num_classes):
            new_onehot = classes == h
            tp_h = base_tp + (new_onehot & (a == h))
            col_h = base_col + new_onehot
            for k, spec in enumerate(specs):
                values = metric_from_stats(spec, tp_h, row_b, col_h, total, zero_division)
                out[k, start:stop, h] = values.mean(axis=0)
    return out


@dataclass(frozen=True)
class ValueGroup:
    members: tuple
    value: float


def group_values(q: Sequence[float], epsilon: float = DEFAULT_EPSILON) -> List[ValueGroup]:
    """Single-linkage grouping of candidate labels whose values agree within ``epsilon``."""
    q = np.asarray(q, dtype=np.float64)
    if epsilon < 0:
        raise ConfigError(f"epsilon must be non-negative, got {epsilon}")
    order = np.argsort(q, kind="stable")
    groups: List[List[int]] = []
    for pos, h in enumerate(order):
        if pos == 0 or q[h] - q[order[pos - 1]] > epsilon:
            groups.append([])
        groups[-1].append(int(h))
    return [ValueGroup(tuple(sorted(g)), float(np.mean(q[g]))) for g in groups]


def group_ids(q: np.ndarray, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Row-wise ``group_values``: a group id per entry of a (U, C) value matrix."""
    q = np.asarray(q, dtype=np.float64)
    order = np.argsort(q, axis=-1, kind="stable")
    sorted_q = np.take_along_axis(q, order, axis=-1)
    breaks = np.diff(sorted_q, axis=-1) > epsilon
    sorted_ids = np.concatenate(
        [np.zeros(q.shape[:-1] + (1,), dtype=np.int64), np.cumsum(breaks, axis=-1)], axis=-1
    )
    ids = np.empty_like(sorted_ids)
    np.put_along_axis(ids, order, sorted_ids, axis=-1)
    return ids
