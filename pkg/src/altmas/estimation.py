"""Metric estimates from posterior samples and their errors against the truth."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from .data.pool import LabelState, TestPool
from .errors import MetricError
from .metrics import (
    MetricKind,
    MetricSpec,
    composite_labels,
    confusion_from,
    confusion_stack,
    metric_value,
    metric_values_stack,
)
from .surrogate.mlp import PosteriorSamples

logger = logging.getLogger(__name__)

# Denominator guard for metrics whose true value is 0.
RELATIVE_ERROR_GUARD = 1e-6


@dataclass(frozen=True)
class MetricEstimate:
    name: str
    estimate: float
    truth: float
    relative_error: float
    absolute_error: float


def relative_error(estimate: float, truth: float) -> float:
    return abs(estimate - truth) / max(truth, RELATIVE_ERROR_GUARD)


def _sample_mean(values: np.ndarray) -> float:
    # Offset by the minimum so M identical values average to exactly that value.
    low = values.min()
    return float(low + np.mean(values - low))


def _composite_counts(ps: PosteriorSamples, pool: TestPool, state: LabelState) -> np.ndarray:
    if ps.num_points != pool.num_points:
        raise MetricError(f"posterior covers {ps.num_points} points, pool has {pool.num_points}")
    composite = composite_labels(ps.labels, state.labeled_indices, state.labeled_labels)
    return confusion_stack(pool.mut_predictions, composite, pool.num_classes)


def estimate_metric(
    spec: MetricSpec,
    ps: PosteriorSamples,
    pool: TestPool,
    state: LabelState,
    zero_division: float = 0.0,
) -> float:
    """Mean over posterior samples of the metric on each sample's composite labels."""
    counts = _composite_counts(ps, pool, state)
    return _sample_mean(metric_values_stack(spec, counts, zero_division))


def true_metric_values(
    specs: Sequence[MetricSpec], pool: TestPool, zero_division: float = 0.0
) -> Dict[str, float]:
    cc = confusion_from(pool.mut_predictions, pool.truth, pool.num_classes)
    return {spec.name: metric_value(spec, cc, zero_division) for spec in specs}


def estimate_all(
    specs: Sequence[MetricSpec],
    ps: PosteriorSamples,
    pool: TestPool,
    state: LabelState,
    zero_division: float = 0.0,
) -> List[MetricEstimate]:
    counts = _composite_counts(ps, pool, state)
    truth = true_metric_values(specs, pool, zero_division)
    estimates = []
    for spec in specs:
        value = _sample_mean(metric_values_stack(spec, counts, zero_division))
        true_value = truth[spec.name]
        estimates.append(
            MetricEstimate(
                name=spec.name,
                estimate=value,
                truth=true_value,
                relative_error=relative_error(value, true_value),
                absolute_error=abs(value - true_value),
            )
        )
    return estimates


def _warn_empty_denominators(specs: Sequence[MetricSpec], counts: np.ndarray) -> None:
    predicted, actual = counts.sum(axis=1), counts.sum(axis=0)
    for spec in specs:
        if spec.kind is MetricKind.PRECISION and predicted[spec.class_index] == 0:
            logger.warning(f"{spec.name}: no labeled point predicted as class {spec.class_index}")
        elif spec.kind is MetricKind.RECALL and actual[spec.class_index] == 0:
            logger.warning(f"{spec.name}: no labeled point of class {spec.class_index}")


def labeled_subset_estimates(
    specs: Sequence[MetricSpec],
    pool: TestPool,
    state: LabelState,
    zero_division: float = 0.0,
) -> List[MetricEstimate]:
    """Metrics computed on the labeled pairs alone, with no surrogate."""
    indices = state.labeled_indices
    if len(indices) == 0:
        raise MetricError("no labeled points to compute metrics on")
    cc = confusion_from(pool.mut_predictions[indices], state.labeled_labels, pool.num_classes)
    _warn_empty_denominators(specs, cc.counts)
    truth = true_metric_values(specs, pool, zero_division)
    estimates = []
    for spec in specs:
        value = metric_value(spec, cc, zero_division)
        true_value = truth[spec.name]
        estimates.append(
            MetricEstimate(spec.name, value, true_value, relative_error(value, true_value), abs(value - true_value))
        )
    return estimates


def surrogate_accuracy(ps: PosteriorSamples, pool: TestPool) -> float:
    """Fraction of pool points whose majority-vote label equals the truth."""
    votes = (ps.labels[..., None] == np.arange(ps.num_classes)).sum(axis=0)
    majority = np.argmax(votes, axis=-1)
    return float(np.mean(majority == pool.truth))


def average_relative_error(estimates: Sequence[MetricEstimate]) -> float:
    if not estimates:
        return float("nan")
    return float(np.mean([e.relative_error for e in estimates]))
