"""Acquisition functions: which unlabeled point to send to the oracle next.

Scores are mutual informations in nats. ``metric_mi_scores`` measures how
much a point's label tells us about a metric: candidate labels that leave the
metric (averaged over posterior samples) at the same value are merged into one
outcome, and the score is the label-group entropy of the posterior mean minus
the mean per-sample label-group entropy.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Sequence

import numpy as np
from scipy.special import entr

from .data.pool import LabelState, TestPool
from .errors import AcquisitionError, MetricError
from .metrics import (
    DEFAULT_EPSILON,
    MetricSpec,
    candidate_metric_matrix,
    composite_labels,
    confusion_stack,
    group_ids,
)
from .surrogate.mlp import PosteriorSamples

logger = logging.getLogger(__name__)


class Strategy(str, Enum):
    RANDOM = "random"
    BALD = "bald"
    METRIC_MI = "metric_mi"
    MULTI_METRIC_MI = "multi_metric_mi"


@dataclass(eq=False)
class AcquisitionScores:
    """Non-negative scores keyed by the unlabeled pool indices (ascending)."""

    indices: np.ndarray
    values: np.ndarray
    strategy: Strategy

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.indices.shape != self.values.shape:
            raise AcquisitionError("score indices and values differ in length")

    def __len__(self) -> int:
        return len(self.indices)

    def to_dict(self) -> Dict[int, float]:
        return {int(i): float(v) for i, v in zip(self.indices, self.values)}


def _mutual_information(mean_probs: np.ndarray, per_sample_probs: np.ndarray) -> np.ndarray:
    """H[mean] - mean_j H[sample_j] over the last axis, unclamped."""
    marginal = entr(mean_probs).sum(axis=-1)
    conditional = entr(per_sample_probs).sum(axis=-1).mean(axis=0)
    return marginal - conditional


def bald_scores(ps: PosteriorSamples, unlabeled: np.ndarray) -> AcquisitionScores:
    """Disagreement between the posterior passes about each point's label."""
    unlabeled = np.asarray(unlabeled, dtype=np.int64)
    probs = ps.probs[:, unlabeled]
    raw = _mutual_information(probs.mean(axis=0), probs)
    return AcquisitionScores(unlabeled, np.maximum(raw, 0.0), Strategy.BALD)


def grouped_mutual_information(
    q: np.ndarray, probs: np.ndarray, epsilon: float = DEFAULT_EPSILON
) -> np.ndarray:
    """Mutual information between a point's metric-value group and the weights.

    q: (U, C) candidate metric values; probs: (M, U, C) posterior passes.
    The grouping is computed once from q and applied to both entropy terms.
    Returns unclamped scores of shape (U,).
    """
    num_classes = q.shape[-1]
    ids = group_ids(q, epsilon)
    membership = (ids[..., None] == np.arange(num_classes)).astype(np.float64)
    group_mean = np.einsum("uh,uhg->ug", probs.mean(axis=0), membership)
    group_samples = np.einsum("muh,uhg->mug", probs, membership)
    return _mutual_information(group_mean, group_samples)


def _candidate_values(
    specs: Sequence[MetricSpec],
    ps: PosteriorSamples,
    pool: TestPool,
    state: LabelState,
    unlabeled: np.ndarray,
    zero_division: float,
) -> np.ndarray:
    if ps.num_points != pool.num_points or ps.num_classes != pool.num_classes:
        raise MetricError(
            f"posterior covers {ps.num_points} points x {ps.num_classes} classes, "
            f"pool has {pool.num_points} x {pool.num_classes}"
        )
    composite = composite_labels(ps.labels, state.labeled_indices, state.labeled_labels)
    counts = confusion_stack(pool.mut_predictions, composite, pool.num_classes)
    return candidate_metric_matrix(
        specs,
        counts,
        pool.mut_predictions[unlabeled],
        composite[:, unlabeled],
        zero_division,
    )


def multi_metric_scores(
    specs: Sequence[MetricSpec],
    ps: PosteriorSamples,
    pool: TestPool,
    state: LabelState,
    epsilon: float = DEFAULT_EPSILON,
    zero_division: float = 0.0,
) -> AcquisitionScores:
    """Sum of the per-metric scores over ``specs``."""
    if not specs:
        raise AcquisitionError("metric set is empty")
    strategy = Strategy.METRIC_MI if len(specs) == 1 else Strategy.MULTI_METRIC_MI
    unlabeled = state.unlabeled_indices
    if len(unlabeled) == 0:
        return AcquisitionScores(unlabeled, np.empty(0), strategy)

    q = _candidate_values(specs, ps, pool, state, unlabeled, zero_division)
    probs = ps.probs[:, unlabeled]
    total = np.zeros(len(unlabeled))
    for k in range(len(specs)):
        total += np.maximum(grouped_mutual_information(q[k], probs, epsilon), 0.0)
    return AcquisitionScores(unlabeled, total, strategy)


def metric_mi_scores(
    spec: MetricSpec,
    ps: PosteriorSamples,
    pool: TestPool,
    state: LabelState,
    epsilon: float = DEFAULT_EPSILON,
    zero_division: float = 0.0,
) -> AcquisitionScores:
    return multi_metric_scores([spec], ps, pool, state, epsilon, zero_division)


def select_batch(scores: AcquisitionScores, batch_size: int = 1) -> np.ndarray:
    """Top ``batch_size`` indices by score, ties to the lowest pool index."""
    if len(scores) == 0:
        raise AcquisitionError("cannot select from an empty score map")
    if batch_size < 1:
        raise AcquisitionError(f"batch_size must be positive, got {batch_size}")
    order = np.lexsort((scores.indices, -scores.values))
    return scores.indices[order[:batch_size]]


def select_next(scores: AcquisitionScores) -> int:
    return int(select_batch(scores, 1)[0])


def random_batch(unlabeled: np.ndarray, batch_size: int, seed: int) -> np.ndarray:
    """Uniform draw of ``batch_size`` distinct unlabeled indices."""
    unlabeled = np.asarray(unlabeled, dtype=np.int64)
    if len(unlabeled) == 0:
        raise AcquisitionError("no unlabeled points left")
    rng = np.random.default_rng(seed)
    return rng.choice(unlabeled, size=min(batch_size, len(unlabeled)), replace=False)


def random_select(unlabeled: np.ndarray, seed: int) -> int:
    return int(random_batch(unlabeled, 1, seed)[0])
