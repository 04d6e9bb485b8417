"""Agreement classifier and the augmented labeled set it produces.

The agreement classifier predicts, from a point's features, whether the
model-under-test's output equals the ground truth there. Unlabeled points it
confidently marks as "agree" join the surrogate's training set labeled with
the model-under-test's own outputs.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from sklearn.utils import resample

from ..data.pool import LabeledPairs, TestPool, split_validation
from ..errors import SurrogateError
from .mlp import Mlp, MlpConfig, train_mlp

logger = logging.getLogger(__name__)

MIN_AGREEMENT_PAIRS = 10
DEFAULT_VALIDATION_FRACTION = 0.3
DEFAULT_PRECISION_EXPONENT = 2.0
THRESHOLD_GRID = np.linspace(0.5, 1.0, 101)


@dataclass
class AgreementClassifier:
    """Either a trained two-output MLP or, in the degenerate case, a constant."""

    mlp: Optional[Mlp] = None
    constant: Optional[float] = None

    def __post_init__(self):
        if (self.mlp is None) == (self.constant is None):
            raise SurrogateError("agreement classifier needs exactly one of mlp or constant")

    @property
    def is_trivial(self) -> bool:
        return self.mlp is None

    def agree_probability(self, features: np.ndarray) -> np.ndarray:
        if self.mlp is None:
            return np.full(len(features), self.constant)
        return self.mlp.predict_proba(features)[:, 1]


@dataclass
class AgreementFit:
    classifier: AgreementClassifier
    threshold: float
    validation_precision: float


@dataclass(eq=False)
class AugmentedSet:
    indices: np.ndarray
    labels: np.ndarray
    validation_precision: float
    num_candidates: int = 0

    def __len__(self) -> int:
        return len(self.indices)

    @classmethod
    def empty(cls, validation_precision: float = 0.0) -> "AugmentedSet":
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), validation_precision)


def oversample(
    features: np.ndarray, targets: np.ndarray, seed: int = 0
) -> Tuple[np.ndarray, np.ndarray]:
    """Duplicate minority-class rows with replacement until both classes are equal."""
    classes, counts = np.unique(targets, return_counts=True)
    if len(classes) < 2 or counts[0] == counts[1]:
        return features, targets
    minority = classes[np.argmin(counts)]
    deficit = counts.max() - counts.min()
    minority_rows = np.flatnonzero(targets == minority)
    extra = resample(minority_rows, replace=True, n_samples=deficit, random_state=seed)
    keep = np.concatenate([np.arange(len(targets)), extra])
    return features[keep], targets[keep]


def _precision_at(probabilities: np.ndarray, targets: np.ndarray, threshold: float) -> float:
    predicted = probabilities >= threshold
    if not predicted.any():
        return 0.0
    return float(np.mean(targets[predicted]))


def tune_threshold(probabilities: np.ndarray, targets: np.ndarray) -> Tuple[float, float]:
    """Precision-maximizing threshold on the grid; ties go to the higher threshold."""
    best_threshold, best_precision = float(THRESHOLD_GRID[0]), -1.0
    for threshold in THRESHOLD_GRID:
        precision = _precision_at(probabilities, targets, threshold)
        if precision >= best_precision:
            best_threshold, best_precision = float(threshold), precision
    return best_threshold, best_precision


def train_agreement_classifier(
    labeled_pairs: LabeledPairs,
    pool: TestPool,
    config: MlpConfig,
    validation_fraction: float = DEFAULT_VALIDATION_FRACTION,
    seed: int = 0,
) -> AgreementFit:
    """Train the agreement classifier on the labeled set and tune its threshold.

    Targets are 1 where the model-under-test matches the revealed label. The
    classifier shares the surrogate's hidden architecture with two outputs.
    """
    if len(labeled_pairs) < MIN_AGREEMENT_PAIRS:
        raise SurrogateError(
            f"agreement classifier needs at least {MIN_AGREEMENT_PAIRS} labeled pairs, "
            f"got {len(labeled_pairs)}"
        )
    targets = (pool.mut_predictions[labeled_pairs.indices] == labeled_pairs.labels).astype(np.int64)
    positions = np.arange(len(labeled_pairs))
    train, valid = split_validation(
        LabeledPairs(positions, targets), validation_fraction, seed=seed, strata=targets
    )
    train_targets, valid_targets = train.labels, valid.labels

    if len(np.unique(train_targets)) < 2:
        only = int(train_targets[0])
        precision = float(np.mean(valid_targets == only))
        logger.warning(
            f"Agreement targets are all {only} in the training part; using a constant classifier"
        )
        return AgreementFit(AgreementClassifier(constant=float(only)), 0.5, precision)

    train_features = pool.features[labeled_pairs.indices[train.indices]]
    x, y = oversample(train_features, train_targets, seed=seed)
    mlp_config = replace(
        config, layer_sizes=(pool.num_features, *config.hidden_sizes, 2), seed=seed
    )
    classifier = AgreementClassifier(mlp=train_mlp(mlp_config, x, y))

    valid_features = pool.features[labeled_pairs.indices[valid.indices]]
    threshold, precision = tune_threshold(classifier.agree_probability(valid_features), valid_targets)
    logger.debug(f"Agreement classifier: threshold={threshold:.3f}, validation precision={precision:.3f}")
    return AgreementFit(classifier, threshold, precision)


def augmented_size(validation_precision: float, num_candidates: int, exponent: float = DEFAULT_PRECISION_EXPONENT) -> int:
    return int(math.floor(validation_precision ** exponent * num_candidates))


def build_augmented_set(
    classifier: AgreementClassifier,
    threshold: float,
    validation_precision: float,
    pool: TestPool,
    unlabeled_indices: np.ndarray,
    exponent: float = DEFAULT_PRECISION_EXPONENT,
) -> AugmentedSet:
    """Keep the most confident ``floor(precision**exponent * |candidates|)`` agreeing points."""
    unlabeled_indices = np.asarray(unlabeled_indices, dtype=np.int64)
    if len(unlabeled_indices) == 0:
        return AugmentedSet.empty(validation_precision)
    probabilities = classifier.agree_probability(pool.features[unlabeled_indices])
    chosen = probabilities >= threshold
    candidates, candidate_probs = unlabeled_indices[chosen], probabilities[chosen]
    keep = augmented_size(validation_precision, len(candidates), exponent)
    order = np.lexsort((candidates, -candidate_probs))[:keep]
    indices = candidates[order]
    return AugmentedSet(
        indices=indices,
        labels=pool.mut_predictions[indices].copy(),
        validation_precision=validation_precision,
        num_candidates=len(candidates),
    )


def assemble_training_set(labeled_pairs: LabeledPairs, augmented: AugmentedSet) -> LabeledPairs:
    """Labeled pairs followed by the augmented pairs."""
    if len(augmented) == 0:
        return labeled_pairs
    overlap = np.intersect1d(labeled_pairs.indices, augmented.indices)
    if overlap.size:
        raise SurrogateError(f"augmented set overlaps the labeled set at {overlap[:5].tolist()}")
    return LabeledPairs(
        np.concatenate([labeled_pairs.indices, augmented.indices]),
        np.concatenate([labeled_pairs.labels, augmented.labels]),
    )
