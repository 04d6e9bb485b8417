"""Test pool, labeling oracle and labeled/unlabeled bookkeeping."""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from sklearn.model_selection import train_test_split

from ..errors import (
    AlreadyLabeledError,
    BudgetExhaustedError,
    ConfigError,
    DataFormatError,
    IndexOutOfRangeError,
)

logger = logging.getLogger(__name__)

# Seed-set size used by the reference experiments.
DEFAULT_SEED_SET_SIZE = 100


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class TestPool:
    """The N points under evaluation.

    ``truth`` is only read by the oracle and by the harness when it scores
    estimates against the true metric values.
    """

    __test__ = False  # not a pytest class

    features: np.ndarray
    mut_predictions: np.ndarray
    truth: np.ndarray
    num_classes: int

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if features.ndim != 2:
            raise DataFormatError(f"features must be a matrix, got shape {features.shape}")
        n = features.shape[0]
        if len(self.mut_predictions) != n or len(self.truth) != n:
            raise DataFormatError(
                f"row count mismatch: {n} feature rows, {len(self.mut_predictions)} predictions, "
                f"{len(self.truth)} labels"
            )
        if self.num_classes < 1:
            raise DataFormatError(f"num_classes must be positive, got {self.num_classes}")
        for name, values in (("mut_predictions", self.mut_predictions), ("truth", self.truth)):
            values = np.asarray(values)
            if values.size and (values.min() < 0 or values.max() >= self.num_classes):
                raise DataFormatError(f"{name} has labels outside [0, {self.num_classes})")
        object.__setattr__(self, "features", _frozen(features, np.float64))
        object.__setattr__(self, "mut_predictions", _frozen(self.mut_predictions, np.int64))
        object.__setattr__(self, "truth", _frozen(self.truth, np.int64))

    @property
    def num_points(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def mut_accuracy(self) -> float:
        return float(np.mean(self.mut_predictions == self.truth)) if self.num_points else 0.0


@dataclass(frozen=True, eq=False)
class LabeledPairs:
    """Pool indices with their revealed labels, in reveal order."""

    indices: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        if self.indices.shape != self.labels.shape:
            raise ValueError("indices and labels must have the same length")

    def __len__(self) -> int:
        return len(self.indices)

    def subset(self, positions: np.ndarray) -> "LabeledPairs":
        return LabeledPairs(self.indices[positions], self.labels[positions])


class LabelState:
    """Labeled/unlabeled partition of the pool plus the oracle budget.

    Only the experiment driver mutates a LabelState.
    """

    def __init__(self, num_points: int, budget_total: int):
        if budget_total < 0:
            raise ConfigError(f"budget_total must be non-negative, got {budget_total}")
        self.num_points = num_points
        self.budget_total = budget_total
        self.budget_used = 0
        self.initial_count = 0
        self._labels: Dict[int, int] = {}
        self._mask = np.zeros(num_points, dtype=bool)

    @property
    def num_labeled(self) -> int:
        return len(self._labels)

    @property
    def num_unlabeled(self) -> int:
        return self.num_points - len(self._labels)

    @property
    def budget_remaining(self) -> int:
        return self.budget_total - self.budget_used

    @property
    def labeled_indices(self) -> np.ndarray:
        return np.fromiter(self._labels.keys(), dtype=np.int64, count=len(self._labels))

    @property
    def labeled_labels(self) -> np.ndarray:
        return np.fromiter(self._labels.values(), dtype=np.int64, count=len(self._labels))

    @property
    def unlabeled_indices(self) -> np.ndarray:
        return np.flatnonzero(~self._mask)

    @property
    def labeled_mask(self) -> np.ndarray:
        mask = self._mask.copy()
        mask.setflags(write=False)
        return mask

    def is_labeled(self, index: int) -> bool:
        return bool(self._mask[index])

    def pairs(self) -> LabeledPairs:
        return LabeledPairs(self.labeled_indices, self.labeled_labels)

    def _reveal(self, index: int, label: int) -> None:
        self._labels[index] = label
        self._mask[index] = True


def oracle_query(state: LabelState, pool: TestPool, index: int) -> int:
    """Reveal the ground-truth label of one unlabeled point, spending one query."""
    index = int(index)
    if not 0 <= index < pool.num_points:
        raise IndexOutOfRangeError(f"index {index} out of range for pool of {pool.num_points}")
    if state.is_labeled(index):
        raise AlreadyLabeledError(f"index {index} already labeled")
    if state.budget_used >= state.budget_total:
        raise BudgetExhaustedError(
            f"budget exhausted ({state.budget_used}/{state.budget_total} queries used)"
        )
    label = int(pool.truth[index])
    state._reveal(index, label)
    state.budget_used += 1
    return label


def init_labeled(
    state: LabelState, pool: TestPool, n0: int = DEFAULT_SEED_SET_SIZE, seed: int = 0
) -> LabelState:
    """Reveal a uniformly drawn seed set without consuming budget."""
    if not 0 < n0 <= pool.num_points:
        raise ConfigError(f"seed set size n0={n0} must be in (0, {pool.num_points}]")
    if state.num_labeled:
        raise ConfigError("seed set can only be drawn on an empty label state")
    rng = np.random.default_rng(seed)
    for index in rng.choice(pool.num_points, size=n0, replace=False):
        state._reveal(int(index), int(pool.truth[index]))
    state.initial_count = n0
    logger.debug(f"Seed set of {n0} points revealed (seed={seed})")
    return state


def create_label_state(
    pool: TestPool, budget_total: int, n0: int = DEFAULT_SEED_SET_SIZE, seed: int = 0
) -> LabelState:
    return init_labeled(LabelState(pool.num_points, budget_total), pool, n0, seed)


def split_validation(
    labeled_pairs: LabeledPairs,
    fraction: float,
    seed: int = 0,
    strata: Optional[np.ndarray] = None,
) -> Tuple[LabeledPairs, LabeledPairs]:
    """Split labeled pairs into (train, valid).

    The validation part has round(fraction * n) pairs clamped to [1, n - 1].
    When ``strata`` is given and both strata have at least two members the
    split is stratified, otherwise it is a plain seeded shuffle.
    """
    n = len(labeled_pairs)
    if n < 2:
        raise ConfigError(f"need at least 2 labeled pairs to split, got {n}")
    if not 0 < fraction < 1:
        raise ConfigError(f"validation fraction must be in (0, 1), got {fraction}")
    n_valid = min(max(int(np.floor(fraction * n + 0.5)), 1), n - 1)

    positions = np.arange(n)
    stratify = None
    if strata is not None:
        strata = np.asarray(strata)
        _, counts = np.unique(strata, return_counts=True)
        if len(counts) == 2 and counts.min() >= 2 and min(n_valid, n - n_valid) >= 2:
            stratify = strata
    train_pos, valid_pos = train_test_split(
        positions, test_size=n_valid, random_state=seed, shuffle=True, stratify=stratify
    )
    return labeled_pairs.subset(np.sort(train_pos)), labeled_pairs.subset(np.sort(valid_pos))
