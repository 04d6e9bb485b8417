"""The active-testing driver and its Tradition baseline.

One repetition draws a seed set, then alternates between estimating the
metrics and querying the oracle until the budget is spent. Every estimate is
recorded, including one after the final query.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from ..acquisition import bald_scores, multi_metric_scores, random_batch, select_batch
from ..data.pool import LabelState, TestPool, create_label_state, oracle_query
from ..errors import ConfigError, SurrogateError
from ..estimation import (
    MetricEstimate,
    average_relative_error,
    estimate_all,
    labeled_subset_estimates,
    surrogate_accuracy,
)
from ..metrics import MetricSpec
from ..models.experiment import ExperimentConfig, load_pool
from ..surrogate.agreement import (
    MIN_AGREEMENT_PAIRS,
    AugmentedSet,
    assemble_training_set,
    build_augmented_set,
    train_agreement_classifier,
)
from ..surrogate.mlp import DropoutMlpSurrogate, MlpConfig, PosteriorSamples

logger = logging.getLogger(__name__)

TRADITION = "tradition"

_SEED_PURPOSES = {
    "seed_set": 0,
    "surrogate": 1,
    "mc": 2,
    "acquisition": 3,
    "agreement": 4,
}


def derive_seed(seed: int, purpose: str, iteration: int = 0) -> int:
    """Independent, reproducible stream seed for one purpose at one iteration."""
    entropy = [int(seed), _SEED_PURPOSES[purpose], int(iteration)]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


class Surrogate(Protocol):
    def fit(self, features: np.ndarray, labels: np.ndarray, seed: int) -> None: ...

    def sample(self, features: np.ndarray, num_samples: int, seed: int) -> PosteriorSamples: ...


SurrogateFactory = Callable[[TestPool, ExperimentConfig], Surrogate]


def default_surrogate(pool: TestPool, config: ExperimentConfig) -> Surrogate:
    mlp_config = config.surrogate.to_mlp_config(pool.num_features, pool.num_classes)
    return DropoutMlpSurrogate(mlp_config, workers=config.workers)


@dataclass
class IterationRecord:
    rep: int
    iteration: int
    labels_spent: int
    estimates: List[MetricEstimate]
    surrogate_accuracy: float
    chosen: Tuple[int, ...] = ()
    wall_time_ms: float = 0.0
    augmented_size: int = 0

    @property
    def chosen_index(self) -> int:
        return self.chosen[0] if self.chosen else -1

    @property
    def average_relative_error(self) -> float:
        return average_relative_error(self.estimates)


@dataclass
class ExperimentLog:
    """All records of one strategy, ordered by (rep, iteration)."""

    strategy: str
    records: List[IterationRecord] = field(default_factory=list)
    n0: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def repetitions(self) -> List[int]:
        return sorted({r.rep for r in self.records})

    def for_rep(self, rep: int) -> List[IterationRecord]:
        return [r for r in self.records if r.rep == rep]

    def final_records(self) -> List[IterationRecord]:
        return [self.for_rep(rep)[-1] for rep in self.repetitions()]


def num_query_steps(budget_total: int, batch_size: int) -> int:
    return math.ceil(budget_total / batch_size)


def _augmented_set(
    config: ExperimentConfig,
    pool: TestPool,
    state: LabelState,
    mlp_config: MlpConfig,
    seed: int,
) -> AugmentedSet:
    pairs = state.pairs()
    if len(pairs) < MIN_AGREEMENT_PAIRS:
        logger.warning(f"Only {len(pairs)} labeled pairs; skipping augmentation")
        return AugmentedSet.empty()
    try:
        fit = train_agreement_classifier(
            pairs, pool, mlp_config, config.validation_fraction, seed=seed
        )
    except SurrogateError as e:
        logger.warning(f"Skipping augmentation: {e}")
        return AugmentedSet.empty()
    augmented = build_augmented_set(
        fit.classifier,
        fit.threshold,
        fit.validation_precision,
        pool,
        state.unlabeled_indices,
        exponent=config.augmentation_exponent,
    )
    logger.debug(
        f"Augmented set: {len(augmented)} of {augmented.num_candidates} candidates "
        f"(threshold {fit.threshold:.2f}, precision {fit.validation_precision:.3f})"
    )
    return augmented


def _choose(
    config: ExperimentConfig,
    specs: Sequence[MetricSpec],
    ps: PosteriorSamples,
    pool: TestPool,
    state: LabelState,
    count: int,
    seed: int,
) -> np.ndarray:
    if config.strategy == "random":
        return random_batch(state.unlabeled_indices, count, seed)
    if config.strategy == "bald":
        return select_batch(bald_scores(ps, state.unlabeled_indices), count)
    if config.strategy == "altmas":
        scores = multi_metric_scores(
            specs, ps, pool, state, config.epsilon, float(config.zero_division)
        )
        return select_batch(scores, count)
    raise ConfigError(f"unknown strategy {config.strategy!r}")


def _query(state: LabelState, pool: TestPool, indices: np.ndarray) -> Tuple[int, ...]:
    for index in indices:
        oracle_query(state, pool, int(index))
    return tuple(int(i) for i in indices)


def _elapsed_ms(start: float, config: ExperimentConfig) -> float:
    return (time.perf_counter() - start) * 1000.0 if config.record_wall_time else 0.0


def run_repetition(
    config: ExperimentConfig,
    pool: TestPool,
    rep: int,
    surrogate_factory: Optional[SurrogateFactory] = None,
) -> List[IterationRecord]:
    """One repetition of surrogate-based active testing."""
    rep_seed = config.seed + rep
    specs = config.metric_specs(pool.num_classes)
    state = create_label_state(
        pool, config.budget_total, config.n0, seed=derive_seed(rep_seed, "seed_set")
    )
    mlp_config = config.surrogate.to_mlp_config(pool.num_features, pool.num_classes)
    surrogate = (surrogate_factory or default_surrogate)(pool, config)
    steps = num_query_steps(config.budget_total, config.batch_size)

    records: List[IterationRecord] = []
    ps: Optional[PosteriorSamples] = None
    augmented_size = 0
    for iteration in range(steps + 1):
        start = time.perf_counter()
        if ps is None or iteration % config.retrain_every == 0:
            training = state.pairs()
            augmented_size = 0
            if config.uses_augmentation:
                augmented = _augmented_set(
                    config, pool, state, mlp_config, derive_seed(rep_seed, "agreement", iteration)
                )
                training = assemble_training_set(training, augmented)
                augmented_size = len(augmented)
            surrogate.fit(
                pool.features[training.indices],
                training.labels,
                seed=derive_seed(rep_seed, "surrogate", iteration),
            )
            ps = surrogate.sample(
                pool.features, config.num_samples, seed=derive_seed(rep_seed, "mc", iteration)
            )

        labels_spent = state.num_labeled
        estimates = estimate_all(specs, ps, pool, state, float(config.zero_division))
        accuracy = surrogate_accuracy(ps, pool)
        chosen: Tuple[int, ...] = ()
        if iteration < steps:
            count = min(config.batch_size, state.budget_remaining)
            batch = _choose(
                config, specs, ps, pool, state, count, derive_seed(rep_seed, "acquisition", iteration)
            )
            chosen = _query(state, pool, batch)

        record = IterationRecord(
            rep=rep,
            iteration=iteration,
            labels_spent=labels_spent,
            estimates=estimates,
            surrogate_accuracy=accuracy,
            chosen=chosen,
            wall_time_ms=_elapsed_ms(start, config),
            augmented_size=augmented_size,
        )
        records.append(record)
        logger.info(
            f"[{config.strategy} rep {rep}] iteration {iteration}: labels={labels_spent}, "
            f"avg rel err={record.average_relative_error:.4f}, surrogate acc={accuracy:.3f}"
        )
    return records


def tradition_repetition(config: ExperimentConfig, pool: TestPool, rep: int) -> List[IterationRecord]:
    """Metrics on the labeled pairs alone; points queried uniformly at random."""
    rep_seed = config.seed + rep
    specs = config.metric_specs(pool.num_classes)
    state = create_label_state(
        pool, config.budget_total, config.n0, seed=derive_seed(rep_seed, "seed_set")
    )
    steps = num_query_steps(config.budget_total, config.batch_size)

    records: List[IterationRecord] = []
    for iteration in range(steps + 1):
        start = time.perf_counter()
        labels_spent = state.num_labeled
        estimates = labeled_subset_estimates(specs, pool, state, float(config.zero_division))
        chosen: Tuple[int, ...] = ()
        if iteration < steps:
            count = min(config.batch_size, state.budget_remaining)
            batch = random_batch(
                state.unlabeled_indices, count, derive_seed(rep_seed, "acquisition", iteration)
            )
            chosen = _query(state, pool, batch)
        records.append(
            IterationRecord(
                rep=rep,
                iteration=iteration,
                labels_spent=labels_spent,
                estimates=estimates,
                surrogate_accuracy=float("nan"),
                chosen=chosen,
                wall_time_ms=_elapsed_ms(start, config),
            )
        )
    logger.info(
        f"[{TRADITION} rep {rep}] final avg rel err={records[-1].average_relative_error:.4f}"
    )
    return records


def run_repetitions(
    config: ExperimentConfig,
    strategy: str,
    run_one: Callable[[int], List[IterationRecord]],
) -> ExperimentLog:
    """Run every repetition, on a thread pool when ``config.workers > 1``."""
    reps = range(config.repetitions)
    if config.workers > 1 and config.repetitions > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            per_rep = list(executor.map(run_one, reps))
    else:
        per_rep = [run_one(rep) for rep in reps]
    log = ExperimentLog(strategy=strategy, n0=config.n0)
    for records in per_rep:
        log.records.extend(records)
    return log


def _resolve_pool(config: ExperimentConfig, pool: Optional[TestPool]) -> TestPool:
    if pool is None:
        return load_pool(config)
    config.check_against(pool)
    return pool


def run_active_testing(
    config: ExperimentConfig,
    pool: Optional[TestPool] = None,
    surrogate_factory: Optional[SurrogateFactory] = None,
) -> ExperimentLog:
    pool = _resolve_pool(config, pool)
    return run_repetitions(
        config,
        config.strategy,
        lambda rep: run_repetition(config, pool, rep, surrogate_factory),
    )


def run_tradition(config: ExperimentConfig, pool: Optional[TestPool] = None) -> ExperimentLog:
    pool = _resolve_pool(config, pool)
    return run_repetitions(config, TRADITION, lambda rep: tradition_repetition(config, pool, rep))


def run_comparison(
    config: ExperimentConfig,
    pool: Optional[TestPool] = None,
    surrogate_factory: Optional[SurrogateFactory] = None,
) -> Dict[str, ExperimentLog]:
    """The configured strategy, the BALD baseline and Tradition on the same seeds."""
    pool = _resolve_pool(config, pool)
    logs = {config.strategy: run_active_testing(config, pool, surrogate_factory)}
    if config.strategy != "bald":
        bald_config = config.model_copy(update={"strategy": "bald"})
        logs["bald"] = run_active_testing(bald_config, pool, surrogate_factory)
    logs[TRADITION] = run_tradition(config, pool)
    return logs
