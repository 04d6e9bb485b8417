"""Experiment configuration models."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from ..config import RESULTS_DIR, WORKERS
from ..data.io import load_csv_pool, load_idx_pool, load_predictions
from ..data.pool import DEFAULT_SEED_SET_SIZE, TestPool
from ..errors import ConfigError
from ..metrics import DEFAULT_EPSILON, MetricSpec, parse_metric_set
from ..surrogate.mlp import DEFAULT_NUM_SAMPLES, MlpConfig

logger = logging.getLogger(__name__)

StrategyName = Literal["random", "bald", "altmas"]


class SurrogateSettings(BaseModel):
    """Dropout MLP hyperparameters; layer sizes at the ends come from the pool."""

    hidden_sizes: List[int] = Field(default_factory=lambda: [256, 256])
    dropout_rate: float = Field(0.2, ge=0.0, lt=1.0)
    learning_rate: float = Field(1e-3, gt=0.0)
    epochs: int = Field(50, ge=0)
    batch_size: int = Field(32, ge=1)

    def to_mlp_config(self, input_dim: int, num_classes: int, seed: int = 0) -> MlpConfig:
        return MlpConfig.for_data(
            input_dim,
            num_classes,
            hidden_sizes=self.hidden_sizes,
            dropout_rate=self.dropout_rate,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=seed,
        )


class ExperimentConfig(BaseModel):
    """One active-testing experiment: pool, metrics, strategy and budget."""

    model_config = {"extra": "forbid"}

    pool_source: Literal["idx", "csv"] = "csv"
    pool_paths: List[str] = Field(default_factory=list)
    predictions_path: Optional[str] = None
    pool_limit: Optional[int] = Field(None, ge=1)
    metrics: List[str] = Field(default_factory=lambda: ["accuracy"])
    strategy: StrategyName = "altmas"
    budget_total: int = Field(300, ge=0)
    n0: int = Field(DEFAULT_SEED_SET_SIZE, ge=1)
    num_samples: int = Field(DEFAULT_NUM_SAMPLES, ge=1)
    repetitions: int = Field(3, ge=1)
    seed: int = 0
    surrogate: SurrogateSettings = Field(default_factory=SurrogateSettings)
    augmentation: bool = True
    augment_baselines: bool = False
    augmentation_exponent: float = Field(2.0, gt=0.0)
    validation_fraction: float = Field(0.3, gt=0.0, lt=1.0)
    epsilon: float = Field(DEFAULT_EPSILON, ge=0.0)
    zero_division: Literal[0, 1] = 0
    batch_size: int = Field(1, ge=1)
    retrain_every: int = Field(1, ge=1)
    standardize: bool = False
    record_wall_time: bool = False
    workers: int = Field(WORKERS, ge=1)
    output_dir: str = RESULTS_DIR

    @field_validator("metrics", mode="before")
    @classmethod
    def _split_metric_string(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [name.strip() for name in value.split(",") if name.strip()]
        return value

    @field_validator("metrics")
    @classmethod
    def _metrics_parse(cls, value: List[str]) -> List[str]:
        parse_metric_set(value)
        return value

    @model_validator(mode="after")
    def _pool_paths_match_source(self) -> "ExperimentConfig":
        if self.pool_paths:
            expected = 2 if self.pool_source == "idx" else 1
            if len(self.pool_paths) != expected:
                raise ValueError(
                    f"pool_source {self.pool_source!r} takes {expected} path(s), got {len(self.pool_paths)}"
                )
            if self.pool_source == "idx" and not self.predictions_path:
                raise ValueError("idx pools need predictions_path")
        return self

    @property
    def uses_augmentation(self) -> bool:
        if not self.augmentation:
            return False
        return self.strategy == "altmas" or self.augment_baselines

    def metric_specs(self, num_classes: int) -> List[MetricSpec]:
        return parse_metric_set(self.metrics, num_classes)

    def check_against(self, pool: TestPool) -> None:
        """Budget invariants that need the pool size."""
        if self.budget_total + self.n0 > pool.num_points:
            raise ConfigError(
                f"budget_total + n0 = {self.budget_total + self.n0} exceeds pool size {pool.num_points}"
            )
        self.metric_specs(pool.num_classes)


def load_config(
    path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None
) -> ExperimentConfig:
    """Read a JSON config file (if any) and apply non-None overrides on top."""
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment config: {e}") from None


def load_pool(config: ExperimentConfig) -> TestPool:
    if not config.pool_paths:
        raise ConfigError("no pool paths configured")
    if config.pool_source == "idx":
        images, labels = config.pool_paths
        pool = load_idx_pool(images, labels, config.predictions_path, limit=config.pool_limit)
    else:
        pool = load_csv_pool(config.pool_paths[0], standardize=config.standardize)
        if config.predictions_path:
            predictions = load_predictions(config.predictions_path, pool.num_points, pool.num_classes)
            pool = TestPool(pool.features, predictions, pool.truth, pool.num_classes)
    config.check_against(pool)
    return pool
