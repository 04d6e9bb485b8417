"""Synthetic pools with a model-under-test of known accuracy."""

import logging
from typing import Literal

import numpy as np
from sklearn.datasets import make_blobs

from ..data.pool import TestPool
from ..errors import ConfigError

logger = logging.getLogger(__name__)

ErrorMode = Literal["random", "region"]


def blob_centers(num_classes: int, dim: int, separation: float) -> np.ndarray:
    """Class centers spaced evenly on a circle of radius ``separation``."""
    centers = np.zeros((num_classes, dim))
    if dim == 1:
        centers[:, 0] = separation * np.arange(num_classes)
        return centers
    angles = 2 * np.pi * np.arange(num_classes) / num_classes
    centers[:, 0] = separation * np.cos(angles)
    centers[:, 1] = separation * np.sin(angles)
    return centers


def make_blobs_pool(
    n: int = 2000,
    num_classes: int = 2,
    dim: int = 2,
    mut_accuracy: float = 0.7,
    error_mode: ErrorMode = "region",
    separation: float = 3.0,
    seed: int = 0,
) -> TestPool:
    """Gaussian blobs whose model-under-test is wrong on exactly round((1 - acc) * n) points.

    ``random`` scatters the errors uniformly. ``region`` puts them on the
    points furthest along a random direction, so errors cluster in feature
    space the way a real model's do.
    """
    if num_classes < 2:
        raise ConfigError("synthetic pools need at least 2 classes")
    if not 0.0 <= mut_accuracy <= 1.0:
        raise ConfigError(f"mut_accuracy must be in [0, 1], got {mut_accuracy}")
    if error_mode not in ("random", "region"):
        raise ConfigError(f"unknown error mode {error_mode!r}")

    rng = np.random.default_rng(seed)
    features, truth = make_blobs(
        n_samples=n,
        centers=blob_centers(num_classes, dim, separation),
        cluster_std=1.0,
        random_state=seed,
    )
    num_errors = int(round((1.0 - mut_accuracy) * n))
    if error_mode == "random":
        wrong = rng.choice(n, size=num_errors, replace=False)
    else:
        direction = rng.normal(size=dim)
        direction /= np.linalg.norm(direction)
        wrong = np.argsort(-(features @ direction), kind="stable")[:num_errors]

    predictions = truth.copy()
    predictions[wrong] = (truth[wrong] + rng.integers(1, num_classes, size=num_errors)) % num_classes
    pool = TestPool(features, predictions, truth, num_classes)
    logger.info(
        f"Synthetic blob pool: N={n}, C={num_classes}, d={dim}, "
        f"model-under-test accuracy {pool.mut_accuracy:.4f} ({error_mode} errors)"
    )
    return pool
