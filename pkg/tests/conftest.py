"""Test configuration and fixtures."""

import os
import sys

import numpy as np
import pytest

# Add the src directory to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from altmas.data.pool import TestPool
from altmas.surrogate.mlp import PosteriorSamples


def build_random_pool(n=12, num_classes=3, dim=2, seed=0):
    rng = np.random.default_rng(seed)
    truth = rng.integers(0, num_classes, size=n)
    truth[:num_classes] = np.arange(num_classes)
    predictions = rng.integers(0, num_classes, size=n)
    return TestPool(rng.normal(size=(n, dim)), predictions, truth, num_classes)


def build_random_posterior(num_samples, n, num_classes, seed=0, concentration=1.0):
    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.full(num_classes, concentration), size=(num_samples, n))
    return PosteriorSamples(probs)


class TruthEchoSurrogate:
    """Surrogate double whose every posterior pass is the ground truth."""

    def __init__(self, pool):
        self.pool = pool
        self.fit_calls = 0

    def fit(self, features, labels, seed):
        self.fit_calls += 1

    def sample(self, features, num_samples, seed):
        labels = np.tile(self.pool.truth, (num_samples, 1))
        return PosteriorSamples.from_labels(labels, self.pool.num_classes)


@pytest.fixture
def random_pool():
    """Factory for small random pools."""
    return build_random_pool


@pytest.fixture
def random_posterior():
    """Factory for random Dirichlet posteriors of shape (M, N, C)."""
    return build_random_posterior


@pytest.fixture
def truth_echo_factory():
    """Surrogate factory for the experiment loop."""
    return lambda pool, config: TruthEchoSurrogate(pool)


@pytest.fixture
def small_pool():
    return build_random_pool(n=12, num_classes=3, seed=7)
