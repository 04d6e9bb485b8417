"""Dropout MLP surrogate with Monte-Carlo dropout sampling.

The network is ``d -> hidden... -> C`` with tanh hidden units and inverted
dropout after every hidden layer. Training is plain mini-batch gradient
descent on softmax cross-entropy.
"""

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import log_softmax, softmax

from ..errors import SurrogateError

logger = logging.getLogger(__name__)

DEFAULT_HIDDEN_SIZES = (256, 256)
DEFAULT_NUM_SAMPLES = 50
NORMALIZATION_TOLERANCE = 1e-6


@dataclass(frozen=True)
class MlpConfig:
    layer_sizes: Tuple[int, ...]
    dropout_rate: float = 0.2
    learning_rate: float = 1e-3
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise SurrogateError(f"invalid layer sizes {self.layer_sizes}")
        if not 0 <= self.dropout_rate < 1:
            raise SurrogateError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.learning_rate <= 0:
            raise SurrogateError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 0 or self.batch_size < 1:
            raise SurrogateError("epochs must be >= 0 and batch_size >= 1")

    @classmethod
    def for_data(
        cls,
        input_dim: int,
        num_classes: int,
        hidden_sizes: Sequence[int] = DEFAULT_HIDDEN_SIZES,
        **kwargs,
    ) -> "MlpConfig":
        return cls(layer_sizes=(input_dim, *hidden_sizes, num_classes), **kwargs)

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def num_classes(self) -> int:
        return self.layer_sizes[-1]

    @property
    def hidden_sizes(self) -> Tuple[int, ...]:
        return self.layer_sizes[1:-1]


@dataclass(frozen=True, eq=False)
class PosteriorSamples:
    """M stochastic forward passes over the pool.

    probs: (M, N, C) class probabilities; labels: (M, N) row-wise argmax,
    ties resolved to the lowest class index.
    """

    probs: np.ndarray
    labels: np.ndarray = field(default=None)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 3:
            raise SurrogateError(f"posterior probabilities must be (M, N, C), got {probs.shape}")
        if self.labels is None:
            object.__setattr__(self, "labels", np.argmax(probs, axis=-1))
        object.__setattr__(self, "probs", probs)

    @property
    def num_samples(self) -> int:
        return self.probs.shape[0]

    @property
    def num_points(self) -> int:
        return self.probs.shape[1]

    @property
    def num_classes(self) -> int:
        return self.probs.shape[2]

    def is_normalized(self, tolerance: float = NORMALIZATION_TOLERANCE) -> bool:
        sums = self.probs.sum(axis=-1)
        return bool((self.probs >= 0).all() and np.abs(sums - 1.0).max() <= tolerance)

    @classmethod
    def from_labels(cls, labels: np.ndarray, num_classes: int) -> "PosteriorSamples":
        """One-hot posterior for a fixed (M, N) label matrix."""
        labels = np.asarray(labels, dtype=np.int64)
        return cls(np.eye(num_classes)[labels], labels)


class Mlp:
    """Feed-forward network whose parameters are plain numpy arrays."""

    def __init__(self, config: MlpConfig, weights: List[np.ndarray], biases: List[np.ndarray]):
        self.config = config
        self.weights = weights
        self.biases = biases

    @classmethod
    def initialize(cls, config: MlpConfig, rng: np.random.Generator) -> "Mlp":
        """Symmetric uniform weights in +-1/sqrt(fan_in), zero biases."""
        weights, biases = [], []
        for fan_in, fan_out in zip(config.layer_sizes[:-1], config.layer_sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(config, weights, biases)

    @property
    def num_hidden_layers(self) -> int:
        return len(self.weights) - 1

    def parameters(self) -> List[np.ndarray]:
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        return params

    def weight_hash(self) -> str:
        digest = hashlib.sha256()
        for p in self.parameters():
            digest.update(np.ascontiguousarray(p, dtype="<f8").tobytes())
        return digest.hexdigest()

    def sample_masks(
        self, rng: np.random.Generator, num_rows: int, rate: Optional[float] = None
    ) -> Optional[List[np.ndarray]]:
        """Inverted-dropout masks, one per hidden layer; None when dropout is off."""
        rate = self.config.dropout_rate if rate is None else rate
        if rate <= 0:
            return None
        keep = 1.0 - rate
        return [
            (rng.random((num_rows, size)) < keep) / keep for size in self.config.hidden_sizes
        ]

    def _forward(self, x: np.ndarray, masks: Optional[List[np.ndarray]]):
        inputs, activations = [], []
        h = x
        for layer in range(self.num_hidden_layers):
            inputs.append(h)
            a = np.tanh(h @ self.weights[layer] + self.biases[layer])
            activations.append(a)
            h = a * masks[layer] if masks is not None else a
        inputs.append(h)
        logits = h @ self.weights[-1] + self.biases[-1]
        return logits, inputs, activations

    def logits(self, x: np.ndarray, masks: Optional[List[np.ndarray]] = None) -> np.ndarray:
        return self._forward(np.asarray(x, dtype=np.float64), masks)[0]

    def predict_proba(self, x: np.ndarray, masks: Optional[List[np.ndarray]] = None) -> np.ndarray:
        return softmax(self.logits(x, masks), axis=1)

    def loss(self, x: np.ndarray, y: np.ndarray, masks: Optional[List[np.ndarray]] = None) -> float:
        log_probs = log_softmax(self.logits(x, masks), axis=1)
        return float(-np.mean(log_probs[np.arange(len(y)), y]))

    def loss_and_gradients(
        self, x: np.ndarray, y: np.ndarray, masks: Optional[List[np.ndarray]] = None
    ) -> Tuple[float, List[np.ndarray], List[np.ndarray]]:
        """Mean cross-entropy and its gradients for the given dropout masks."""
        x = np.asarray(x, dtype=np.float64)
        n = x.shape[0]
        logits, inputs, activations = self._forward(x, masks)
        log_probs = log_softmax(logits, axis=1)
        loss = float(-np.mean(log_probs[np.arange(n), y]))

        delta = np.exp(log_probs)
        delta[np.arange(n), y] -= 1.0
        delta /= n

        grad_w = [np.empty_like(w) for w in self.weights]
        grad_b = [np.empty_like(b) for b in self.biases]
        grad_w[-1] = inputs[-1].T @ delta
        grad_b[-1] = delta.sum(axis=0)
        upstream = delta @ self.weights[-1].T
        for layer in reversed(range(self.num_hidden_layers)):
            if masks is not None:
                upstream = upstream * masks[layer]
            dz = upstream * (1.0 - activations[layer] ** 2)
            grad_w[layer] = inputs[layer].T @ dz
            grad_b[layer] = dz.sum(axis=0)
            upstream = dz @ self.weights[layer].T
        return loss, grad_w, grad_b


def _check_training_data(config: MlpConfig, features: np.ndarray, labels: np.ndarray) -> None:
    if features.shape[0] == 0:
        raise SurrogateError("empty training set")
    if features.ndim != 2 or features.shape[1] != config.input_dim:
        raise SurrogateError(
            f"dimension mismatch: features have shape {features.shape}, "
            f"network expects {config.input_dim} inputs"
        )
    if labels.shape[0] != features.shape[0]:
        raise SurrogateError("features and labels differ in length")
    if labels.min() < 0 or labels.max() >= config.num_classes:
        raise SurrogateError(f"training labels outside [0, {config.num_classes})")


def train_mlp(config: MlpConfig, features: np.ndarray, labels: np.ndarray) -> Mlp:
    """Train a freshly initialized network; deterministic given ``config.seed``.

    ``epochs=0`` returns the initialized, untrained network.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    _check_training_data(config, features, labels)

    rng = np.random.default_rng(config.seed)
    mlp = Mlp.initialize(config, rng)
    n = features.shape[0]
    loss = float("nan")
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            masks = mlp.sample_masks(rng, len(batch))
            loss, grad_w, grad_b = mlp.loss_and_gradients(features[batch], labels[batch], masks)
            if not np.isfinite(loss):
                raise SurrogateError(f"non-finite training loss at epoch {epoch}")
            for w, gw in zip(mlp.weights, grad_w):
                w -= config.learning_rate * gw
            for b, gb in zip(mlp.biases, grad_b):
                b -= config.learning_rate * gb
    logger.debug(f"Trained MLP {config.layer_sizes} on {n} points, last batch loss {loss:.4f}")
    return mlp


def mc_forward(
    mlp: Mlp,
    features: np.ndarray,
    num_samples: int = DEFAULT_NUM_SAMPLES,
    seed: int = 0,
    workers: int = 1,
) -> PosteriorSamples:
    """Run ``num_samples`` dropout-masked passes; pass j owns its own mask stream."""
    if num_samples < 1:
        raise SurrogateError(f"need at least one forward pass, got {num_samples}")
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != mlp.config.input_dim:
        raise SurrogateError(f"dimension mismatch: features have shape {features.shape}")
    streams = np.random.SeedSequence(seed).spawn(num_samples)

    def one_pass(stream: np.random.SeedSequence) -> np.ndarray:
        masks = mlp.sample_masks(np.random.default_rng(stream), features.shape[0])
        return mlp.predict_proba(features, masks)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            passes = list(pool.map(one_pass, streams))
    else:
        passes = [one_pass(s) for s in streams]
    return PosteriorSamples(np.stack(passes))


def gradient_check(
    mlp: Mlp,
    features: np.ndarray,
    labels: np.ndarray,
    seed: int = 0,
    num_checks: int = 64,
    step: float = 1e-5,
) -> float:
    """Max relative deviation between analytic and central-difference gradients.

    Dropout masks are drawn once from ``seed`` and frozen for every evaluation;
    ``num_checks`` parameter entries are sampled uniformly from all layers.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    masks = mlp.sample_masks(rng, features.shape[0])
    _, grad_w, grad_b = mlp.loss_and_gradients(features, labels, masks)

    params = mlp.parameters()
    grads = []
    for gw, gb in zip(grad_w, grad_b):
        grads.extend([gw, gb])
    sizes = np.array([p.size for p in params])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    picks = rng.choice(offsets[-1], size=min(num_checks, offsets[-1]), replace=False)

    worst = 0.0
    for flat in np.sort(picks):
        which = int(np.searchsorted(offsets, flat, side="right") - 1)
        param, local = params[which], int(flat - offsets[which])
        view = param.reshape(-1)
        original = view[local]
        view[local] = original + step
        plus = mlp.loss(features, labels, masks)
        view[local] = original - step
        minus = mlp.loss(features, labels, masks)
        view[local] = original
        numeric = (plus - minus) / (2 * step)
        analytic = grads[which].reshape(-1)[local]
        deviation = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-6)
        worst = max(worst, deviation)
    return float(worst)


def save_snapshot(mlp: Mlp, path: Union[str, Path]) -> None:
    """Write ``[L, sizes...]`` as little-endian int64, then float64 W/b per layer."""
    sizes = mlp.config.layer_sizes
    header = np.array([len(sizes), *sizes], dtype="<i8")
    body = np.concatenate([p.ravel() for p in mlp.parameters()]).astype("<f8")
    Path(path).write_bytes(header.tobytes() + body.tobytes())


def load_snapshot(path: Union[str, Path], **config_overrides) -> Mlp:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise SurrogateError(f"{path}: truncated snapshot")
    count = int(np.frombuffer(raw[:8], dtype="<i8")[0])
    header_bytes = 8 * (1 + count)
    sizes = tuple(int(s) for s in np.frombuffer(raw[8:header_bytes], dtype="<i8"))
    if len(sizes) != count:
        raise SurrogateError(f"{path}: truncated snapshot header")
    config = MlpConfig(layer_sizes=sizes, **config_overrides)
    body = np.frombuffer(raw[header_bytes:], dtype="<f8")
    expected = sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))
    if body.size != expected:
        raise SurrogateError(f"{path}: expected {expected} parameters, found {body.size}")
    weights, biases, offset = [], [], 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(body[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out).copy())
        offset += fan_in * fan_out
        biases.append(body[offset:offset + fan_out].copy())
        offset += fan_out
    return Mlp(config, weights, biases)


class DropoutMlpSurrogate:
    """Surrogate that reinitializes and retrains the dropout MLP on every fit."""

    def __init__(self, config: MlpConfig, workers: int = 1):
        self.config = config
        self.workers = workers
        self.mlp: Optional[Mlp] = None

    def fit(self, features: np.ndarray, labels: np.ndarray, seed: int) -> None:
        self.mlp = train_mlp(replace(self.config, seed=seed), features, labels)

    def sample(self, features: np.ndarray, num_samples: int, seed: int) -> PosteriorSamples:
        if self.mlp is None:
            raise SurrogateError("surrogate must be fit before sampling")
        return mc_forward(self.mlp, features, num_samples, seed, workers=self.workers)
