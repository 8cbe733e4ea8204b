"""Linear multi-label classifier trained with binary cross-entropy on soft targets."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from .data import Dataset
from .exceptions import DataFormatError, DimensionMismatchError, DivergenceError
from .optim import Adam, multistep_lr

logger = logging.getLogger(__name__)


@dataclass
class MultiLabelClassifier:
    weights: np.ndarray     # (C, D)
    bias: np.ndarray        # (C,)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise DimensionMismatchError(
                f"weights {self.weights.shape} and bias {self.bias.shape} are inconsistent"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise DataFormatError("classifier parameters must be finite")

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def init(cls, n_classes, n_features, rng) -> "MultiLabelClassifier":
        bound = 1.0 / np.sqrt(n_features)
        return cls(rng.uniform(-bound, bound, size=(n_classes, n_features)), np.zeros(n_classes))

    def params(self) -> dict:
        return {"weights": self.weights, "bias": self.bias}

    def logits(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.n_features:
            raise DimensionMismatchError(
                f"expected {self.n_features} features, got {X.shape[-1]}"
            )
        return X @ self.weights.T + self.bias


@dataclass(frozen=True)
class ClfConfig:
    learning_rate: float = 0.05
    epochs: int = 30
    batch_size: int = 16
    milestones: tuple = (23, 27)
    decay: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError("decay must be in (0, 1]")
        if self.epochs and any(m >= self.epochs for m in self.milestones):
            raise ValueError(f"milestones {self.milestones} must be < epochs={self.epochs}")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


def predict(classifier: MultiLabelClassifier, x) -> np.ndarray:
    """Per-class probabilities; works on one vector or a batch of rows."""
    return expit(classifier.logits(x))


def bce_from_logits(y_tilde, logits) -> np.ndarray:
    """Cross-entropy summed over classes, evaluated in logit space."""
    y_tilde = np.asarray(y_tilde, dtype=np.float64)
    logits = np.asarray(logits, dtype=np.float64)
    return -(y_tilde * log_expit(logits) + (1.0 - y_tilde) * log_expit(-logits)).sum(axis=-1)


def bce_loss(y_tilde, y_hat) -> float:
    """-sum_c [y log p + (1 - y) log(1 - p)] for probabilities ``y_hat``."""
    y_hat = np.asarray(y_hat, dtype=np.float64)
    return float(bce_from_logits(y_tilde, np.log(y_hat) - np.log1p(-y_hat)))


def batch_bce(classifier, X, Y) -> float:
    return float(bce_from_logits(Y, classifier.logits(X)).mean())


def grad_batch_bce(classifier, X, Y, return_loss=False):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    logits = classifier.logits(X)
    g = (expit(logits) - Y) / X.shape[0]
    grads = {"weights": g.T @ X, "bias": g.sum(axis=0)}
    if return_loss:
        return grads, float(bce_from_logits(Y, logits).mean())
    return grads


def train_classifier(dataset: Dataset, config: ClfConfig = ClfConfig()):
    """Adam with milestone step decay; returns ``(classifier, trace)``."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    clf = MultiLabelClassifier.init(dataset.n_classes, dataset.n_features, rng)
    X = dataset.features
    Y = dataset.labels.values
    n = dataset.n_samples
    opt = Adam(lr=config.learning_rate)
    params = clf.params()
    trace = []
    for epoch in range(config.epochs):
        lr = multistep_lr(config.learning_rate, epoch, config.milestones, config.decay)
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            grads, loss = grad_batch_bce(clf, X[idx], Y[idx], return_loss=True)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite classifier loss at epoch {epoch}, batch starting {start}"
                )
            total += loss * len(idx)
            opt.step(params, grads, lr=lr)
        trace.append(total / n)
        logger.debug("clf epoch %d lr=%.3g bce=%.6f", epoch, lr, trace[-1])
    return clf, np.array(trace)
