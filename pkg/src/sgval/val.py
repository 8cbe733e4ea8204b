"""Virtual attribute learning.

Each sample is mapped to ``M`` attribute vectors living in the label
embedding space.  Training ranks every annotated positive class ahead of
every negative class, scoring a class by its best-matching attribute, with a
per-row variance penalty on the attributes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data import BINARY, Dataset, check_embeddings
from .exceptions import DataFormatError, DimensionMismatchError, DivergenceError
from .optim import Adam, cosine_lr

logger = logging.getLogger(__name__)

SOFTPLUS_BRANCH = 30.0


@dataclass
class AttributeProjector:
    """``M`` affine heads; head ``m`` maps x to ``weights[m] @ x + bias[m]``.

    weights has shape (M, Z, D) and bias (M, Z).
    """

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 3 or self.weights.shape[0] < 1:
            raise DimensionMismatchError(f"weights must be (M, Z, D), got {self.weights.shape}")
        if self.bias.shape != self.weights.shape[:2]:
            raise DimensionMismatchError(
                f"bias shape {self.bias.shape} does not match weights {self.weights.shape}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise DataFormatError("projector parameters must be finite")

    @property
    def n_attributes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.weights.shape[2]

    @property
    def embed_dim(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def init(cls, n_attributes, n_features, embed_dim, rng) -> "AttributeProjector":
        bound = 1.0 / np.sqrt(n_features)
        w = rng.uniform(-bound, bound, size=(n_attributes, embed_dim, n_features))
        return cls(w, np.zeros((n_attributes, embed_dim)))

    def copy(self) -> "AttributeProjector":
        return AttributeProjector(self.weights.copy(), self.bias.copy())

    def params(self) -> dict:
        return {"weights": self.weights, "bias": self.bias}


@dataclass(frozen=True)
class ValConfig:
    beta: float = 0.01
    learning_rate: float = 1e-4
    epochs: int = 30
    batch_size: int = 16
    seed: int = 0
    lr_schedule: str = "cosine"
    n_attributes: int = 3

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")
        if self.n_attributes < 1:
            raise ValueError("n_attributes must be >= 1")


def softplus(x):
    """log(1 + exp(x)), branching at |x| = 30 to stay finite."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    hi = x > SOFTPLUS_BRANCH
    lo = x < -SOFTPLUS_BRANCH
    mid = ~(hi | lo)
    out[hi] = x[hi] + np.log1p(np.exp(-x[hi]))
    out[lo] = np.exp(x[lo])
    out[mid] = np.log1p(np.exp(x[mid]))
    return out


def project_attributes(projector: AttributeProjector, x) -> np.ndarray:
    """Attribute matrix V (M x Z) for one feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != projector.n_features:
        raise DimensionMismatchError(
            f"expected a feature vector of length {projector.n_features}, got shape {x.shape}"
        )
    return projector.weights @ x + projector.bias


def project_batch(projector: AttributeProjector, X) -> np.ndarray:
    """Attributes for every row of X, shape (N, M, Z)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != projector.n_features:
        raise DimensionMismatchError(
            f"expected features with {projector.n_features} columns, got shape {X.shape}"
        )
    return np.einsum("mzd,nd->nmz", projector.weights, X) + projector.bias


def class_scores(V, W) -> np.ndarray:
    """Score of each class: best dot product over the attribute rows.

    Works on a single (M, Z) matrix or a stack (N, M, Z).
    """
    return (np.asarray(V) @ np.asarray(W).T).max(axis=-2)


def rank_weight(y) -> float:
    """1 / (#positives * #negatives), or 0 when either count is zero."""
    y = np.asarray(y)
    p = int(np.count_nonzero(y == 1))
    q = y.shape[-1] - p
    if p == 0 or q == 0:
        return 0.0
    return 1.0 / (p * q)


def _rank_weights(Y):
    p = (Y == 1).sum(axis=1)
    pq = p * (Y.shape[1] - p)
    out = np.zeros(Y.shape[0])
    np.divide(1.0, pq, out=out, where=pq > 0)
    return out


def _pair_mask(Y):
    pos = Y == 1
    # [b, p, n]: p positive, n negative
    return pos[:, :, None] & ~pos[:, None, :]


def val_loss(V, W, y) -> float:
    """Sum over (positive, negative) pairs of softplus(s_neg - s_pos)."""
    V = np.asarray(V, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    y = np.asarray(y)
    if V.ndim != 2 or W.ndim != 2 or V.shape[1] != W.shape[1] or y.shape != (W.shape[0],):
        raise DimensionMismatchError(
            f"incompatible shapes V={V.shape}, W={W.shape}, y={y.shape}"
        )
    s = class_scores(V, W)
    pos = y == 1
    if not pos.any() or pos.all():
        return 0.0
    diff = s[~pos][None, :] - s[pos][:, None]
    # correctly rounded, hence independent of summation order
    return math.fsum(softplus(diff).ravel().tolist())


def reg_loss(V) -> float:
    """Sum over attribute rows of the unbiased sample variance of the row."""
    V = np.asarray(V, dtype=np.float64)
    z = V.shape[-1]
    if z < 2:
        raise DimensionMismatchError("variance regulariser needs Z >= 2")
    centred = V - V.mean(axis=-1, keepdims=True)
    return float((centred * centred).sum() / (z - 1))


def _check_batch(projector, X, Y, W):
    Y = np.asarray(Y)
    if Y.ndim != 2 or Y.shape[0] != np.shape(X)[0] or Y.shape[1] != W.shape[0]:
        raise DimensionMismatchError(
            f"labels {Y.shape} incompatible with features {np.shape(X)} and embeddings {W.shape}"
        )
    if W.shape[1] != projector.embed_dim:
        raise DimensionMismatchError(
            f"embedding dim {W.shape[1]} != projector attribute dim {projector.embed_dim}"
        )
    if W.shape[1] < 2:
        raise DimensionMismatchError("variance regulariser needs Z >= 2")
    if Y.shape[0] == 0:
        raise ValueError("empty batch")
    return Y


def _forward(projector, X, Y, W, beta):
    V = project_batch(projector, X)
    S = V @ W.T                                    # (B, M, C)
    s = S.max(axis=1)
    diff = s[:, None, :] - s[:, :, None]           # [b, p, n] = s_n - s_p
    mask = _pair_mask(Y)
    omega = _rank_weights(Y)
    val = np.where(mask, softplus(diff), 0.0).sum(axis=(1, 2))
    z = V.shape[-1]
    centred = V - V.mean(axis=-1, keepdims=True)
    reg = (centred * centred).sum(axis=(1, 2)) / (z - 1)
    per_sample = omega * val + beta * reg
    return V, S, diff, mask, omega, centred, per_sample


def batch_objective(projector, X, Y, W, beta) -> float:
    """Mean over the batch of ``omega_i * val_loss + beta * reg_loss``."""
    W = np.asarray(W, dtype=np.float64)
    Y = _check_batch(projector, X, Y, W)
    return float(_forward(projector, X, Y, W, beta)[-1].mean())


def grad_batch_objective(projector, X, Y, W, beta, return_loss=False):
    """Analytic gradient of :func:`batch_objective` w.r.t. weights and bias.

    Where several attributes attain a class score, the lowest attribute index
    receives the whole subgradient.
    """
    W = np.asarray(W, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    Y = _check_batch(projector, X, Y, W)
    V, S, diff, mask, omega, centred, per_sample = _forward(projector, X, Y, W, beta)
    b, m, _ = V.shape
    z = V.shape[-1]

    sig = np.where(mask, expit(diff), 0.0)
    g_s = sig.sum(axis=1) - sig.sum(axis=2)        # d/ds_n minus d/ds_p
    g_s *= (omega / b)[:, None]

    owner = S.argmax(axis=1)                       # first maximiser wins ties
    g_S = np.where(owner[:, None, :] == np.arange(m)[None, :, None], g_s[:, None, :], 0.0)
    g_V = g_S @ W + (2.0 * beta / (b * (z - 1))) * centred

    grads = {
        "weights": np.einsum("bmz,bd->mzd", g_V, X),
        "bias": g_V.sum(axis=0),
    }
    if return_loss:
        return grads, float(per_sample.mean())
    return grads


def train_val(dataset: Dataset, W, config: ValConfig = ValConfig()):
    """Fit an :class:`AttributeProjector` with Adam over shuffled mini-batches.

    Returns ``(projector, trace)`` where ``trace[e]`` is the sample-weighted
    mean batch objective seen during epoch ``e``.
    """
    if dataset.labels.kind != BINARY:
        raise DataFormatError("attribute learning needs binary labels")
    W = check_embeddings(W, dataset.n_classes)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    projector = AttributeProjector.init(
        config.n_attributes, dataset.n_features, W.shape[1], rng
    )
    X = dataset.features
    Y = dataset.labels.values
    n = dataset.n_samples
    opt = Adam(lr=config.learning_rate)
    params = projector.params()
    trace = []
    for epoch in range(config.epochs):
        if config.lr_schedule == "cosine":
            lr = cosine_lr(config.learning_rate, epoch, config.epochs)
        else:
            lr = config.learning_rate
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            grads, loss = grad_batch_objective(
                projector, X[idx], Y[idx], W, config.beta, return_loss=True
            )
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite attribute objective at epoch {epoch}, batch starting {start}"
                )
            total += loss * len(idx)
            opt.step(params, grads, lr=lr)
        trace.append(total / n)
        logger.debug("val epoch %d lr=%.3g objective=%.6f", epoch, lr, trace[-1])
    return projector, np.array(trace)
