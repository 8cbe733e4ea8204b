"""Clean/noisy sample detection from learned attributes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, check_embeddings
from .val import AttributeProjector, class_scores, project_batch


@dataclass(frozen=True)
class CleanNoisySplit:
    clean_indices: np.ndarray
    noisy_indices: np.ndarray

    @property
    def n_clean(self) -> int:
        return len(self.clean_indices)

    @property
    def n_noisy(self) -> int:
        return len(self.noisy_indices)

    @property
    def n_samples(self) -> int:
        return self.n_clean + self.n_noisy

    def clean_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_samples, dtype=bool)
        mask[self.clean_indices] = True
        return mask

    @classmethod
    def from_mask(cls, clean_mask) -> "CleanNoisySplit":
        clean_mask = np.asarray(clean_mask, dtype=bool)
        return cls(np.flatnonzero(clean_mask), np.flatnonzero(~clean_mask))


def rank_order(scores) -> np.ndarray:
    """Class indices by descending score, lower index first on ties.

    Accepts a single score vector or an (N, C) matrix.
    """
    scores = np.asarray(scores, dtype=np.float64)
    # stable sort of the negated scores keeps equal entries in index order
    return np.argsort(-scores, axis=-1, kind="stable")


def rank_labels(V, W) -> np.ndarray:
    return rank_order(class_scores(V, W))


def _clean_from_order(order, y) -> bool:
    pos = np.flatnonzero(np.asarray(y) == 1)
    if pos.size == 0:
        return True
    return set(order[: pos.size].tolist()) == set(pos.tolist())


def is_clean(V, W, y) -> bool:
    """True when the top-P ranked classes are exactly the P annotated positives."""
    return _clean_from_order(rank_labels(V, W), y)


def clean_flags(scores, Y) -> np.ndarray:
    """Vectorised :func:`is_clean` given precomputed (N, C) class scores."""
    scores = np.asarray(scores, dtype=np.float64)
    Y = np.asarray(Y)
    order = rank_order(scores)
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(order.shape[1])[None, :], axis=1)
    pos = Y == 1
    p = pos.sum(axis=1)
    # every positive must sit among the first P ranks; P positives then fill them
    return np.all(~pos | (ranks < p[:, None]), axis=1)


def split_clean_noisy(dataset: Dataset, projector: AttributeProjector, W) -> CleanNoisySplit:
    W = check_embeddings(W, dataset.n_classes)
    V = project_batch(projector, dataset.features)
    flags = clean_flags(class_scores(V, W), dataset.labels.values)
    return CleanNoisySplit.from_mask(flags)


def ranked_classes(dataset: Dataset, projector: AttributeProjector, W) -> np.ndarray:
    """(N, C) class ranking per sample, used for the detect report."""
    W = check_embeddings(W, dataset.n_classes)
    return rank_order(class_scores(project_batch(projector, dataset.features), W))
