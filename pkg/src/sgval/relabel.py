"""Attribute-to-sample relabeling and the label-smoothing baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import SOFT, Dataset, LabelMatrix, check_embeddings
from .detect import CleanNoisySplit, clean_flags
from .exceptions import DataFormatError
from .graph import AttributeGraph, batch_knn
from .val import AttributeProjector, class_scores, project_batch


@dataclass(frozen=True)
class RelabelConfig:
    lam: float = 0.7
    k: int = 50

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


def aggregate_neighbor_labels(neighbor_labels) -> np.ndarray:
    """Clamp the summed neighbour label vectors at one."""
    neighbor_labels = np.asarray(neighbor_labels, dtype=np.float64)
    if neighbor_labels.ndim != 2 or neighbor_labels.shape[0] == 0:
        raise ValueError("cannot aggregate an empty neighbour set")
    return np.minimum(1.0, neighbor_labels.sum(axis=0))


def relabel_sample(y, aggregate, lam) -> np.ndarray:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    return lam * np.asarray(y, dtype=np.float64) + (1.0 - lam) * np.asarray(aggregate, dtype=np.float64)


@dataclass(frozen=True)
class A2SResult:
    dataset: Dataset
    split: CleanNoisySplit
    neighbors: dict          # noisy sample index -> neighbour image indices


def a2s(
    dataset: Dataset,
    projector: AttributeProjector,
    W,
    config: RelabelConfig = RelabelConfig(),
    n_jobs=None,
) -> A2SResult:
    """Detect noisy samples and relabel them from their graph neighbours.

    Clean samples keep their labels bit for bit; the neighbour labels mixed
    into a noisy sample are the original annotations.
    """
    W = check_embeddings(W, dataset.n_classes)
    V = project_batch(projector, dataset.features)
    Y = dataset.labels.values
    split = CleanNoisySplit.from_mask(clean_flags(class_scores(V, W), Y))
    out = np.array(Y, dtype=np.float64)
    neighbors = {}
    if split.n_noisy:
        graph = AttributeGraph.from_attributes(V)
        all_nbrs = batch_knn(graph, config.k, n_jobs=n_jobs)
        for i in split.noisy_indices:
            nbrs = all_nbrs[i]
            neighbors[int(i)] = nbrs
            agg = aggregate_neighbor_labels(Y[nbrs])
            out[i] = relabel_sample(Y[i], agg, config.lam)
    return A2SResult(dataset.with_labels(LabelMatrix(out, SOFT)), split, neighbors)


def smooth_labels(labels, epsilon) -> LabelMatrix:
    """Positives become 1 - epsilon, negatives epsilon."""
    if not 0.0 <= epsilon < 0.5:
        raise ValueError(f"epsilon must be in [0, 0.5), got {epsilon}")
    values = labels.values if isinstance(labels, LabelMatrix) else np.asarray(labels, dtype=np.float64)
    if not np.all((values == 0) | (values == 1)):
        raise DataFormatError("label smoothing expects binary labels")
    return LabelMatrix(np.where(values == 1, 1.0 - epsilon, epsilon), SOFT)
