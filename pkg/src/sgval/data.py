"""Dataset containers and validation shared by every stage."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import (
    DataFormatError,
    DimensionMismatchError,
    LabelRangeError,
    NonFiniteError,
    ZeroRowError,
)

BINARY = "binary"
SOFT = "soft"


def _frozen(a, dtype=np.float64):
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def infer_label_kind(values) -> str:
    values = np.asarray(values)
    return BINARY if np.all((values == 0) | (values == 1)) else SOFT


@dataclass(frozen=True)
class LabelMatrix:
    """N x C multi-label targets.

    ``kind`` is ``"binary"`` for raw annotations and ``"soft"`` once labels
    have been mixed by relabeling or smoothing.
    """

    values: np.ndarray
    kind: str = BINARY

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2:
            raise DimensionMismatchError(f"labels must be 2-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteError("labels contain non-finite values")
        if self.kind not in (BINARY, SOFT):
            raise DataFormatError(f"unknown label kind {self.kind!r}")
        if self.kind == BINARY and not np.all((values == 0) | (values == 1)):
            raise LabelRangeError("binary labels must be 0 or 1")
        if np.any(values < 0) or np.any(values > 1):
            raise LabelRangeError("labels must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    @classmethod
    def infer(cls, values) -> "LabelMatrix":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 2 and np.all(np.isfinite(values)):
            return cls(values, infer_label_kind(values))
        return cls(values, SOFT)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: LabelMatrix
    class_names: tuple = field(default=())

    def __post_init__(self):
        features = _frozen(self.features)
        if features.ndim != 2:
            raise DimensionMismatchError(f"features must be 2-D, got shape {features.shape}")
        n, d = features.shape
        if n < 1 or d < 1:
            raise DimensionMismatchError("need at least one sample and one feature")
        if not np.all(np.isfinite(features)):
            raise NonFiniteError("features contain non-finite values")
        labels = self.labels
        if not isinstance(labels, LabelMatrix):
            labels = LabelMatrix.infer(labels)
        if labels.shape[0] != n:
            raise DimensionMismatchError(
                f"features have {n} rows but labels have {labels.shape[0]}"
            )
        c = labels.shape[1]
        if c < 2:
            raise DimensionMismatchError(f"need at least 2 classes, got {c}")
        names = tuple(self.class_names) or tuple(f"class_{j:02d}" for j in range(c))
        if len(names) != c:
            raise DimensionMismatchError(f"{len(names)} class names for {c} label columns")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", names)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return self.labels.shape[1]

    def with_labels(self, labels: LabelMatrix) -> "Dataset":
        return Dataset(self.features, labels, self.class_names)


def l2_normalize_rows(matrix) -> np.ndarray:
    """Scale each row of ``matrix`` to unit Euclidean norm."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D matrix, got shape {matrix.shape}")
    norms = np.linalg.norm(matrix, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ZeroRowError(f"row {zero[0]} has zero norm")
    return matrix / norms[:, None]


def check_embeddings(embeddings, n_classes: int | None = None) -> np.ndarray:
    """Validate a C x Z embedding matrix and return it L2-normalised."""
    w = np.asarray(embeddings, dtype=np.float64)
    if w.ndim != 2:
        raise DimensionMismatchError(f"embeddings must be 2-D, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise NonFiniteError("embeddings contain non-finite values")
    if w.shape[1] < 2:
        raise DimensionMismatchError(f"embedding dimension must be >= 2, got {w.shape[1]}")
    if n_classes is not None and w.shape[0] != n_classes:
        raise DimensionMismatchError(
            f"{w.shape[0]} embedding rows for {n_classes} classes"
        )
    out = l2_normalize_rows(w)
    out.setflags(write=False)
    return out


def validate_dataset(
    features,
    labels,
    embeddings=None,
    class_names: Sequence[str] = (),
) -> Dataset:
    """Build a :class:`Dataset`, raising on the first violated invariant.

    When ``embeddings`` is given its row count must match the label columns;
    the normalised embeddings are not stored on the dataset, call
    :func:`check_embeddings` to obtain them.
    """
    features = np.asarray(features, dtype=np.float64)
    if not isinstance(labels, LabelMatrix):
        labels = np.asarray(labels, dtype=np.float64)
    label_shape = labels.shape
    if features.ndim == 2 and len(label_shape) == 2 and features.shape[0] != label_shape[0]:
        raise DimensionMismatchError(
            f"features have {features.shape[0]} rows but labels have {label_shape[0]}"
        )
    if features.size and not np.all(np.isfinite(features)):
        raise NonFiniteError("features contain non-finite values")
    if not isinstance(labels, LabelMatrix):
        labels = LabelMatrix.infer(labels)
    ds = Dataset(features, labels, tuple(class_names))
    if embeddings is not None:
        check_embeddings(embeddings, ds.n_classes)
    return ds
