"""AUC-ROC evaluation and noise-detection / label-recovery quality."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .classifier import MultiLabelClassifier, predict
from .data import Dataset
from .detect import CleanNoisySplit
from .exceptions import DataFormatError, DimensionMismatchError


def auc_roc(scores, labels) -> float:
    """Mann-Whitney AUC: share of (positive, negative) pairs ranked correctly,
    ties counted as one half.  Uses mid-ranks, so O(N log N).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DimensionMismatchError("scores and labels must be 1-D of equal length")
    pos = labels == 1
    p = int(pos.sum())
    q = labels.size - p
    if p == 0 or q == 0:
        raise ValueError("AUC is undefined without both positive and negative labels")
    # mid-ranks are multiples of 1/2, so doubling keeps the U statistic integral
    twice_ranks = (2 * rankdata(scores, method="average")).astype(np.int64)
    twice_u = int(twice_ranks[pos].sum()) - p * (p + 1)
    return twice_u / (2 * p * q)


@dataclass
class EvalReport:
    class_names: tuple
    per_class_auc: list            # float or None per class
    mean_auc: float
    skipped_classes: list = field(default_factory=list)   # (index, reason)


def evaluate_scores(scores, Y, class_names=()) -> EvalReport:
    scores = np.asarray(scores, dtype=np.float64)
    Y = np.asarray(Y)
    if not np.all((Y == 0) | (Y == 1)):
        raise DataFormatError("evaluation needs binary test labels")
    c = Y.shape[1]
    names = tuple(class_names) or tuple(f"class_{j:02d}" for j in range(c))
    per_class, skipped = [], []
    for j in range(c):
        n_pos = int(Y[:, j].sum())
        if n_pos == 0:
            per_class.append(None)
            skipped.append((j, "no positive samples"))
        elif n_pos == Y.shape[0]:
            per_class.append(None)
            skipped.append((j, "no negative samples"))
        else:
            per_class.append(auc_roc(scores[:, j], Y[:, j]))
    defined = [a for a in per_class if a is not None]
    if not defined:
        raise ValueError("no evaluable class: every class lacks positives or negatives")
    return EvalReport(names, per_class, float(np.mean(defined)), skipped)


def evaluate(classifier: MultiLabelClassifier, test: Dataset) -> EvalReport:
    return evaluate_scores(predict(classifier, test.features), test.labels.values, test.class_names)


@dataclass
class DetectionScores:
    precision: float
    recall: float
    f1: float


def detection_metrics(split: CleanNoisySplit, ground_truth_noisy) -> DetectionScores:
    """Precision/recall/F1 with "noisy" as the positive class.

    Precision with no flagged samples is taken as 0.
    """
    predicted = set(np.asarray(split.noisy_indices).tolist())
    truth = set(np.asarray(list(ground_truth_noisy), dtype=np.int64).tolist())
    tp = len(predicted & truth)
    precision = tp / len(predicted) if predicted else 0.0
    recall = tp / len(truth) if truth else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return DetectionScores(precision, recall, f1)


@dataclass
class RecoveryReport:
    detection_precision: float
    detection_recall: float
    detection_f1: float
    l1_before: float
    l1_after: float

    @property
    def improvement(self) -> float:
        if self.l1_before == 0:
            return 0.0
        return (self.l1_before - self.l1_after) / self.l1_before


def mean_l1(a, b) -> float:
    return float(np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)).sum(axis=1).mean())


def recovery_metrics(noisy_labels, relabeled, true_labels, split=None, corrupted=None) -> RecoveryReport:
    """Mean per-sample L1 distance to the true labels before and after relabeling.

    Detection scores are filled in when both ``split`` and ``corrupted`` are given.
    """
    arrays = [x.values if hasattr(x, "values") else np.asarray(x, dtype=np.float64)
              for x in (noisy_labels, relabeled, true_labels)]
    if not (arrays[0].shape == arrays[1].shape == arrays[2].shape):
        raise DimensionMismatchError(
            f"misaligned label matrices {[a.shape for a in arrays]}"
        )
    det = DetectionScores(float("nan"), float("nan"), float("nan"))
    if split is not None and corrupted is not None:
        det = detection_metrics(split, corrupted)
    return RecoveryReport(
        det.precision, det.recall, det.f1,
        mean_l1(arrays[0], arrays[2]), mean_l1(arrays[1], arrays[2]),
    )
