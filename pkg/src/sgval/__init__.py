"""Noisy multi-label learning with semantic-guided virtual attributes."""

from .classifier import ClfConfig, MultiLabelClassifier, bce_loss, predict, train_classifier
from .data import Dataset, LabelMatrix, l2_normalize_rows, validate_dataset
from .detect import CleanNoisySplit, is_clean, rank_labels, split_clean_noisy
from .estimators import (
    A2SRelabeler,
    LinearMultiLabelClassifier,
    SGVALClassifier,
    VirtualAttributeLearner,
)
from .graph import AttributeGraph, batch_knn, build_graph, edge_weight, knn_images
from .metrics import auc_roc, detection_metrics, evaluate, recovery_metrics
from .relabel import RelabelConfig, a2s, aggregate_neighbor_labels, relabel_sample, smooth_labels
from .synth import SynthConfig, generate
from .val import (
    AttributeProjector,
    ValConfig,
    batch_objective,
    grad_batch_objective,
    project_attributes,
    rank_weight,
    reg_loss,
    train_val,
    val_loss,
)

__version__ = "0.1.0"
