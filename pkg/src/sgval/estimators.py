"""scikit-learn compatible wrappers around the functional core.

``VirtualAttributeLearner`` is a transformer (features -> flattened attribute
vectors), ``A2SRelabeler`` turns noisy binary labels into soft labels, and
``LinearMultiLabelClassifier`` is a soft-target multi-label classifier.
``SGVALClassifier`` chains the relabeler and the classifier.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin, clone
from sklearn.utils.validation import check_array, check_is_fitted

from .classifier import ClfConfig, predict, train_classifier
from .data import BINARY, Dataset, LabelMatrix, check_embeddings
from .detect import CleanNoisySplit, clean_flags, rank_order
from .exceptions import DataFormatError
from .metrics import evaluate_scores
from .relabel import RelabelConfig, a2s
from .val import ValConfig, class_scores, project_batch, train_val


def _check_xy(X, Y, binary=False):
    X = check_array(X, dtype=np.float64, ensure_min_samples=1)
    Y = check_array(Y, dtype=np.float64, ensure_min_samples=1)
    if Y.shape[0] != X.shape[0]:
        raise DataFormatError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    labels = LabelMatrix(Y, BINARY) if binary else LabelMatrix.infer(Y)
    return Dataset(X, labels)


class VirtualAttributeLearner(TransformerMixin, BaseEstimator):
    """Learn ``n_attributes`` affine attribute heads that rank each sample's
    positive label embeddings above its negative ones.

    Parameters
    ----------
    embeddings : array of shape (n_classes, embed_dim)
        Label word embeddings; rows are L2-normalised during ``fit``.
    n_attributes : int, default=3
    beta : float, default=0.01
        Weight of the per-attribute variance penalty.
    learning_rate, epochs, batch_size, lr_schedule
        Adam settings; the schedule is ``"cosine"`` or ``"constant"``.
    random_state : int, default=0

    Attributes
    ----------
    projector_ : AttributeProjector
    embeddings_ : ndarray, normalised embeddings
    loss_curve_ : ndarray, mean objective per epoch
    """

    def __init__(self, embeddings=None, n_attributes=3, beta=0.01, learning_rate=1e-4,
                 epochs=30, batch_size=16, lr_schedule="cosine", random_state=0):
        self.embeddings = embeddings
        self.n_attributes = n_attributes
        self.beta = beta
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr_schedule = lr_schedule
        self.random_state = random_state

    def _config(self):
        return ValConfig(beta=self.beta, learning_rate=self.learning_rate, epochs=self.epochs,
                         batch_size=self.batch_size, seed=self.random_state,
                         lr_schedule=self.lr_schedule, n_attributes=self.n_attributes)

    def fit(self, X, Y):
        if self.embeddings is None:
            raise ValueError("embeddings must be provided")
        ds = _check_xy(X, Y, binary=True)
        self.embeddings_ = check_embeddings(self.embeddings, ds.n_classes)
        self.projector_, self.loss_curve_ = train_val(ds, self.embeddings_, self._config())
        self.n_features_in_ = ds.n_features
        return self

    def attributes(self, X):
        """Attribute stack of shape (n_samples, n_attributes, embed_dim)."""
        check_is_fitted(self, "projector_")
        return project_batch(self.projector_, check_array(X, dtype=np.float64))

    def transform(self, X):
        V = self.attributes(X)
        return V.reshape(V.shape[0], -1)

    def decision_function(self, X):
        """Per-class semantic score: best attribute dot product with each embedding."""
        return class_scores(self.attributes(X), self.embeddings_)

    def rank_labels(self, X):
        return rank_order(self.decision_function(X))

    def clean_mask(self, X, Y):
        """True where the top-ranked classes match the annotated positives."""
        return clean_flags(self.decision_function(X), check_array(Y))


class A2SRelabeler(BaseEstimator):
    """Flag noisy samples and replace their labels by a mix of the original
    labels and those of their attribute-graph neighbours.

    ``learner`` is cloned and fitted on the noisy data unless
    ``prefit=True``, in which case it is used as is.
    """

    def __init__(self, learner=None, lam=0.7, k=50, prefit=False, n_jobs=None):
        self.learner = learner
        self.lam = lam
        self.k = k
        self.prefit = prefit
        self.n_jobs = n_jobs

    def fit(self, X, Y):
        if self.learner is None:
            raise ValueError("learner must be a VirtualAttributeLearner")
        ds = _check_xy(X, Y, binary=True)
        if self.prefit:
            self.learner_ = self.learner
            check_is_fitted(self.learner_, "projector_")
        else:
            self.learner_ = clone(self.learner).fit(ds.features, ds.labels.values)
        result = a2s(ds, self.learner_.projector_, self.learner_.embeddings_,
                     RelabelConfig(self.lam, self.k), n_jobs=self.n_jobs)
        self.labels_ = np.array(result.dataset.labels.values)
        self.split_: CleanNoisySplit = result.split
        self.clean_mask_ = result.split.clean_mask()
        self.neighbors_ = result.neighbors
        return self

    def fit_relabel(self, X, Y):
        return self.fit(X, Y).labels_


class LinearMultiLabelClassifier(ClassifierMixin, BaseEstimator):
    """Per-class logistic model trained with BCE on binary or soft targets."""

    def __init__(self, learning_rate=0.05, epochs=30, batch_size=16, milestones=(23, 27),
                 decay=0.1, random_state=0):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.milestones = milestones
        self.decay = decay
        self.random_state = random_state

    def fit(self, X, Y):
        ds = _check_xy(X, Y)
        cfg = ClfConfig(learning_rate=self.learning_rate, epochs=self.epochs,
                        batch_size=self.batch_size, milestones=tuple(self.milestones),
                        decay=self.decay, seed=self.random_state)
        self.model_, self.loss_curve_ = train_classifier(ds, cfg)
        self.n_features_in_ = ds.n_features
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return self.model_.logits(check_array(X, dtype=np.float64))

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        return predict(self.model_, check_array(X, dtype=np.float64))

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def score(self, X, Y, sample_weight=None):
        """Mean per-class AUC-ROC over classes with both label values."""
        return evaluate_scores(self.predict_proba(X), check_array(Y)).mean_auc


class SGVALClassifier(ClassifierMixin, BaseEstimator):
    """Relabel the training set with ``relabeler`` and fit ``classifier`` on
    the resulting soft labels."""

    def __init__(self, relabeler=None, classifier=None):
        self.relabeler = relabeler
        self.classifier = classifier

    def fit(self, X, Y):
        if self.relabeler is None:
            raise ValueError("relabeler must be an A2SRelabeler")
        clf = self.classifier if self.classifier is not None else LinearMultiLabelClassifier()
        self.relabeler_ = clone(self.relabeler)
        soft = self.relabeler_.fit_relabel(X, Y)
        self.classifier_ = clone(clf).fit(X, soft)
        self.n_features_in_ = self.classifier_.n_features_in_
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "classifier_")
        return self.classifier_.predict_proba(X)

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def score(self, X, Y, sample_weight=None):
        return evaluate_scores(self.predict_proba(X), check_array(Y)).mean_auc
