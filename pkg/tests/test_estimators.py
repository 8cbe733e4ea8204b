import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sgval import (
    A2SRelabeler,
    LinearMultiLabelClassifier,
    SGVALClassifier,
    VirtualAttributeLearner,
)
from sgval.relabel import RelabelConfig, a2s
from sgval.val import ValConfig, train_val


@pytest.fixture
def xy(small_synth):
    return small_synth.noisy.features, small_synth.noisy.labels.values, small_synth.embeddings


def test_get_params_and_clone(xy):
    _, _, W = xy
    est = VirtualAttributeLearner(embeddings=W, n_attributes=2, beta=0.5)
    params = est.get_params()
    assert params["n_attributes"] == 2 and params["beta"] == 0.5
    twin = clone(est)
    assert twin is not est and twin.get_params()["beta"] == 0.5
    rel = A2SRelabeler(learner=est, lam=0.4, k=7)
    assert rel.get_params()["learner__n_attributes"] == 2
    rel.set_params(learner__beta=0.2)
    assert rel.learner.beta == 0.2


def test_learner_matches_functional_core(xy, small_synth):
    X, Y, W = xy
    est = VirtualAttributeLearner(embeddings=W, epochs=2, random_state=4).fit(X, Y)
    proj, trace = train_val(small_synth.noisy, W, ValConfig(epochs=2, seed=4))
    np.testing.assert_array_equal(est.projector_.weights, proj.weights)
    np.testing.assert_array_equal(est.loss_curve_, trace)
    assert est.transform(X).shape == (X.shape[0], 3 * W.shape[1])
    assert est.decision_function(X).shape == Y.shape
    assert est.clean_mask(X, Y).dtype == bool


def test_unfitted_learner():
    with pytest.raises(NotFittedError):
        VirtualAttributeLearner(embeddings=np.eye(2)).transform(np.zeros((1, 2)))


def test_relabeler_matches_functional_core(xy, small_synth):
    X, Y, W = xy
    learner = VirtualAttributeLearner(embeddings=W, epochs=2).fit(X, Y)
    rel = A2SRelabeler(learner=learner, lam=0.6, k=5, prefit=True).fit(X, Y)
    ref = a2s(small_synth.noisy, learner.projector_, learner.embeddings_, RelabelConfig(0.6, 5))
    np.testing.assert_array_equal(rel.labels_, ref.dataset.labels.values)
    np.testing.assert_array_equal(rel.clean_mask_, ref.split.clean_mask())


def test_relabeler_clones_unless_prefit(xy):
    X, Y, W = xy
    learner = VirtualAttributeLearner(embeddings=W, epochs=1)
    rel = A2SRelabeler(learner=learner, k=5).fit(X, Y)
    assert not hasattr(learner, "projector_")
    assert hasattr(rel.learner_, "projector_")


def test_classifier_and_chain(xy, small_synth):
    X, Y, W = xy
    clf = LinearMultiLabelClassifier(epochs=4, milestones=(2,)).fit(X, Y)
    proba = clf.predict_proba(small_synth.test.features)
    assert proba.shape == small_synth.test.labels.values.shape
    assert set(np.unique(clf.predict(X))) <= {0, 1}
    assert 0.5 < clf.score(small_synth.test.features, small_synth.test.labels.values) <= 1.0

    model = SGVALClassifier(
        relabeler=A2SRelabeler(learner=VirtualAttributeLearner(embeddings=W, epochs=2), k=5),
        classifier=LinearMultiLabelClassifier(epochs=4, milestones=(2,)),
    ).fit(X, Y)
    assert model.predict_proba(X).shape == Y.shape
    assert 0.0 <= model.score(small_synth.test.features, small_synth.test.labels.values) <= 1.0


def test_row_mismatch(xy):
    X, Y, W = xy
    with pytest.raises(ValueError):
        LinearMultiLabelClassifier().fit(X[:-1], Y)
