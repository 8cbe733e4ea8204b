import math

import numpy as np
import pytest

import oracles
from sgval.classifier import (
    ClfConfig,
    MultiLabelClassifier,
    batch_bce,
    bce_from_logits,
    bce_loss,
    grad_batch_bce,
    predict,
    train_classifier,
)
from sgval.data import SOFT, Dataset, LabelMatrix
from sgval.exceptions import DimensionMismatchError, DivergenceError
from sgval.optim import Adam, cosine_lr, multistep_lr


def test_zero_model_predicts_half():
    clf = MultiLabelClassifier(np.zeros((3, 4)), np.zeros(3))
    np.testing.assert_array_equal(predict(clf, np.ones(4)), [0.5, 0.5, 0.5])


def test_bce_at_half():
    assert bce_loss([1, 0], [0.5, 0.5]) == pytest.approx(2 * math.log(2))


def test_bce_soft_target_minimum():
    # for target t the loss is minimised at p = t
    grid = np.linspace(0.01, 0.99, 99)
    losses = [bce_loss([0.3], [p]) for p in grid]
    assert grid[int(np.argmin(losses))] == pytest.approx(0.3)


def test_bce_matches_oracle(rng):
    logits = rng.normal(size=6) * 3
    y = rng.random(6)
    assert float(bce_from_logits(y, logits)) == pytest.approx(oracles.bce(y.tolist(), logits.tolist()), rel=1e-12)


def test_bce_is_finite_for_large_logits():
    assert np.isfinite(bce_from_logits([1.0, 0.0], [-800.0, 800.0]))


def test_gradient_finite_differences(rng):
    clf = MultiLabelClassifier(rng.normal(size=(4, 5)), rng.normal(size=4))
    X = rng.normal(size=(6, 5))
    Y = rng.random((6, 4))
    analytic = grad_batch_bce(clf, X, Y)
    numeric = oracles.central_difference(lambda: batch_bce(clf, X, Y), clf.params())
    assert np.max(oracles.relative_errors(analytic, numeric)) < 1e-6


def test_logits_dimension_check():
    with pytest.raises(DimensionMismatchError):
        MultiLabelClassifier(np.zeros((2, 3)), np.zeros(2)).logits(np.zeros(4))


def test_training_learns_separable_data(rng):
    X = rng.normal(size=(300, 4))
    Y = np.stack([X[:, 0] > 0, X[:, 1] > 0], axis=1).astype(float)
    clf, trace = train_classifier(Dataset(X, LabelMatrix(Y)), ClfConfig(seed=3))
    assert trace[-1] < trace[0]
    acc = ((predict(clf, X) > 0.5) == Y).mean()
    assert acc > 0.95


def test_training_on_soft_labels_is_deterministic(rng):
    X = rng.normal(size=(50, 3))
    Y = rng.random((50, 2))
    ds = Dataset(X, LabelMatrix(Y, SOFT))
    a, _ = train_classifier(ds, ClfConfig(epochs=5, milestones=(3,), seed=4))
    b, _ = train_classifier(ds, ClfConfig(epochs=5, milestones=(3,), seed=4))
    assert a.weights.tobytes() == b.weights.tobytes()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence(rng):
    ds = Dataset(rng.normal(size=(4, 2)) * 1e300, LabelMatrix([[1, 0], [0, 1], [1, 0], [0, 1]]))
    with pytest.raises(DivergenceError):
        train_classifier(ds, ClfConfig(epochs=2, milestones=(1,), learning_rate=1e300))


@pytest.mark.parametrize("kwargs", [dict(learning_rate=0), dict(milestones=(30,)), dict(decay=0),
                                    dict(batch_size=0), dict(epochs=-1)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ClfConfig(**kwargs)


def test_schedules():
    assert multistep_lr(1.0, 22, (23, 27), 0.1) == 1.0
    assert multistep_lr(1.0, 23, (23, 27), 0.1) == pytest.approx(0.1)
    assert multistep_lr(1.0, 29, (23, 27), 0.1) == pytest.approx(0.01)
    assert cosine_lr(2.0, 0, 10) == 2.0
    assert cosine_lr(2.0, 5, 10) == pytest.approx(1.0)


def test_adam_first_step_moves_by_lr():
    p = {"w": np.array([1.0, -1.0])}
    Adam(lr=0.1).step(p, {"w": np.array([3.0, -0.5])})
    np.testing.assert_allclose(p["w"], [0.9, -0.9], rtol=1e-6)
