import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sgval.data import BINARY, SOFT, LabelMatrix
from sgval.exceptions import DataFormatError
from sgval.relabel import (
    RelabelConfig,
    a2s,
    aggregate_neighbor_labels,
    relabel_sample,
    smooth_labels,
)
from sgval.val import AttributeProjector


def test_aggregate_clamps_at_one():
    agg = aggregate_neighbor_labels([[1, 0, 0], [1, 1, 0], [0, 1, 0]])
    np.testing.assert_array_equal(agg, [1, 1, 0])


def test_aggregate_rejects_empty():
    with pytest.raises(ValueError):
        aggregate_neighbor_labels(np.zeros((0, 3)))


def test_relabel_worked_example():
    out = relabel_sample([1, 0, 0], [0, 1, 0], 0.7)
    np.testing.assert_allclose(out, [0.7, 0.3, 0.0])


def test_relabel_endpoints():
    y, agg = np.array([1.0, 0.0, 1.0]), np.array([0.0, 1.0, 1.0])
    np.testing.assert_array_equal(relabel_sample(y, agg, 1.0), y)
    np.testing.assert_array_equal(relabel_sample(y, agg, 0.0), agg)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=8).flatmap(
    lambda y: st.tuples(st.just(y), st.lists(st.integers(0, 1), min_size=len(y), max_size=len(y)))),
    st.floats(0, 1))
def test_relabel_stays_in_unit_interval(pair, lam):
    y, agg = pair
    out = relabel_sample(y, agg, lam)
    assert np.all((out >= 0) & (out <= 1))


@pytest.mark.parametrize("lam", [-0.1, 1.5])
def test_lambda_range(lam):
    with pytest.raises(ValueError):
        RelabelConfig(lam=lam)


def test_smoothing():
    lm = smooth_labels(LabelMatrix([[1, 0], [0, 1]], BINARY), 0.1)
    assert lm.kind == SOFT
    np.testing.assert_allclose(lm.values, [[0.9, 0.1], [0.1, 0.9]])


def test_smoothing_zero_is_identity():
    np.testing.assert_array_equal(smooth_labels(LabelMatrix([[1, 0]], BINARY), 0.0).values, [[1, 0]])


@pytest.mark.parametrize("eps", [-0.1, 0.5])
def test_smoothing_range(eps):
    with pytest.raises(ValueError):
        smooth_labels(LabelMatrix([[1, 0]], BINARY), eps)


def test_smoothing_needs_binary():
    with pytest.raises(DataFormatError):
        smooth_labels(LabelMatrix([[0.3, 0.7]], SOFT), 0.1)


@pytest.fixture
def projected(small_synth):
    ds = small_synth.noisy
    proj = AttributeProjector.init(3, ds.n_features, small_synth.embeddings.shape[1],
                                   np.random.default_rng(1))
    return ds, proj, small_synth.embeddings


def test_a2s_leaves_clean_rows_untouched(projected):
    ds, proj, W = projected
    res = a2s(ds, proj, W, RelabelConfig(lam=0.7, k=5))
    assert res.dataset.labels.kind == SOFT
    clean = res.split.clean_indices
    assert res.dataset.labels.values[clean].tobytes() == ds.labels.values[clean].astype(np.float64).tobytes()
    assert sorted(res.neighbors) == res.split.noisy_indices.tolist()
    vals = res.dataset.labels.values
    assert np.all((vals >= 0) & (vals <= 1))


def test_a2s_endpoints(projected):
    ds, proj, W = projected
    keep = a2s(ds, proj, W, RelabelConfig(lam=1.0, k=5))
    np.testing.assert_array_equal(keep.dataset.labels.values, ds.labels.values)
    full = a2s(ds, proj, W, RelabelConfig(lam=0.0, k=5))
    Y = ds.labels.values
    for i, nbrs in full.neighbors.items():
        np.testing.assert_array_equal(full.dataset.labels.values[i], np.minimum(1, Y[nbrs].sum(0)))
