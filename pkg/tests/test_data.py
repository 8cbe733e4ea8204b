import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sgval.data import (
    BINARY,
    SOFT,
    Dataset,
    LabelMatrix,
    check_embeddings,
    l2_normalize_rows,
    validate_dataset,
)
from sgval.exceptions import (
    DimensionMismatchError,
    LabelRangeError,
    NonFiniteError,
    ZeroRowError,
)
from sgval.synth import SynthConfig, generate


class TestValidateDataset:
    def test_consistent_dims(self, rng):
        ds = validate_dataset(rng.normal(size=(4, 3)), [[1, 0], [0, 1], [1, 1], [0, 0]],
                              rng.normal(size=(2, 5)))
        assert (ds.n_samples, ds.n_features, ds.n_classes) == (4, 3, 2)
        assert ds.labels.kind == BINARY

    def test_row_mismatch(self, rng):
        with pytest.raises(DimensionMismatchError):
            validate_dataset(rng.normal(size=(4, 3)), np.zeros((5, 2)))

    def test_nan_features(self, rng):
        X = rng.normal(size=(4, 3))
        X[2, 1] = np.nan
        with pytest.raises(NonFiniteError):
            validate_dataset(X, np.zeros((4, 2)))

    def test_label_out_of_range(self, rng):
        with pytest.raises(LabelRangeError):
            validate_dataset(rng.normal(size=(2, 3)), [[1, 2], [0, 0]])

    def test_embedding_class_mismatch(self, rng):
        with pytest.raises(DimensionMismatchError):
            validate_dataset(rng.normal(size=(2, 3)), np.zeros((2, 2)), rng.normal(size=(3, 5)))

    def test_single_class_rejected(self, rng):
        with pytest.raises(DimensionMismatchError):
            validate_dataset(rng.normal(size=(2, 3)), np.zeros((2, 1)))

    def test_immutable(self, rng):
        ds = validate_dataset(rng.normal(size=(2, 3)), np.eye(2))
        with pytest.raises(ValueError):
            ds.features[0, 0] = 1.0

    @pytest.mark.parametrize("seed", [0, 1, 7])
    def test_accepts_synthetic_output(self, seed):
        out = generate(SynthConfig(n=50, c=4, z=6, d=5, max_positives=2, seed=seed))
        for ds in (out.clean, out.noisy):
            validate_dataset(ds.features, ds.labels, out.embeddings, ds.class_names)


class TestLabelMatrix:
    def test_soft_kind_allows_fractions(self):
        assert LabelMatrix([[0.7, 0.3]], SOFT).kind == SOFT

    def test_binary_kind_rejects_fractions(self):
        with pytest.raises(LabelRangeError):
            LabelMatrix([[0.7, 0.3]], BINARY)

    def test_infer(self):
        assert LabelMatrix.infer([[1, 0]]).kind == BINARY
        assert LabelMatrix.infer([[0.5, 0]]).kind == SOFT


class TestL2Normalize:
    def test_three_four_five(self):
        np.testing.assert_allclose(l2_normalize_rows([[3, 4]]), [[0.6, 0.8]])

    def test_unit_vector_unchanged(self):
        np.testing.assert_array_equal(l2_normalize_rows([[0, 1]]), [[0, 1]])

    def test_zero_row(self):
        with pytest.raises(ZeroRowError):
            l2_normalize_rows([[1, 1], [0, 0]])

    def test_embeddings_need_two_dims(self):
        with pytest.raises(DimensionMismatchError):
            check_embeddings(np.ones((3, 1)))

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(2, 8)),
                  elements=st.one_of(st.just(0.0), st.floats(1e-6, 1e3), st.floats(-1e3, -1e-6))))
    def test_idempotent(self, m):
        m = m + (np.abs(m).sum(axis=1, keepdims=True) == 0)   # no zero rows
        once = l2_normalize_rows(m)
        np.testing.assert_allclose(l2_normalize_rows(once), once, atol=1e-12, rtol=0)
        np.testing.assert_allclose(np.linalg.norm(once, axis=1), 1.0, atol=1e-6)
