"""Synthetic multi-label data with known clean labels and injected noise.

Randomness comes from numpy's PCG64 bit generator seeded through
``SeedSequence(seed, spawn_key=(stage, ...))``, one independent stream per
stage:

=========  ======================================================
stage      draws
=========  ======================================================
0          class embeddings
1, split   positive counts and positive classes for ``split``
2          feature mixing matrix (``spawn_key=(2, 0)``) and per-split
           feature noise (``spawn_key=(2, 1 + split)``)
3          label-noise injection
=========  ======================================================

Split 0 is the training set, split 1 the held-out test set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import BINARY, Dataset, LabelMatrix, l2_normalize_rows

EMBEDDINGS, LABELS, FEATURES, NOISE = 0, 1, 2, 3
TRAIN, TEST = 0, 1


def stage_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class SynthConfig:
    n: int = 2000
    c: int = 13
    z: int = 32
    d: int = 64
    max_positives: int = 5
    noise_rate: float = 0.3
    flip_prob: float = 0.3
    feature_noise: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.c < 2:
            raise ValueError("c must be >= 2")
        if self.z < 2:
            raise ValueError("z must be >= 2")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 1 <= self.max_positives < self.c:
            raise ValueError("need 1 <= max_positives < c")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError("noise_rate must be in [0, 1]")
        if not 0.0 < self.flip_prob <= 1.0:
            raise ValueError("flip_prob must be in (0, 1]")
        if self.feature_noise < 0:
            raise ValueError("feature_noise must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


@dataclass(frozen=True)
class SynthOutput:
    clean: Dataset
    noisy: Dataset
    embeddings: np.ndarray
    corrupted_indices: np.ndarray
    test: Dataset | None = None


def gen_embeddings(c: int, z: int, seed: int) -> np.ndarray:
    """Isotropic Gaussian rows, L2-normalised."""
    if z < 2:
        raise ValueError("z must be >= 2")
    return l2_normalize_rows(stage_rng(seed, EMBEDDINGS).standard_normal((c, z)))


def embedding_coherence(W) -> float:
    """Largest absolute cosine between two distinct embedding rows."""
    W = np.asarray(W)
    g = np.abs(W @ W.T)
    np.fill_diagonal(g, 0.0)
    return float(g.max())


def mixing_matrix(config: SynthConfig) -> np.ndarray:
    # entries N(0, 1/d) so the map roughly preserves centroid norms
    rng = stage_rng(config.seed, FEATURES, 0)
    return rng.standard_normal((config.d, config.z)) / np.sqrt(config.d)


def gen_clean(config: SynthConfig, W, split: int = TRAIN, n: int | None = None) -> Dataset:
    """Clean labels plus features ``B @ mean(positive embeddings) + noise``."""
    n = config.n if n is None else n
    W = np.asarray(W, dtype=np.float64)
    rng = stage_rng(config.seed, LABELS, split)
    Y = np.zeros((n, config.c))
    for i in range(n):
        k = rng.integers(1, config.max_positives + 1)
        Y[i, rng.choice(config.c, size=k, replace=False)] = 1.0
    centroids = (Y @ W) / Y.sum(axis=1, keepdims=True)
    B = mixing_matrix(config)
    noise = stage_rng(config.seed, FEATURES, 1 + split).standard_normal((n, config.d))
    X = centroids @ B.T + config.feature_noise * noise
    return Dataset(X, LabelMatrix(Y, BINARY))


def inject_noise(labels, noise_rate: float, flip_prob: float, seed: int):
    """Corrupt a random subset of samples by flipping label bits.

    A selected sample is redrawn until at least one bit flips, so the returned
    index array lists exactly the rows that changed.
    """
    Y = labels.values if isinstance(labels, LabelMatrix) else np.asarray(labels, dtype=np.float64)
    if not np.all((Y == 0) | (Y == 1)):
        raise ValueError("noise injection expects binary labels")
    rng = stage_rng(seed, NOISE)
    n, c = Y.shape
    selected = rng.random(n) < noise_rate
    noisy = Y.copy()
    for i in np.flatnonzero(selected):
        while True:
            flips = rng.random(c) < flip_prob
            if flips.any():
                break
        noisy[i, flips] = 1.0 - noisy[i, flips]
    return LabelMatrix(noisy, BINARY), np.flatnonzero(selected)


def generate(config: SynthConfig = SynthConfig(), test_n: int = 0) -> SynthOutput:
    W = gen_embeddings(config.c, config.z, config.seed)
    clean = gen_clean(config, W)
    noisy_labels, corrupted = inject_noise(
        clean.labels, config.noise_rate, config.flip_prob, config.seed
    )
    test = gen_clean(config, W, split=TEST, n=test_n) if test_n else None
    return SynthOutput(clean, clean.with_labels(noisy_labels), W, corrupted, test)
