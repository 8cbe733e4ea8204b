"""Attribute-level graph and top-K neighbour-image search.

Every sample contributes ``M`` nodes (its attribute vectors).  Edge weights
are inverse Euclidean distances, so the strongest edges of a query image are
its nearest foreign nodes.  Search is exact: a float32 GEMM screens
candidates with a proven error margin, and survivors are re-ranked with
float64 distances under a fixed tie-break order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .exceptions import DimensionMismatchError, NonFiniteError
from .val import AttributeProjector, project_batch

MIN_DISTANCE = 1e-12
_EPS32 = float(np.finfo(np.float32).eps)
# upper bound on screened-matrix entries per block (float32 -> 64 MB)
_BLOCK_ELEMENTS = 1 << 24
_SCREEN_STRIDE = 4


@dataclass(frozen=True)
class AttributeGraph:
    nodes: np.ndarray
    owners: np.ndarray
    n_attributes: int

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=np.float64)
        if nodes.ndim != 2:
            raise DimensionMismatchError(f"nodes must be 2-D, got {nodes.shape}")
        if not np.all(np.isfinite(nodes)):
            raise NonFiniteError("attribute nodes must be finite")
        m = int(self.n_attributes)
        if m < 1 or nodes.shape[0] % m:
            raise DimensionMismatchError(
                f"{nodes.shape[0]} nodes is not a multiple of M={m}"
            )
        owners = np.asarray(self.owners, dtype=np.int64)
        if not np.array_equal(owners, np.repeat(np.arange(nodes.shape[0] // m), m)):
            raise DimensionMismatchError("owners must be the block pattern [0]*M + [1]*M + ...")
        nodes.setflags(write=False)
        owners = owners.copy()
        owners.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "owners", owners)
        object.__setattr__(self, "n_attributes", m)

    @classmethod
    def from_attributes(cls, V) -> "AttributeGraph":
        """Graph from an (N, M, Z) attribute stack."""
        V = np.asarray(V, dtype=np.float64)
        n, m, z = V.shape
        return cls(V.reshape(n * m, z), np.repeat(np.arange(n), m), m)

    @property
    def n_images(self) -> int:
        return self.nodes.shape[0] // self.n_attributes


def build_graph(dataset: Dataset, projector: AttributeProjector) -> AttributeGraph:
    X = dataset.features if isinstance(dataset, Dataset) else dataset
    return AttributeGraph.from_attributes(project_batch(projector, X))


def node_distance(a, b):
    """Euclidean distance along the last axis, clamped below at 1e-12.

    All rankings go through this one expression so that equal distances
    compare equal bit for bit.
    """
    diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return np.maximum(np.sqrt(np.sum(diff * diff, axis=-1)), MIN_DISTANCE)


def edge_weight(a, b) -> float:
    return 1.0 / float(node_distance(a, b))


def check_k(k, n_images, n_attributes):
    if n_images < 2:
        raise ValueError("neighbour search needs at least two images")
    hi = (n_images - 1) * n_attributes
    if not 1 <= k <= hi:
        raise ValueError(f"K must be in [1, {hi}], got {k}")


class _Screen:
    """Precomputed operands shared by all query blocks."""

    def __init__(self, graph: AttributeGraph):
        nodes = graph.nodes
        self.nodes = nodes
        self.m = graph.n_attributes
        self.n = graph.n_images
        z = nodes.shape[1]
        sq = np.einsum("ij,ij->i", nodes, nodes)
        self.sq = sq
        self.norm = np.sqrt(sq)
        self.max_norm = float(self.norm.max()) if len(sq) else 0.0
        n32 = nodes.astype(np.float32)
        self.left = np.hstack([n32, np.ones((len(sq), 1), np.float32)])
        # rows of right: [-2 v, |v|^2]; left @ right.T = |v|^2 - 2 <q, v>
        self.right_t = np.ascontiguousarray(
            np.hstack([-2.0 * n32, sq.astype(np.float32)[:, None]]).T
        )
        # generous bound on float32 rounding of |q - v|^2 via the expansion
        self.gamma = 8.0 * (z + 4) * _EPS32


def _knn_block(screen: _Screen, first: int, last: int, k: int):
    m, n = screen.m, screen.n
    b = last - first
    rows = slice(first * m, last * m)
    D = screen.left[rows] @ screen.right_t                     # (b*M, N*M)
    D4 = D.reshape(b, m, n, m)
    local = np.arange(b)
    D4[local, :, first + local, :] = np.inf

    sq_q = screen.sq[rows]
    # the K-th smallest over any column subset bounds the full K-th from
    # above; a strided subset trades partition time for a few more candidates
    stride = max(1, min(_SCREEN_STRIDE, (n * m) // (k + m)))
    sub = D[:, ::stride]
    kth = np.partition(sub, k - 1, axis=1)[:, k - 1].astype(np.float64) + sq_q
    # and the K-th smallest over an image's M rows is at most each row's K-th
    bound = kth.reshape(b, m).min(axis=1)
    qnorm = screen.norm[rows].reshape(b, m).max(axis=1)
    delta = screen.gamma * (qnorm + screen.max_norm) ** 2 + 1e-300
    thr = np.repeat(bound + 2.0 * delta, m) - sq_q
    thr32 = np.nextafter(thr.astype(np.float32), np.float32(np.inf))
    flat = np.flatnonzero(D <= thr32[:, None])
    r, cols = np.divmod(flat, n * m)

    # second pass: the K-th smallest screened value among an image's
    # candidates is a tighter upper bound than the per-row subset bound
    approx = D.ravel()[flat].astype(np.float64) + sq_q[r]
    image = r // m
    by_value = np.lexsort((approx, image))
    starts = np.searchsorted(image[by_value], np.arange(b))
    tight = approx[by_value][starts + k - 1] + 2.0 * delta
    keep = approx <= tight[image]
    r, cols, image = r[keep], cols[keep], image[keep]

    dist = node_distance(screen.nodes[first * m + r], screen.nodes[cols])
    qattr = r % m
    owner = cols // m
    order = np.lexsort((qattr, cols, owner, dist, image))
    image, owner = image[order], owner[order]
    starts = np.searchsorted(image, np.arange(b))
    rank = np.arange(len(image)) - starts[image]
    keep = rank < k
    pairs = np.unique(image[keep] * n + owner[keep])
    split = np.searchsorted(pairs // n, np.arange(1, b))
    return [grp % n for grp in np.split(pairs, split)]


def _block_ranges(n, m, block_size=None):
    if block_size is None:
        block_size = max(1, _BLOCK_ELEMENTS // max(1, m * n * m))
    return [(s, min(s + block_size, n)) for s in range(0, n, block_size)]


def knn_images(graph: AttributeGraph, query, k: int) -> np.ndarray:
    """Sorted unique owners of the K strongest edges leaving image ``query``.

    Candidates are (query attribute, foreign node) pairs; ties are broken by
    lower owner, then lower node, then lower query attribute.
    """
    check_k(k, graph.n_images, graph.n_attributes)
    if not 0 <= query < graph.n_images:
        raise IndexError(f"query image {query} out of range")
    return _knn_block(_Screen(graph), query, query + 1, k)[0]


def batch_knn(graph: AttributeGraph, k: int, n_jobs=None, block_size=None):
    """Neighbour image sets for every image, in image order.

    Blocks of query images are screened in parallel on ``n_jobs`` threads
    (default: all cores); the output does not depend on ``n_jobs``.
    """
    check_k(k, graph.n_images, graph.n_attributes)
    screen = _Screen(graph)
    blocks = _block_ranges(screen.n, screen.m, block_size)
    n_jobs = n_jobs or os.cpu_count() or 1
    if n_jobs == 1 or len(blocks) == 1:
        parts = [_knn_block(screen, a, b, k) for a, b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(lambda ab: _knn_block(screen, ab[0], ab[1], k), blocks))
    return [nbrs for part in parts for nbrs in part]
