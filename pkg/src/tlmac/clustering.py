"""Partition sequential steps into select-index clusters.

Steps that draw on similar sets of weight groups should share a select index
so each shared group is stored once. The step-by-group incidence matrix is
treated as points in binary space and clustered spectrally: a k-nearest-
neighbour graph, its symmetric normalised Laplacian, the trailing eigenvector
embedding, and a pivoted-QR label assignment that reads cluster labels
directly off the rotated embedding without iterative refinement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

DEFAULT_NN_K = 10


@dataclass
class ClusterPlan:
    """Step-to-cluster assignment plus the per-cluster group membership.

    ``labels`` doubles as the step-to-select mapping memory: the select value
    issued at step t is labels[t]. ``n_arrays`` is the size of the largest
    cluster union, which is the number of LUT arrays the pool needs.
    """

    labels: np.ndarray
    members: list[np.ndarray]
    n_clusters: int

    @property
    def n_steps(self) -> int:
        return self.labels.shape[0]

    @property
    def n_arrays(self) -> int:
        return max((len(m) for m in self.members), default=0)

    @property
    def step_select(self) -> np.ndarray:
        return self.labels


def _plan_from_labels(labels: np.ndarray, usage: np.ndarray, n_clusters: int) -> ClusterPlan:
    members = []
    for c in range(n_clusters):
        rows = usage[labels == c]
        if rows.shape[0] == 0:
            members.append(np.empty(0, dtype=np.int64))
        else:
            members.append(np.flatnonzero(rows.any(axis=0)).astype(np.int64))
    return ClusterPlan(labels=labels.astype(np.int64), members=members, n_clusters=n_clusters)


def _knn_adjacency(points: np.ndarray, k: int) -> np.ndarray:
    """Binary, symmetrised k-nearest-neighbour adjacency (Euclidean)."""
    sq = (points * points).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.fill_diagonal(d2, np.inf)
    neighbours = np.argsort(d2, axis=1, kind="stable")[:, :k]
    n = points.shape[0]
    adj = np.zeros((n, n), dtype=np.float64)
    adj[np.arange(n)[:, None], neighbours] = 1.0
    return np.maximum(adj, adj.T)


def _cluster_qr_labels(embedding: np.ndarray) -> np.ndarray:
    """Assign labels from an eigenvector embedding via column-pivoted QR.

    Pivoting picks one representative row per cluster; the orthogonal factor
    of the pivot block's SVD undoes the arbitrary rotation of the eigenbasis.
    Ties in the final argmax resolve to the lowest cluster index.
    """
    k = embedding.shape[1]
    _, _, piv = scipy.linalg.qr(embedding.T, pivoting=True)
    u, _, vt = scipy.linalg.svd(embedding[piv[:k], :].T)
    rotated = np.abs(embedding @ (u @ vt))
    return rotated.argmax(axis=1)


def spectral_cluster(usage: np.ndarray, n_clusters: int, seed: int = 0,
                     nn_k: int | None = None) -> ClusterPlan:
    """Cluster steps by the similarity of their weight-group usage rows.

    With n_steps <= n_clusters every step gets its own cluster, which is
    optimal. The pipeline itself is deterministic (dense eigendecomposition,
    pivoted QR); ``seed`` is accepted for interface uniformity with the other
    stochastic passes and echoed into report metadata by the driver.
    """
    del seed
    usage = np.asarray(usage, dtype=bool)
    if usage.ndim != 2:
        raise ValueError(f"usage matrix must be 2-D, got shape {usage.shape}")
    if n_clusters < 1:
        raise ValueError(f"cluster count must be >= 1, got {n_clusters}")
    n_steps = usage.shape[0]

    if n_steps <= n_clusters:
        labels = np.arange(n_steps, dtype=np.int64)
        return _plan_from_labels(labels, usage, n_clusters)

    # Steps with identical rows always belong together (co-clustering them
    # costs nothing), so the embedding runs on the distinct rows. This also
    # keeps the neighbour graph meaningful when rows repeat heavily; all
    # identical rows collapsing into one cluster is the degenerate extreme.
    uniq, first, inverse = np.unique(usage, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty(len(order), dtype=np.int64)
    rank[order] = np.arange(len(order))
    row_ids = rank[inverse.ravel()]
    points = uniq[order].astype(np.float64)
    n_distinct = points.shape[0]

    if n_distinct <= n_clusters:
        labels = row_ids
        return _plan_from_labels(labels, usage, n_clusters)

    k = DEFAULT_NN_K if nn_k is None else nn_k
    k = max(1, min(k, n_distinct - 1))
    adj = _knn_adjacency(points, k)

    degree = adj.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(degree)
    laplacian = np.eye(n_distinct) - inv_sqrt[:, None] * adj * inv_sqrt[None, :]
    _, vectors = np.linalg.eigh(laplacian)
    embedding = vectors[:, :n_clusters]

    labels = _cluster_qr_labels(embedding)[row_ids]
    return _plan_from_labels(labels, usage, n_clusters)


def baseline_chunk_cluster(usage: np.ndarray, n_clusters: int) -> ClusterPlan:
    """Contiguous equal-chunk partition, kept as a comparison baseline."""
    usage = np.asarray(usage, dtype=bool)
    n_steps = usage.shape[0]
    if n_clusters < 1:
        raise ValueError(f"cluster count must be >= 1, got {n_clusters}")
    chunk = -(-n_steps // n_clusters)
    labels = np.arange(n_steps, dtype=np.int64) // chunk
    return _plan_from_labels(labels, usage, n_clusters)


def lower_bound_arrays(grouped_or_usage) -> int:
    """Largest number of distinct groups any single step uses.

    Every valid plan needs at least this many LUT arrays, because all groups
    of one step must be fetched from distinct arrays in the same cycle.
    """
    usage = getattr(grouped_or_usage, "usage", grouped_or_usage)
    usage = np.asarray(usage, dtype=bool)
    if usage.shape[0] == 0:
        return 0
    return int(usage.sum(axis=1).max())
