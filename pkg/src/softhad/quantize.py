"""Backbone graph construction: centroid sampling and multiplicities.

To keep the linear solve tractable on large datasets, the training points
are replaced by a smaller set of per-class sampled centroids.  Each
centroid carries a multiplicity equal to the number of training points it
represents (every point counts toward its nearest same-class centroid), and
the compact weight matrix scales similarities by those multiplicities:
``W^V = V W V``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import SimilarityGraph, build_knn_graph, pairwise_sq_distances
from .validation import check_binary_labels, check_feature_matrix, check_feature_weights


def select_centroids(X, y, k_per_class: int, seed) -> np.ndarray:
    """Sample ``k_per_class`` distinct row indices per class, without
    replacement, deterministically under ``seed``.  Returned indices are
    sorted ascending."""
    X = check_feature_matrix(X)
    y = check_binary_labels(y, n=X.shape[0], require_both=True)
    if k_per_class < 1:
        raise ValueError(f"k_per_class must be >= 1, got {k_per_class}")
    rng = np.random.default_rng(seed)
    picks = []
    for label in (-1, 1):
        idx = np.flatnonzero(y == label)
        if idx.size < k_per_class:
            raise ValueError(
                f"class {label} has only {idx.size} examples, "
                f"cannot sample {k_per_class} centroids"
            )
        picks.append(rng.choice(idx, size=k_per_class, replace=False))
    return np.sort(np.concatenate(picks))


def assign_multiplicities(X, y, centroid_indices, psi) -> np.ndarray:
    """Count the points represented by each centroid.

    Every point is assigned to its nearest same-class centroid under the
    weighted squared distance (ties broken by lowest centroid position;
    centroid points count toward themselves).
    """
    X = check_feature_matrix(X)
    y = check_binary_labels(y, n=X.shape[0])
    centroid_indices = np.asarray(centroid_indices)
    if centroid_indices.ndim != 1 or centroid_indices.size == 0:
        raise ValueError("centroid_indices must be a non-empty 1-D index array")
    psi = check_feature_weights(psi, X.shape[1])
    centroid_labels = y[centroid_indices]

    mult = np.zeros(centroid_indices.size, dtype=int)
    is_centroid = np.zeros(X.shape[0], dtype=bool)
    is_centroid[centroid_indices] = True

    for label in np.unique(y):
        cols = np.flatnonzero(centroid_labels == label)
        members = np.flatnonzero(y == label)
        if cols.size == 0:
            raise ValueError(f"class {label} has no centroid to represent it")
        mult += np.bincount(cols, minlength=mult.size)  # self-assignment
        others = members[~is_centroid[members]]
        if others.size:
            d2 = pairwise_sq_distances(X[others], X[centroid_indices[cols]], psi)
            nearest = cols[np.argmin(d2, axis=1)]
            mult += np.bincount(nearest, minlength=mult.size)

    if mult.sum() != X.shape[0]:
        raise AssertionError("multiplicities must partition the dataset")
    return mult


def compact_weights(weights, multiplicities) -> sp.csr_matrix:
    """Multiplicity-scaled weights ``(V W V)_ij = v_i v_j w_ij`` (exact)."""
    coo = sp.coo_matrix(weights)
    v = np.asarray(multiplicities)
    if v.shape != (coo.shape[0],):
        raise ValueError(
            f"multiplicities must have shape ({coo.shape[0]},), got {v.shape}"
        )
    if (v <= 0).any():
        raise ValueError("multiplicities must be positive")
    scale = (v[coo.row] * v[coo.col]).astype(float)
    out = sp.coo_matrix((scale * coo.data, (coo.row, coo.col)), shape=coo.shape)
    return out.tocsr()


@dataclass(frozen=True)
class BackboneGraph:
    """Sampled centroids, their multiplicities and compacted weights."""

    centroids: np.ndarray
    labels: np.ndarray
    multiplicities: np.ndarray
    compact_weights: sp.csr_matrix
    base_graph: SimilarityGraph
    centroid_indices: np.ndarray

    @property
    def n_centroids(self) -> int:
        return self.centroids.shape[0]


def build_backbone(
    X, y, psi, sigma: float, k_per_class: int | None, k_nn: int, seed
) -> BackboneGraph:
    """Select centroids, compute multiplicities and build ``W^V = V W V``.

    ``k_per_class=None`` keeps every training point as its own centroid
    (the no-compression limit, all multiplicities 1).
    """
    X = check_feature_matrix(X)
    y = check_binary_labels(y, n=X.shape[0], require_both=True)
    psi = check_feature_weights(psi, X.shape[1])
    if k_per_class is None:
        centroid_indices = np.arange(X.shape[0])
    else:
        centroid_indices = select_centroids(X, y, k_per_class, seed)
    mult = assign_multiplicities(X, y, centroid_indices, psi)
    base = build_knn_graph(X[centroid_indices], psi, sigma, k_nn)
    return BackboneGraph(
        centroids=X[centroid_indices].copy(),
        labels=y[centroid_indices].copy(),
        multiplicities=mult,
        compact_weights=compact_weights(base.weights, mult),
        base_graph=base,
        centroid_indices=centroid_indices,
    )


def save_backbone(backbone: BackboneGraph, path) -> None:
    """Triplet text format with node records.

    Header ``n k sigma``, then one ``m index multiplicity label`` line per
    node, then ``row col weight`` lines for the upper triangle of the base
    (unscaled) centroid graph.
    """
    base = backbone.base_graph
    k = -1 if base.k is None else base.k
    lines = [f"{backbone.n_centroids} {k} {base.sigma!r}"]
    for i in range(backbone.n_centroids):
        lines.append(
            f"m {i} {int(backbone.multiplicities[i])} {int(backbone.labels[i])}"
        )
    coo = sp.triu(base.weights, k=1).tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines.extend(f"{coo.row[t]} {coo.col[t]} {float(coo.data[t])!r}" for t in order)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_backbone(path, centroids: np.ndarray | None = None) -> BackboneGraph:
    """Read a backbone written by :func:`save_backbone`.

    Centroid coordinates are not stored in the file; pass them in if
    downstream code needs them (defaults to an empty placeholder).
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        n, k, sigma = int(header[0]), int(header[1]), float(header[2])
        mult = np.zeros(n, dtype=int)
        labels = np.zeros(n, dtype=int)
        rows, cols, data = [], [], []
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "m":
                idx = int(parts[1])
                mult[idx] = int(parts[2])
                labels[idx] = int(parts[3])
            else:
                rows.append(int(parts[0]))
                cols.append(int(parts[1]))
                data.append(float(parts[2]))
    coo = sp.coo_matrix((data + data, (rows + cols, cols + rows)), shape=(n, n))
    weights = coo.tocsr()
    degrees = np.asarray(weights.sum(axis=1)).ravel()
    base = SimilarityGraph(
        weights=weights, degrees=degrees, sigma=sigma, k=None if k < 0 else k
    )
    if centroids is None:
        centroids = np.empty((n, 0))
    return BackboneGraph(
        centroids=centroids,
        labels=labels,
        multiplicities=mult,
        compact_weights=compact_weights(weights, mult),
        base_graph=base,
        centroid_indices=np.arange(n),
    )
