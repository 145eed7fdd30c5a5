"""Weighted k-NN similarity graphs and their Laplacians.

Similarity between two points is an RBF of their feature-weighted squared
Euclidean distance, ``w_ij = exp(-d2(x_i, x_j) / sigma**2)``.  Feature
weights come from a rank-sum (AUC) score of each feature's discriminative
power, and the length scale ``sigma`` from a pairwise-distance variance
heuristic.  Graphs are symmetrized by union: an edge is kept if either
endpoint selects the other as one of its k nearest neighbors, which keeps
the minimum degree at k and reduces the risk of a disconnected graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.stats import rankdata

from .validation import (
    check_binary_labels,
    check_feature_matrix,
    check_feature_weights,
)


def wilcoxon_feature_weights(X, y) -> np.ndarray:
    """Per-feature weights from each feature's univariate rank-sum AUC.

    For feature f, ``psi_f = |2 * AUC_f - 1|`` where AUC_f is the
    probability (with half credit for ties) that a positive-class value
    exceeds a negative-class value.  A perfectly discriminative feature
    gets weight 1 regardless of label direction; a constant feature gets
    weight 0.
    """
    X = check_feature_matrix(X)
    y = check_binary_labels(y, n=X.shape[0], require_both=True)
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = int((~pos).sum())
    psi = np.empty(X.shape[1])
    for f in range(X.shape[1]):
        ranks = rankdata(X[:, f], method="average")
        u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
        auc = u / (n_pos * n_neg)
        psi[f] = abs(2.0 * auc - 1.0)
    return psi


def weighted_sq_distance(a, b, psi) -> float:
    """Feature-weighted squared Euclidean distance ``sum_f psi_f (a_f - b_f)^2``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"vectors must be 1-D with equal shapes, got {a.shape} and {b.shape}")
    psi = check_feature_weights(psi, a.shape[0])
    diff = a - b
    return float(np.dot(psi, diff * diff))


def pairwise_sq_distances(A, B, psi, *, block_rows: int = 256) -> np.ndarray:
    """Dense matrix of feature-weighted squared distances between row sets.

    Computed blockwise from explicit coordinate differences, so entries are
    exactly the per-pair ``weighted_sq_distance`` values (no Gram-expansion
    cancellation error).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    psi = np.asarray(psi, dtype=float)
    out = np.empty((A.shape[0], B.shape[0]))
    for start in range(0, A.shape[0], block_rows):
        stop = min(start + block_rows, A.shape[0])
        diff = A[start:stop, None, :] - B[None, :, :]
        out[start:stop] = np.einsum("ijk,k->ij", diff * diff, psi)
    return out


def sigma_heuristic(X, psi, *, max_pairs: int = 1_000_000, rng=None) -> float:
    """Length scale: 10% of the variance of the pairwise weighted distances.

    Uses the population variance over all n(n-1)/2 pairwise distances, or a
    uniform random subsample of at most ``max_pairs`` pairs when there are
    more than that.  The subsample draw is deterministic unless a seeded
    ``rng`` is supplied.
    """
    X = check_feature_matrix(X)
    psi = check_feature_weights(psi, X.shape[1])
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 points to estimate a length scale")
    n_pairs = n * (n - 1) // 2
    if n_pairs <= max_pairs:
        sq = np.concatenate(
            [pairwise_sq_distances(X[i : i + 1], X[i + 1 :], psi)[0] for i in range(n - 1)]
        )
    else:
        rng = np.random.default_rng(0 if rng is None else rng)
        i = rng.integers(0, n, size=max_pairs)
        j = rng.integers(0, n, size=max_pairs)
        keep = i != j
        diff = X[i[keep]] - X[j[keep]]
        sq = np.einsum("ij,j->i", diff * diff, psi)
    variance = float(np.sqrt(sq).var())
    if variance <= 0.0:
        raise ValueError("pairwise distances have zero variance (degenerate geometry)")
    return 0.1 * variance


@dataclass(frozen=True)
class SimilarityGraph:
    """Symmetric non-negative similarity weights with cached degrees."""

    weights: sp.csr_matrix
    degrees: np.ndarray
    sigma: float
    k: int | None = None

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def _as_similarity_graph(weights: sp.csr_matrix, sigma: float, k: int | None) -> SimilarityGraph:
    weights = weights.tocsr()
    weights.sort_indices()
    transpose = weights.T.tocsr()
    transpose.sort_indices()
    if (
        not np.array_equal(weights.indptr, transpose.indptr)
        or not np.array_equal(weights.indices, transpose.indices)
        or not np.array_equal(weights.data, transpose.data)
    ):
        raise ValueError("similarity weights must be exactly symmetric")
    if weights.diagonal().any():
        raise ValueError("similarity weights must have a zero diagonal")
    if weights.nnz and (weights.data.min() < 0 or weights.data.max() > 1):
        raise ValueError("similarity weights must lie in [0, 1]")
    degrees = np.asarray(weights.sum(axis=1)).ravel()
    return SimilarityGraph(weights=weights, degrees=degrees, sigma=float(sigma), k=k)


def build_knn_graph(X, psi, sigma: float, k: int) -> SimilarityGraph:
    """Union-symmetrized k-NN graph with RBF edge weights.

    Each node selects its k nearest neighbors under the weighted squared
    distance (ties broken by lowest index); an edge is kept if either
    endpoint selected the other, with weight ``exp(-d2 / sigma**2)``.
    """
    X = check_feature_matrix(X)
    psi = check_feature_weights(psi, X.shape[1])
    n = X.shape[0]
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n, got k={k} with n={n}")

    rows = []
    cols = []
    block = max(1, int(4_000_000 / max(1, n)))
    for start in range(0, n, block):
        stop = min(start + block, n)
        d2 = pairwise_sq_distances(X[start:stop], X, psi)
        order = np.argsort(d2, axis=1, kind="stable")
        for local, i in enumerate(range(start, stop)):
            row = order[local]
            neighbors = row[row != i][:k]
            rows.append(np.full(k, i))
            cols.append(neighbors)
    i_sel = np.concatenate(rows)
    j_sel = np.concatenate(cols)

    # Canonicalize to unordered pairs so each weight is computed once and
    # placed symmetrically (exact symmetry by construction).
    lo = np.minimum(i_sel, j_sel)
    hi = np.maximum(i_sel, j_sel)
    pair_ids = np.unique(lo.astype(np.int64) * n + hi)
    lo = (pair_ids // n).astype(np.int64)
    hi = (pair_ids % n).astype(np.int64)
    diff = X[lo] - X[hi]
    d2 = np.einsum("ij,j->i", diff * diff, psi)
    w = np.exp(-d2 / (sigma * sigma))

    coo = sp.coo_matrix(
        (np.concatenate([w, w]), (np.concatenate([lo, hi]), np.concatenate([hi, lo]))),
        shape=(n, n),
    )
    weights = coo.tocsr()
    weights.eliminate_zeros()
    return _as_similarity_graph(weights, sigma, k)


@dataclass(frozen=True)
class GraphLaplacian:
    """Unnormalized Laplacian ``D - W`` with a reference to its source graph."""

    matrix: sp.csr_matrix
    source: SimilarityGraph | None = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def laplacian(graph: SimilarityGraph) -> GraphLaplacian:
    """Unnormalized graph Laplacian of a similarity graph."""
    return GraphLaplacian(
        matrix=_laplacian_matrix(graph.weights, graph.degrees), source=graph
    )


def laplacian_from_weights(weights) -> GraphLaplacian:
    """Laplacian of an arbitrary symmetric non-negative weight matrix."""
    weights = sp.csr_matrix(weights)
    degrees = np.asarray(weights.sum(axis=1)).ravel()
    return GraphLaplacian(matrix=_laplacian_matrix(weights, degrees), source=None)


def _laplacian_matrix(weights: sp.csr_matrix, degrees: np.ndarray) -> sp.csr_matrix:
    return (sp.diags(degrees) - weights).tocsr()


def save_graph(graph: SimilarityGraph, path) -> None:
    """Write a graph as a triplet text file: a header line ``n k sigma``
    followed by one ``row col weight`` line per upper-triangle edge."""
    coo = sp.triu(graph.weights, k=1).tocoo()
    k = -1 if graph.k is None else graph.k
    lines = [f"{graph.n} {k} {graph.sigma!r}"]
    order = np.lexsort((coo.col, coo.row))
    lines.extend(
        f"{coo.row[t]} {coo.col[t]} {float(coo.data[t])!r}" for t in order
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path) -> SimilarityGraph:
    """Read a graph written by :func:`save_graph`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        n, k, sigma = int(header[0]), int(header[1]), float(header[2])
        rows, cols, data = [], [], []
        for line in fh:
            if not line.strip():
                continue
            i, j, w = line.split()
            rows.append(int(i))
            cols.append(int(j))
            data.append(float(w))
    coo = sp.coo_matrix(
        (data + data, (rows + cols, cols + rows)), shape=(n, n)
    )
    return _as_similarity_graph(coo.tocsr(), sigma, None if k < 0 else k)
