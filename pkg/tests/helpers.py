"""Shared constructions for the test suite."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from softhad.datasets import Dataset
from softhad.graph import build_knn_graph, laplacian_from_weights


def random_connected_weights(seed, n_max=200, n_min=5):
    """Random connected symmetric weight matrix: spanning tree plus extras."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_min, n_max + 1))
    W = np.zeros((n, n))
    order = rng.permutation(n)
    for t in range(1, n):
        a, b = order[t], order[int(rng.integers(0, t))]
        W[a, b] = W[b, a] = rng.uniform(0.05, 1.0)
    for _ in range(int(rng.integers(0, 3 * n))):
        a, b = rng.integers(0, n, 2)
        if a != b and W[a, b] == 0:
            W[a, b] = W[b, a] = rng.uniform(0.05, 1.0)
    return sp.csr_matrix(W)


def random_labels(rng, n):
    y = rng.choice([-1, 1], size=n)
    if np.unique(y).size < 2:
        y[0] = -y[0]
    return y


def random_connected_system(seed, n_max=200):
    """(laplacian, labels) on a random connected weighted graph."""
    W = random_connected_weights(seed, n_max=n_max)
    rng = np.random.default_rng(seed + 10_000)
    return laplacian_from_weights(W), random_labels(rng, W.shape[0])


def label_pure_two_cluster_system(seed, n_per=25, k=6):
    """Two disjoint label-pure cluster graphs (block-diagonal union).

    On such graphs the sink regularizer provably shrinks every soft label,
    which is what the gamma-grid monotonicity tests exercise.
    """
    rng = np.random.default_rng(seed)
    psi = np.ones(2)
    blocks = []
    for _ in range(2):
        X = rng.normal(0.0, 1.0, (n_per, 2))
        blocks.append(build_knn_graph(X, psi, 1.0, k).weights)
    W = sp.block_diag(blocks).tocsr()
    y = np.concatenate([np.ones(n_per, dtype=int), -np.ones(n_per, dtype=int)])
    return laplacian_from_weights(W), y


def two_cluster_dataset(seed, n_per=100, sep=8.0):
    """Past dataset with a +1 cluster at the origin and a -1 cluster at (sep, 0)."""
    rng = np.random.default_rng(seed)
    X = np.vstack(
        [rng.normal((0.0, 0.0), 1.0, (n_per, 2)), rng.normal((sep, 0.0), 1.0, (n_per, 2))]
    )
    y = np.concatenate([np.ones(n_per, dtype=int), -np.ones(n_per, dtype=int)])
    return Dataset(X=X, y=y), rng


def regularized_system_matrix(L, c_l=1.0, gamma_g=1.0):
    """Dense system matrix matching the iterative solver's equations."""
    mat = L.matrix if hasattr(L, "matrix") else L
    n = mat.shape[0]
    return mat.toarray() / c_l + (1.0 + gamma_g / c_l) * np.eye(n)
