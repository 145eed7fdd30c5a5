"""Reference detectors: weighted k-NN on the similarity graph and a
class-conditional Gaussian (QDA) posterior."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .datasets import Dataset
from .graph import SimilarityGraph
from .scoring import AnomalyScores
from .validation import check_binary_labels, check_feature_matrix


def weighted_knn_scores(graph, y) -> AnomalyScores:
    """Degree-normalized neighborhood label average, scored as ``|ell - y|``.

    ``graph`` may be a :class:`SimilarityGraph` or any symmetric sparse
    weight matrix (e.g. multiplicity-compacted weights).  A node whose
    label all its neighbors share scores 0; one whose single neighbor has
    the opposite label scores 2.
    """
    weights = graph.weights if isinstance(graph, SimilarityGraph) else sp.csr_matrix(graph)
    y = check_binary_labels(y, n=weights.shape[0])
    degrees = np.asarray(weights.sum(axis=1)).ravel()
    if (degrees <= 0).any():
        node = int(np.flatnonzero(degrees <= 0)[0])
        raise ValueError(f"graph is disconnected: node {node} has zero degree")
    ell = (weights @ y.astype(float)) / degrees
    return AnomalyScores.from_raw(np.abs(ell - y))


@dataclass(frozen=True)
class GaussianClassModel:
    """Per-class mean, regularized covariance Cholesky factor and log prior."""

    means: dict[int, np.ndarray]
    cholesky: dict[int, np.ndarray]
    log_priors: dict[int, float]
    reg: float


def fit_gaussian_class_model(X, y, reg: float | None = None) -> GaussianClassModel:
    """Empirical per-class Gaussians with a diagonal covariance regularizer.

    By default ``reg = 1e-6 * trace(cov) / d`` per class.
    """
    X = check_feature_matrix(X)
    y = check_binary_labels(y, n=X.shape[0], require_both=True)
    if reg is not None and reg < 0:
        raise ValueError(f"reg must be non-negative, got {reg}")
    means: dict[int, np.ndarray] = {}
    cholesky: dict[int, np.ndarray] = {}
    log_priors: dict[int, float] = {}
    used_reg = 0.0
    for label in (-1, 1):
        members = X[y == label]
        if members.shape[0] < 2:
            raise ValueError(f"class {label} needs at least 2 examples to fit a covariance")
        means[label] = members.mean(axis=0)
        cov = np.cov(members, rowvar=False)
        cov = np.atleast_2d(cov)
        lam = reg if reg is not None else 1e-6 * np.trace(cov) / cov.shape[0]
        used_reg = max(used_reg, lam)
        cov = cov + lam * np.eye(cov.shape[0])
        try:
            cholesky[label] = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError(
                f"class {label} covariance is singular after regularization; "
                f"increase reg (used {lam})"
            ) from exc
        log_priors[label] = float(np.log(members.shape[0] / X.shape[0]))
    return GaussianClassModel(
        means=means, cholesky=cholesky, log_priors=log_priors, reg=used_reg
    )


def _log_gaussian(X: np.ndarray, mean: np.ndarray, chol: np.ndarray) -> np.ndarray:
    diff = X - mean
    solved = np.linalg.solve(chol, diff.T)
    quad = np.sum(solved * solved, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (mean.shape[0] * np.log(2.0 * np.pi) + logdet + quad)


def qda_scores(train: Dataset, evaluate: Dataset, reg: float | None = None) -> AnomalyScores:
    """Posterior probability of the opposite class under per-class Gaussians."""
    model = fit_gaussian_class_model(train.X, train.y, reg=reg)
    return AnomalyScores.from_raw(gaussian_posterior_scores(model, evaluate.X, evaluate.y))


def gaussian_posterior_scores(model: GaussianClassModel, X, y) -> np.ndarray:
    """``P(class != y_i | x_i)`` computed in log space."""
    X = check_feature_matrix(X, allow_empty=True)
    y = check_binary_labels(y, n=X.shape[0])
    log_pos = _log_gaussian(X, model.means[1], model.cholesky[1]) + model.log_priors[1]
    log_neg = _log_gaussian(X, model.means[-1], model.cholesky[-1]) + model.log_priors[-1]
    log_total = np.logaddexp(log_pos, log_neg)
    log_observed = np.where(y == 1, log_pos, log_neg)
    return np.clip(-np.expm1(log_observed - log_total), 0.0, 1.0)
