"""Scikit-learn style conditional anomaly detectors.

Each detector is fitted on past labeled examples and then scores recent
labeled examples: ``score_samples(X, y)`` returns one non-negative anomaly
score per row, higher meaning the observed label is more unusual given the
features.  Scoring needs the labels because the question asked is "is this
label plausible here", not "is this point an outlier".

Example
-------
>>> det = SoftHarmonicCAD(k=10).fit(X_past, y_past)
>>> scores = det.score_samples(X_recent, y_recent)
>>> ranking = np.argsort(-scores)
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .baselines import GaussianClassModel, fit_gaussian_class_model, gaussian_posterior_scores
from .scoring import CentroidModel, PipelineConfig, prepare_model, score_with_model
from .validation import check_binary_labels, check_feature_matrix


class _GraphCAD(BaseEstimator):
    """Shared fit logic for the graph-based detectors."""

    _method: str = "softhad"

    def _pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            k=self.k,
            c_l=getattr(self, "c_l", 1.0),
            gamma_g=getattr(self, "gamma_g", 1.0),
            k_per_class=self.k_per_class,
            sigma=self.sigma,
            feature_weights=self.feature_weights,
            tol=getattr(self, "tol", 1e-10),
            max_iter=getattr(self, "max_iter", None),
            seed=self.random_state,
        )

    def fit(self, X, y):
        """Fit feature weights, the length scale and the centroid set.

        Parameters
        ----------
        X : array of shape (n_samples, n_features)
            Past examples.
        y : array of shape (n_samples,)
            Observed -1/+1 labels; both classes must be present.

        Returns
        -------
        self
        """
        X = check_feature_matrix(X)
        y = check_binary_labels(y, n=X.shape[0], require_both=True)
        self.model_: CentroidModel = prepare_model(X, y, self._pipeline_config())
        self.n_features_in_ = X.shape[1]
        return self

    def score_samples(self, X, y) -> np.ndarray:
        """Anomaly score per recent example (higher = more anomalous).

        The combined graph over fitted centroids and the given examples is
        built on each call; the recent labels participate as pseudo-targets,
        so a batch is scored jointly.  Also caches the training-node scores
        of the same solve in ``train_scores_``.
        """
        self._check_fitted()
        X = check_feature_matrix(X, allow_empty=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, detector was fitted with "
                f"{self.n_features_in_}"
            )
        y = check_binary_labels(y, n=X.shape[0])
        recent_raw, train_raw = score_with_model(
            self.model_, X, y, self._pipeline_config(), methods=(self._method,)
        )[self._method]
        self.train_scores_ = train_raw
        return recent_raw

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError(
                f"{type(self).__name__} is not fitted yet; call fit(X, y) first"
            )


class SoftHarmonicCAD(_GraphCAD):
    """Conditional anomaly detection via regularized soft label propagation.

    Labels spread over a k-NN similarity graph by solving a symmetric
    positive definite linear system; the anomaly score of an example is the
    distance between its observed label and the propagated soft label.
    The diagonal regularizer ``gamma_g`` acts as a zero-labeled sink that
    damps the confidence of weakly connected (isolated or fringe) points so
    they are not flagged.

    Parameters
    ----------
    k : int, default 75
        Neighbors per node; clipped to n-1 on small node sets.
    c_l : float, default 1.0
        Label-fit weight. Finite values let labels spread beyond their nodes.
    gamma_g : float, default 1.0
        Sink weight damping weakly connected points.
    k_per_class : int or None, default None
        Centroids sampled per class for the backbone graph; None keeps every
        past example as its own node.
    sigma : float or None, default None
        RBF length scale; None selects it from the pairwise-distance
        variance heuristic.
    feature_weights : "wilcoxon", "uniform" or array, default "wilcoxon"
        Per-feature distance weights.
    tol : float, default 1e-10
        Relative residual target of the iterative solver.
    max_iter : int or None, default None
        Solver iteration cap; None means 10x the node count.
    random_state : int, default 0
        Seed for centroid sampling and length-scale subsampling.

    Attributes
    ----------
    model_ : CentroidModel
        Fitted feature weights, length scale, centroids and multiplicities.
    train_scores_ : ndarray
        Training-node scores from the most recent ``score_samples`` call
        (the inputs of a task scaler).
    """

    _method = "softhad"

    def __init__(
        self,
        k: int = 75,
        c_l: float = 1.0,
        gamma_g: float = 1.0,
        k_per_class: int | None = None,
        sigma: float | None = None,
        feature_weights="wilcoxon",
        tol: float = 1e-10,
        max_iter: int | None = None,
        random_state: int = 0,
    ):
        self.k = k
        self.c_l = c_l
        self.gamma_g = gamma_g
        self.k_per_class = k_per_class
        self.sigma = sigma
        self.feature_weights = feature_weights
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state


class WeightedKNNCAD(_GraphCAD):
    """Weighted k-NN detector on the same similarity graph.

    Replaces the propagation solve with a single degree-normalized label
    average over each node's neighborhood, so it sees only the immediate
    neighborhood, not the manifold.
    """

    _method = "wknn"

    def __init__(
        self,
        k: int = 75,
        k_per_class: int | None = None,
        sigma: float | None = None,
        feature_weights="wilcoxon",
        random_state: int = 0,
    ):
        self.k = k
        self.k_per_class = k_per_class
        self.sigma = sigma
        self.feature_weights = feature_weights
        self.random_state = random_state


class QDACAD(BaseEstimator):
    """Class-conditional Gaussian detector.

    Fits one Gaussian per class with empirical priors; the anomaly score is
    the posterior probability of the opposite class.

    Parameters
    ----------
    reg : float or None, default None
        Ridge added to each covariance diagonal; None uses
        ``1e-6 * trace / d`` per class.
    """

    def __init__(self, reg: float | None = None):
        self.reg = reg

    def fit(self, X, y):
        X = check_feature_matrix(X)
        y = check_binary_labels(y, n=X.shape[0], require_both=True)
        self.model_: GaussianClassModel = fit_gaussian_class_model(X, y, reg=self.reg)
        self.n_features_in_ = X.shape[1]
        return self

    def score_samples(self, X, y) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise NotFittedError("QDACAD is not fitted yet; call fit(X, y) first")
        X = check_feature_matrix(X, allow_empty=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, detector was fitted with "
                f"{self.n_features_in_}"
            )
        y = check_binary_labels(y, n=X.shape[0])
        return gaussian_posterior_scores(self.model_, X, y)
