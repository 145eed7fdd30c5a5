"""Conditional anomaly scoring pipelines.

An example's anomaly score is ``s_i = |ell_i - y_i|``: the gap between its
observed label and the soft label propagated to it over the similarity
graph.  The pipeline quantizes the past examples into centroids with
multiplicities, appends the recent examples as multiplicity-1 nodes,
builds one k-NN graph over the combined node set, solves the regularized
system with the observed labels of both past and recent examples as
pseudo-targets, and reports the scores of the recent nodes.

Scores from different tasks live on different scales; a per-task min-max
scaler fitted on the training scores makes them comparable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import Dataset
from .graph import (
    build_knn_graph,
    laplacian_from_weights,
    sigma_heuristic,
    wilcoxon_feature_weights,
)
from .quantize import assign_multiplicities, compact_weights, select_centroids
from .solver import SoftLabels, SolverConfig, soft_harmonic_backbone
from .validation import (
    check_binary_labels,
    check_feature_matrix,
    check_feature_weights,
)

METHODS = ("softhad", "wknn")


@dataclass(frozen=True)
class AnomalyScores:
    """Raw scores, optional task-scaled scores and the induced ranking.

    ``ranking[r]`` is the index of the r-th most anomalous instance;
    ties are broken by instance index.
    """

    raw: np.ndarray
    ranking: np.ndarray
    scaled: np.ndarray | None = None

    @classmethod
    def from_raw(cls, raw: np.ndarray, scaled: np.ndarray | None = None) -> "AnomalyScores":
        raw = np.asarray(raw, dtype=float)
        ranking = np.argsort(-raw, kind="stable")
        return cls(raw=raw, ranking=ranking, scaled=scaled)

    def __len__(self) -> int:
        return len(self.raw)


def anomaly_scores(ell, y) -> AnomalyScores:
    """Scores ``|ell - y|`` with a descending ranking."""
    if isinstance(ell, SoftLabels):
        ell = ell.ell
    ell = np.asarray(ell, dtype=float)
    y = check_binary_labels(y, n=len(ell))
    return AnomalyScores.from_raw(np.abs(ell - y))


@dataclass(frozen=True)
class TaskScaler:
    """Per-task linear rescaling fitted on training scores."""

    min_score: float
    max_score: float

    def __post_init__(self):
        if not self.max_score > self.min_score:
            raise ValueError("max_score must exceed min_score")


def fit_task_scaler(train_scores) -> TaskScaler:
    scores = np.asarray(train_scores, dtype=float)
    if scores.size < 2 or np.unique(scores).size < 2:
        raise ValueError("degenerate task: need at least 2 distinct training scores")
    return TaskScaler(min_score=float(scores.min()), max_score=float(scores.max()))


def apply_task_scaler(scaler: TaskScaler, s):
    """Map training min/max to 0/1; values beyond the training range are
    deliberately not clamped."""
    s = np.asarray(s, dtype=float)
    out = (s - scaler.min_score) / (scaler.max_score - scaler.min_score)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PipelineConfig:
    """Graph, solver and quantization settings for one scoring run."""

    k: int = 75
    c_l: float = 1.0
    gamma_g: float = 1.0
    k_per_class: int | None = None
    sigma: float | None = None
    feature_weights: str | np.ndarray = "wilcoxon"
    tol: float = 1e-10
    max_iter: int | None = None
    seed: int = 0
    scale: bool = False

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            c_l=self.c_l, gamma_g=self.gamma_g, tol=self.tol, max_iter=self.max_iter
        )


@dataclass(frozen=True)
class CentroidModel:
    """Everything fitted from the past examples: feature weights, length
    scale and the quantized node set."""

    psi: np.ndarray
    sigma: float
    centroids: np.ndarray
    centroid_labels: np.ndarray
    multiplicities: np.ndarray

    @property
    def n_centroids(self) -> int:
        return self.centroids.shape[0]


def prepare_model(X, y, config: PipelineConfig | None = None) -> CentroidModel:
    """Fit feature weights, the length scale and the centroid set."""
    cfg = config or PipelineConfig()
    X = check_feature_matrix(X)
    y = check_binary_labels(y, n=X.shape[0], require_both=True)
    sigma_seed, centroid_seed = np.random.SeedSequence(cfg.seed).spawn(2)

    if isinstance(cfg.feature_weights, str):
        if cfg.feature_weights == "wilcoxon":
            psi = wilcoxon_feature_weights(X, y)
            if not (psi > 0).any():
                psi = np.ones(X.shape[1])
        elif cfg.feature_weights == "uniform":
            psi = np.ones(X.shape[1])
        else:
            raise ValueError(
                f"feature_weights must be 'wilcoxon', 'uniform' or an array, "
                f"got {cfg.feature_weights!r}"
            )
    else:
        psi = check_feature_weights(cfg.feature_weights, X.shape[1])

    sigma = cfg.sigma
    if sigma is None:
        sigma = sigma_heuristic(X, psi, rng=sigma_seed)
    elif not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")

    if cfg.k_per_class is None:
        centroid_indices = np.arange(X.shape[0])
    else:
        centroid_indices = select_centroids(X, y, cfg.k_per_class, centroid_seed)
    multiplicities = assign_multiplicities(X, y, centroid_indices, psi)
    return CentroidModel(
        psi=psi,
        sigma=float(sigma),
        centroids=X[centroid_indices].copy(),
        centroid_labels=y[centroid_indices].copy(),
        multiplicities=multiplicities,
    )


def score_with_model(
    model: CentroidModel,
    X_recent,
    y_recent,
    config: PipelineConfig | None = None,
    methods: tuple[str, ...] = ("softhad",),
) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Score recent examples against a fitted model.

    Builds the combined graph once and evaluates each requested method on
    it.  Returns ``{method: (recent_raw, train_raw)}`` where ``train_raw``
    holds the centroid scores from the same solve (used for task scaling).
    """
    cfg = config or PipelineConfig()
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
    X_recent = check_feature_matrix(X_recent, name="recent X", allow_empty=True)
    if X_recent.shape[1] != model.centroids.shape[1]:
        raise ValueError(
            f"recent X has {X_recent.shape[1]} features, model expects "
            f"{model.centroids.shape[1]}"
        )
    y_recent = check_binary_labels(y_recent, n=X_recent.shape[0], name="recent y")

    nodes = np.vstack([model.centroids, X_recent])
    y_nodes = np.concatenate([model.centroid_labels, y_recent])
    v = np.concatenate([model.multiplicities, np.ones(X_recent.shape[0], dtype=int)])
    n_centroids = model.n_centroids

    k_eff = min(cfg.k, nodes.shape[0] - 1)
    if k_eff < 1:
        raise ValueError("need at least 2 combined nodes to build a graph")
    graph = build_knn_graph(nodes, model.psi, model.sigma, k_eff)
    weights_v = compact_weights(graph.weights, v)

    out: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for m in methods:
        if m == "softhad":
            labels = soft_harmonic_backbone(
                laplacian_from_weights(weights_v), v, y_nodes, cfg.solver_config()
            )
            scores = np.abs(labels.ell - y_nodes)
        else:
            degrees = np.asarray(weights_v.sum(axis=1)).ravel()
            if (degrees <= 0).any():
                node = int(np.flatnonzero(degrees <= 0)[0])
                raise ValueError(f"graph is disconnected: node {node} has zero degree")
            ell = (weights_v @ y_nodes.astype(float)) / degrees
            scores = np.abs(ell - y_nodes)
        out[m] = (scores[n_centroids:], scores[:n_centroids])
    return out


def score_recent(
    past: Dataset, recent: Dataset, config: PipelineConfig | None = None
) -> AnomalyScores:
    """Full pipeline: fit on the past examples, score the recent ones.

    With ``config.scale`` a min-max scaler fitted on the training-node
    scores populates the ``scaled`` field.
    """
    cfg = config or PipelineConfig()
    model = prepare_model(past.X, past.y, cfg)
    recent_raw, train_raw = score_with_model(model, recent.X, recent.y, cfg)["softhad"]
    scaled = None
    if cfg.scale:
        scaled = apply_task_scaler(fit_task_scaler(train_raw), recent_raw)
    return AnomalyScores.from_raw(recent_raw, scaled)


@dataclass(frozen=True)
class SkippedTask:
    task: int
    reason: str


@dataclass(frozen=True)
class MultiTaskScores:
    """Per-task scaled scores plus records of tasks that could not run."""

    tasks: dict[int, AnomalyScores]
    scalers: dict[int, TaskScaler]
    skipped: tuple[SkippedTask, ...]


def score_multitask(
    past: Dataset,
    recent: Dataset,
    task_labels: np.ndarray,
    config: PipelineConfig | None = None,
) -> MultiTaskScores:
    """Score every task column independently and scale per task.

    ``task_labels`` has one -1/+1 column per task and one row per past
    example followed by one per recent example.  The graph is rebuilt per
    task because feature weights and per-class sampling depend on the
    task's labels.  Tasks whose past labels contain a single class are
    skipped with a warning record.
    """
    cfg = config or PipelineConfig()
    task_labels = np.asarray(task_labels)
    if task_labels.ndim != 2:
        raise ValueError("task_labels must be 2-D (rows x tasks)")
    n, m = past.X.shape[0], recent.X.shape[0]
    if task_labels.shape[0] != n + m:
        raise ValueError(
            f"task_labels has {task_labels.shape[0]} rows, expected {n + m}"
        )

    tasks: dict[int, AnomalyScores] = {}
    scalers: dict[int, TaskScaler] = {}
    skipped: list[SkippedTask] = []
    for t in range(task_labels.shape[1]):
        y_past = task_labels[:n, t]
        y_recent = task_labels[n:, t]
        if np.unique(y_past).size < 2:
            skipped.append(SkippedTask(task=t, reason="single-class past labels"))
            continue
        model = prepare_model(past.X, y_past, cfg)
        recent_raw, train_raw = score_with_model(model, recent.X, y_recent, cfg)[
            "softhad"
        ]
        scaler = fit_task_scaler(train_raw)
        tasks[t] = AnomalyScores.from_raw(
            recent_raw, apply_task_scaler(scaler, recent_raw)
        )
        scalers[t] = scaler
    return MultiTaskScores(tasks=tasks, scalers=scalers, skipped=tuple(skipped))
